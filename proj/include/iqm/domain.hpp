// domain.hpp
// The records exchanged between worlds, coding rules and the protocol runner:
// generation operations, measurement specs, marks. A GenerationOp is a value;
// two ops with equal (world_id, label, params) denote the same operation and
// must induce the same hidden distribution.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iqm/errors.hpp"
#include "iqm/spacetime.hpp"

namespace iqm {

using ParamMap = std::map<std::string, double>;

inline double param_or(const ParamMap& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

// Macroscopic parameter record labelling a reproducible state-generation
// procedure. Identity is the (world_id, label, params) triple.
struct GenerationOp {
    std::string world_id;
    std::string label;
    ParamMap params;
    SpaceTimeSupport spacetime_support;

    friend bool operator==(const GenerationOp& a, const GenerationOp& b) {
        return a.world_id == b.world_id && a.label == b.label && a.params == b.params;
    }
    friend bool operator!=(const GenerationOp& a, const GenerationOp& b) { return !(a == b); }
};

// External conditions a generation op can be left to evolve under.
struct EnvironmentSpec {
    std::string label;  // "none", "free_flight", "larmor", ...
    ParamMap params;
};

// One measurement interaction, identified by a family label plus numeric
// parameters. Pair measurements carry per-subsystem settings (ax..az, bx..bz)
// and event coordinates (t1, t2, pos1_*, pos2_*).
struct MeasurementSpec {
    std::string label;
    ParamMap params;

    double get(const std::string& key, double fallback) const { return param_or(params, key, fallback); }

    Vec3 axis(const std::string& prefix) const {
        return Vec3{get(prefix + "x", 0.0), get(prefix + "y", 0.0), get(prefix + "z", 0.0)};
    }
    MeasurementSpec& set_axis(const std::string& prefix, const Vec3& v) {
        params[prefix + "x"] = v.x;
        params[prefix + "y"] = v.y;
        params[prefix + "z"] = v.z;
        return *this;
    }
};

// Builds the pair-spin measurement used by the two-system worlds.
inline MeasurementSpec pair_spin_spec(const Vec3& a, const Vec3& b, double t1 = 1.0, double t2 = 1.0,
                                      const Vec3& pos1 = {-1.0, 0.0, 0.0},
                                      const Vec3& pos2 = {1.0, 0.0, 0.0}) {
    MeasurementSpec mes;
    mes.label = "spin_pair";
    mes.set_axis("a", a);
    mes.set_axis("b", b);
    mes.params["t1"] = t1;
    mes.params["t2"] = t2;
    mes.params["pos1_x"] = pos1.x;
    mes.params["pos1_y"] = pos1.y;
    mes.params["pos1_z"] = pos1.z;
    mes.params["pos2_x"] = pos2.x;
    mes.params["pos2_y"] = pos2.y;
    mes.params["pos2_z"] = pos2.z;
    return mes;
}

// One observable manifestation on an apparatus register.
struct Mark {
    std::string register_id;
    SpaceTimeCoord coord;
    std::optional<double> payload;
};

// The raw output of one measurement interaction: an ordered group of marks.
struct MarkSet {
    std::vector<Mark> marks;
    std::string measurement_label;
};

}  // namespace iqm
