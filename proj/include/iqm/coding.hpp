// coding.hpp
// The coding rule machinery: a total, unambiguous map from the space-time
// regions of observed marks to exactly one spectrum value. Regions are
// axis-aligned space-time boxes, one box per expected mark, so disjointness
// of two regions is decidable by component-wise box intersection. Also holds
// the time-of-flight momentum computation p = m * d / dt.
#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "iqm/domain.hpp"
#include "iqm/errors.hpp"
#include "iqm/rng.hpp"
#include "iqm/spacetime.hpp"

namespace iqm {

// An outcome pair (value seen on subsystem 1, value seen on subsystem 2).
struct OutcomePair {
    double first = 0.0;
    double second = 0.0;
    friend bool operator==(const OutcomePair& a, const OutcomePair& b) {
        return a.first == b.first && a.second == b.second;
    }
};

// One value of a discrete spectrum: a scalar, a 3-vector (e.g. a momentum
// bin), or an outcome pair for two-system measurements.
struct SpectrumValue {
    int index = 1;  // contiguous, 1-based
    std::variant<double, Vec3, OutcomePair> value = 0.0;
    std::string label;

    bool is_scalar() const { return std::holds_alternative<double>(value); }
    bool is_pair() const { return std::holds_alternative<OutcomePair>(value); }
    double scalar() const { return std::get<double>(value); }
    const Vec3& vec() const { return std::get<Vec3>(value); }
    const OutcomePair& pair() const { return std::get<OutcomePair>(value); }
};

// Region tuple bound to one spectrum index: the k-th expected mark of a
// MarkSet must fall in boxes[k].
struct CodingRegion {
    std::string region_id;
    int spectrum_index = 1;
    std::vector<SpaceTimeBox> boxes;

    bool contains(const MarkSet& ms) const {
        if (ms.marks.size() != boxes.size()) return false;
        for (std::size_t k = 0; k < boxes.size(); ++k)
            if (!boxes[k].contains(ms.marks[k].coord)) return false;
        return true;
    }

    // Two region tuples are disjoint iff some corresponding box pair is.
    bool overlaps(const CodingRegion& o) const {
        if (boxes.size() != o.boxes.size()) return false;
        for (std::size_t k = 0; k < boxes.size(); ++k)
            if (!boxes[k].intersects(o.boxes[k])) return false;
        return true;
    }
};

struct CodingRule {
    std::string measurement_label;
    std::vector<SpectrumValue> spectrum;  // indices contiguous 1..k
    std::vector<CodingRegion> regions;

    const SpectrumValue& value_at(int index) const {
        for (const auto& v : spectrum)
            if (v.index == index) return v;
        throw AmbiguousCoding("spectrum index " + std::to_string(index) + " not in rule '" +
                              measurement_label + "'");
    }
};

// Pure: the unique spectrum value whose region tuple contains every mark.
inline SpectrumValue code(const CodingRule& rule, const MarkSet& ms) {
    if (ms.measurement_label != rule.measurement_label)
        throw IncompatibleMeasurementSpec("mark set labelled '" + ms.measurement_label +
                                          "' fed to rule '" + rule.measurement_label + "'");
    const CodingRegion* hit = nullptr;
    for (const auto& region : rule.regions) {
        if (!region.contains(ms)) continue;
        if (hit != nullptr)
            throw AmbiguousCoding("marks match regions '" + hit->region_id + "' and '" +
                                  region.region_id + "'");
        hit = &region;
    }
    if (hit == nullptr) {
        std::ostringstream os;
        os << "no region of rule '" << rule.measurement_label << "' matches mark set (";
        for (const auto& m : ms.marks)
            os << "[" << m.register_id << " " << m.coord.x << "," << m.coord.y << "," << m.coord.z
               << "," << m.coord.t << "]";
        os << ")";
        throw UncodableMarkSet(os.str());
    }
    return rule.value_at(hit->spectrum_index);
}

// Time-of-flight momentum: p = m * d / (t - t0), with d the displacement of
// the impact mark and t read off the chronometer mark.
inline Vec3 tof_momentum(const Mark& impact, double t0, const Mark& chrono, double mass) {
    double dt = chrono.coord.t - t0;
    if (!(dt > 0.0))
        throw NonPositiveFlightTime("flight time " + std::to_string(dt) + " is not positive");
    Vec3 d{impact.coord.x, impact.coord.y, impact.coord.z};
    return (mass / dt) * d;
}

struct ValidationReport {
    bool disjoint = true;
    std::vector<std::pair<std::string, std::string>> overlapping_regions;
    std::uint64_t fuzz_samples = 0;
    std::uint64_t uncodable = 0;
    std::uint64_t ambiguous = 0;

    bool passed() const { return disjoint && uncodable == 0 && ambiguous == 0; }
    double uncodable_rate() const {
        return fuzz_samples == 0 ? 0.0 : static_cast<double>(uncodable) / static_cast<double>(fuzz_samples);
    }
};

// Disjointness check plus a fuzz totality check against mark sets the world
// actually emits for (g, mes). Failures are reported, not thrown.
template <class WorldT>
ValidationReport validate_rule(const CodingRule& rule, const WorldT& world, const GenerationOp& g,
                               const MeasurementSpec& mes, std::uint64_t fuzz_n,
                               std::uint64_t seed = 0x51ab5eedULL) {
    ValidationReport report;
    for (std::size_t i = 0; i < rule.regions.size(); ++i) {
        for (std::size_t j = i + 1; j < rule.regions.size(); ++j) {
            const auto& a = rule.regions[i];
            const auto& b = rule.regions[j];
            if (a.spectrum_index != b.spectrum_index && a.overlaps(b)) {
                report.disjoint = false;
                report.overlapping_regions.emplace_back(a.region_id, b.region_id);
            }
        }
    }
    report.fuzz_samples = fuzz_n;
    for (std::uint64_t i = 0; i < fuzz_n; ++i) {
        RandomSource rng = RandomSource::for_index(seed, i);
        auto ex = world.generate_exemplar(g, rng);
        MarkSet ms = world.measure_exemplar(ex, mes, rng);
        int hits = 0;
        for (const auto& region : rule.regions)
            if (region.contains(ms)) ++hits;
        if (hits == 0) ++report.uncodable;
        if (hits > 1) ++report.ambiguous;
    }
    return report;
}

}  // namespace iqm
