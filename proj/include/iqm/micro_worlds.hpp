// micro_worlds.hpp
// Hidden-state oracles that can be interrogated only through generation and
// measurement: a world hands out exemplars whose hidden payload is private to
// the World implementations, and a measurement consumes the exemplar and
// leaves nothing but marks on registers. Seven concrete worlds with
// closed-form outcome laws:
//
//   classical_die      fair k-sided die, deterministic readout
//   qubit              Bloch-angle preparations, Pauli views, Larmor evolution
//   singlet_pair       two-system singlet, joint spin measurements
//   coin_pair          two independent fair coins (product law by construction)
//   free_particle      Gaussian packet; position and time-of-flight momentum
//   double_slit        composed generation with idealized fringe law
//   influence_contrast LHV imitation of the singlet plus a finite-speed
//                      influence message between the two measurement events
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "iqm/coding.hpp"
#include "iqm/domain.hpp"
#include "iqm/errors.hpp"
#include "iqm/quantum.hpp"
#include "iqm/rng.hpp"

namespace iqm {

struct WorldSpec {
    std::string kind;
    std::string id;  // defaults to kind
    ParamMap params;
};

struct CatalogEntry {
    MeasurementSpec spec;
    std::string compatibility_class_id;
};

namespace detail {

inline std::atomic<std::uint64_t> exemplar_counter{1};

struct DieFace {
    int face = 1;
};
struct SingletTag {};
struct CoinFaces {
    int s1 = 1, s2 = 1;
};
struct PhaseSpacePoint {
    double x0 = 0.0;  // initial position offset, independent of p
    double p = 0.0;
};
struct SlitConfig {
    double w1 = 1.0, w2 = 0.0;  // amplitude weights of the two routes
    double phase = 0.0;
};
struct LambdaVector {
    Vec3 lambda;
};

using HiddenPayload = std::variant<DieFace, QubitState, SingletTag, CoinFaces, PhaseSpacePoint,
                                   SlitConfig, LambdaVector>;

inline void reject_unknown_params(const ParamMap& params, std::initializer_list<const char*> allowed,
                                  const std::string& context) {
    for (const auto& [key, value] : params) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok)
            throw InvalidGenerationParams("parameter '" + key + "' not accepted by " + context);
        if (!std::isfinite(value))
            throw InvalidGenerationParams("parameter '" + key + "' of " + context + " is not finite");
    }
}

inline SpaceTimeBox deflection_zone(int sign) {
    SpaceTimeBox box;
    if (sign > 0)
        box.clamp_axis(2, 0.5, 1.5);
    else
        box.clamp_axis(2, -1.5, -0.5);
    return box;
}

}  // namespace detail

// Single-owner token for one generated micro-state exemplar. The hidden
// payload is readable only by World implementations; consumption is one-way,
// and the type is move-only so a copy cannot resurrect a consumed exemplar.
class HiddenExemplar {
public:
    HiddenExemplar(const HiddenExemplar&) = delete;
    HiddenExemplar& operator=(const HiddenExemplar&) = delete;
    HiddenExemplar(HiddenExemplar&&) = default;
    HiddenExemplar& operator=(HiddenExemplar&&) = default;

    std::uint64_t exemplar_id() const { return id_; }
    const GenerationOp& origin() const { return origin_; }
    bool consumed() const { return consumed_; }

private:
    friend class World;
    HiddenExemplar(std::uint64_t id, const GenerationOp& origin, detail::HiddenPayload payload)
        : id_(id), origin_(origin), payload_(std::move(payload)) {}

    std::uint64_t id_;
    GenerationOp origin_;
    detail::HiddenPayload payload_;
    bool consumed_ = false;
};

class World {
public:
    explicit World(WorldSpec spec) : spec_(std::move(spec)) {
        if (spec_.id.empty()) spec_.id = spec_.kind;
    }
    virtual ~World() = default;

    const WorldSpec& spec() const { return spec_; }
    const std::string& id() const { return spec_.id; }
    const std::string& kind() const { return spec_.kind; }

    HiddenExemplar generate_exemplar(const GenerationOp& g, RandomSource& rng) const {
        if (g.world_id != id())
            throw UnknownWorld("generation op addresses world '" + g.world_id + "', this is '" +
                               id() + "'");
        if (!g.spacetime_support.valid())
            throw InvalidGenerationParams("spacetime support of '" + g.label +
                                          "' has negative extent or duration");
        return HiddenExemplar(detail::exemplar_counter.fetch_add(1, std::memory_order_relaxed), g,
                              generate_impl(g, rng));
    }

    MarkSet measure_exemplar(HiddenExemplar& ex, const MeasurementSpec& mes, RandomSource& rng) const {
        if (ex.consumed_)
            throw ExemplarAlreadyConsumed("exemplar " + std::to_string(ex.id_) +
                                          " has already been measured");
        if (ex.origin_.world_id != id())
            throw UnknownWorld("exemplar from world '" + ex.origin_.world_id + "' fed to '" + id() + "'");
        check_measurement(mes);
        ex.consumed_ = true;
        return measure_impl(ex.payload_, ex.origin_, mes, rng);
    }

    virtual std::vector<CatalogEntry> view_catalog() const = 0;
    virtual std::string compatibility_class(const MeasurementSpec& mes) const = 0;
    virtual GenerationOp canonical_generation() const = 0;
    virtual CodingRule make_rule(const MeasurementSpec& mes) const = 0;

    // Worlds whose statistics are time-independent evolve trivially under
    // field-free conditions; anything else is up to the concrete world.
    virtual GenerationOp evolve(const GenerationOp& g, const EnvironmentSpec& ce, double dt) const {
        (void)dt;
        if (ce.label == "none") return g;
        throw UnsupportedEnvironment("world '" + id() + "' does not evolve under '" + ce.label + "'");
    }

    virtual bool is_composition(const GenerationOp& g12, const GenerationOp& g1,
                                const GenerationOp& g2) const {
        (void)g12;
        (void)g1;
        (void)g2;
        return false;
    }

protected:
    // Throws IncompatibleMeasurementSpec when mes is not in this world's catalog.
    virtual void check_measurement(const MeasurementSpec& mes) const = 0;
    virtual detail::HiddenPayload generate_impl(const GenerationOp& g, RandomSource& rng) const = 0;
    virtual MarkSet measure_impl(const detail::HiddenPayload& payload, const GenerationOp& origin,
                                 const MeasurementSpec& mes, RandomSource& rng) const = 0;

    GenerationOp base_op(const std::string& label) const {
        GenerationOp g;
        g.world_id = id();
        g.label = label;
        return g;
    }

    [[noreturn]] void unknown_measurement(const MeasurementSpec& mes) const {
        throw IncompatibleMeasurementSpec("measurement '" + mes.label + "' not in catalog of world '" +
                                          id() + "'");
    }

private:
    WorldSpec spec_;
};

using WorldHandle = std::shared_ptr<const World>;

namespace detail {

inline Mark spin_mark(const std::string& reg, const Vec3& pos, double t, int sign) {
    return Mark{reg, SpaceTimeCoord{pos.x, pos.y, sign > 0 ? 1.0 : -1.0, t}, std::nullopt};
}

inline CodingRule pair_spin_rule(const std::string& measurement_label) {
    CodingRule rule;
    rule.measurement_label = measurement_label;
    const int signs[2] = {+1, -1};
    int index = 1;
    for (int s1 : signs) {
        for (int s2 : signs) {
            SpectrumValue v;
            v.index = index;
            v.value = OutcomePair{static_cast<double>(s1), static_cast<double>(s2)};
            v.label = std::string("(") + (s1 > 0 ? "+" : "-") + "," + (s2 > 0 ? "+" : "-") + ")";
            rule.spectrum.push_back(v);
            CodingRegion region;
            region.region_id = v.label;
            region.spectrum_index = index;
            region.boxes = {deflection_zone(s1), deflection_zone(s2)};
            rule.regions.push_back(region);
            ++index;
        }
    }
    return rule;
}

inline CodingRule two_zone_rule(const std::string& measurement_label) {
    CodingRule rule;
    rule.measurement_label = measurement_label;
    rule.spectrum = {SpectrumValue{1, 1.0, "+1"}, SpectrumValue{2, -1.0, "-1"}};
    rule.regions = {CodingRegion{"upper", 1, {deflection_zone(+1)}},
                    CodingRegion{"lower", 2, {deflection_zone(-1)}}};
    return rule;
}

// Uniform scalar binning of one space-time axis into `bins` regions whose two
// edge bins are open-ended, so every conceivable mark is codable.
inline CodingRule binned_axis_rule(const std::string& measurement_label, std::size_t axis,
                                   double center, double halfwidth, int bins,
                                   bool momentum_values = false, double mass_over_time = 1.0) {
    CodingRule rule;
    rule.measurement_label = measurement_label;
    double lo = center - halfwidth;
    double width = 2.0 * halfwidth / bins;
    for (int j = 1; j <= bins; ++j) {
        double a = lo + (j - 1) * width;
        double b = lo + j * width;
        double mid = 0.5 * (a + b);
        SpectrumValue v;
        v.index = j;
        if (momentum_values)
            v.value = Vec3{mass_over_time * mid, 0.0, 0.0};
        else
            v.value = mid;
        v.label = "bin_" + std::to_string(j);
        rule.spectrum.push_back(v);

        CodingRegion region;
        region.region_id = v.label;
        region.spectrum_index = j;
        SpaceTimeBox box;
        box.clamp_axis(axis, j == 1 ? -kUnbounded : a, j == bins ? kUnbounded : b);
        region.boxes.push_back(box);
        if (momentum_values) region.boxes.push_back(SpaceTimeBox::everywhere());  // chronometer mark
        rule.regions.push_back(region);
    }
    return rule;
}

}  // namespace detail

// ---------------------------------------------------------------------------

class DieWorld final : public World {
public:
    explicit DieWorld(WorldSpec spec) : World(std::move(spec)) {
        detail::reject_unknown_params(this->spec().params, {"faces"}, "world 'classical_die'");
        faces_ = static_cast<int>(param_or(this->spec().params, "faces", 6.0));
        if (faces_ < 2)
            throw InvalidGenerationParams("parameter 'faces' must be >= 2");
    }

    int faces() const { return faces_; }

    std::vector<CatalogEntry> view_catalog() const override {
        return {{MeasurementSpec{"read", {}}, "read"}};
    }
    std::string compatibility_class(const MeasurementSpec& mes) const override {
        if (mes.label != "read") unknown_measurement(mes);
        return "read";
    }
    GenerationOp canonical_generation() const override { return base_op("cast"); }

    CodingRule make_rule(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        CodingRule rule;
        rule.measurement_label = "read";
        for (int j = 1; j <= faces_; ++j) {
            rule.spectrum.push_back(SpectrumValue{j, static_cast<double>(j), std::to_string(j)});
            CodingRegion region;
            region.region_id = "face_" + std::to_string(j);
            region.spectrum_index = j;
            SpaceTimeBox box;
            box.clamp_axis(0, j - 0.5, j + 0.5);
            region.boxes.push_back(box);
            rule.regions.push_back(region);
        }
        return rule;
    }

protected:
    void check_measurement(const MeasurementSpec& mes) const override {
        if (mes.label != "read") unknown_measurement(mes);
    }

    detail::HiddenPayload generate_impl(const GenerationOp& g, RandomSource& rng) const override {
        if (g.label != "cast")
            throw InvalidGenerationParams("world 'classical_die' only generates via 'cast', got '" +
                                          g.label + "'");
        detail::reject_unknown_params(g.params, {}, "generation 'cast'");
        return detail::DieFace{1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(faces_)))};
    }

    MarkSet measure_impl(const detail::HiddenPayload& payload, const GenerationOp&,
                         const MeasurementSpec& mes, RandomSource&) const override {
        int face = std::get<detail::DieFace>(payload).face;
        MarkSet ms;
        ms.measurement_label = "read";
        ms.marks.push_back(
            Mark{"die_zone", SpaceTimeCoord{static_cast<double>(face), 0.0, 0.0, mes.get("t", 1.0)},
                 std::nullopt});
        return ms;
    }

private:
    int faces_ = 6;
};

// ---------------------------------------------------------------------------

class QubitWorld final : public World {
public:
    explicit QubitWorld(WorldSpec spec) : World(std::move(spec)) {
        detail::reject_unknown_params(this->spec().params, {}, "world 'qubit'");
    }

    std::vector<CatalogEntry> view_catalog() const override {
        return {{MeasurementSpec{"sigma_x", {}}, "sigma_x"},
                {MeasurementSpec{"sigma_y", {}}, "sigma_y"},
                {MeasurementSpec{"sigma_z", {}}, "sigma_z"}};
    }

    std::string compatibility_class(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return mes.label;
    }

    GenerationOp canonical_generation() const override {
        GenerationOp g = base_op("prepare");
        g.params["theta"] = 0.0;
        g.params["phi"] = 0.0;
        return g;
    }

    CodingRule make_rule(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return detail::two_zone_rule(mes.label);
    }

    GenerationOp evolve(const GenerationOp& g, const EnvironmentSpec& ce, double dt) const override {
        if (ce.label == "none") return g;
        if (ce.label != "larmor")
            throw UnsupportedEnvironment("world 'qubit' does not evolve under '" + ce.label + "'");
        Vec3 omega{param_or(ce.params, "wx", 0.0), param_or(ce.params, "wy", 0.0),
                   param_or(ce.params, "wz", 0.0)};
        double rate = omega.norm();
        if (rate == 0.0 || dt == 0.0) return g;
        QubitState state = state_of(g);
        QubitState evolved = rotate(state, omega.normalized(), rate * dt);
        auto [theta, phi] = bloch_angles(evolved);
        GenerationOp out = g;
        out.params["theta"] = theta;
        out.params["phi"] = phi;
        return out;
    }

protected:
    void check_measurement(const MeasurementSpec& mes) const override {
        if (mes.label != "sigma_x" && mes.label != "sigma_y" && mes.label != "sigma_z")
            unknown_measurement(mes);
    }

    detail::HiddenPayload generate_impl(const GenerationOp& g, RandomSource&) const override {
        return state_of(g);
    }

    MarkSet measure_impl(const detail::HiddenPayload& payload, const GenerationOp&,
                         const MeasurementSpec& mes, RandomSource& rng) const override {
        const QubitState& state = std::get<QubitState>(payload);
        Vec3 axis{0.0, 0.0, 1.0};
        if (mes.label == "sigma_x") axis = {1.0, 0.0, 0.0};
        if (mes.label == "sigma_y") axis = {0.0, 1.0, 0.0};
        int outcome = rng.bernoulli(prob_plus(state, axis)) ? +1 : -1;
        MarkSet ms;
        ms.measurement_label = mes.label;
        ms.marks.push_back(detail::spin_mark("sg_screen", Vec3{0.0, 0.0, 0.0}, mes.get("t", 1.0), outcome));
        return ms;
    }

private:
    static QubitState state_of(const GenerationOp& g) {
        if (g.label != "prepare")
            throw InvalidGenerationParams("world 'qubit' only generates via 'prepare', got '" +
                                          g.label + "'");
        detail::reject_unknown_params(g.params, {"theta", "phi"}, "generation 'prepare'");
        return qubit_from_bloch(param_or(g.params, "theta", 0.0), param_or(g.params, "phi", 0.0));
    }
};

// ---------------------------------------------------------------------------

namespace detail {

// Shared by singlet_pair and influence_contrast: both expose the complete
// pair measurement family under a single compatibility class.
inline std::vector<CatalogEntry> pair_catalog() {
    return {{pair_spin_spec(Vec3{0, 0, 1}, Vec3{0, 0, 1}), "spin_pair"}};
}

inline void require_pair_axes(const MeasurementSpec& mes) {
    if (mes.axis("a").norm() < 1e-12 || mes.axis("b").norm() < 1e-12)
        throw IncompatibleMeasurementSpec("pair measurement needs non-zero settings a and b");
}

inline MarkSet pair_marks(const MeasurementSpec& mes, int s1, int s2) {
    Vec3 pos1{mes.get("pos1_x", -1.0), mes.get("pos1_y", 0.0), mes.get("pos1_z", 0.0)};
    Vec3 pos2{mes.get("pos2_x", 1.0), mes.get("pos2_y", 0.0), mes.get("pos2_z", 0.0)};
    MarkSet ms;
    ms.measurement_label = mes.label;
    ms.marks.push_back(spin_mark("A1", pos1, mes.get("t1", 1.0), s1));
    ms.marks.push_back(spin_mark("A2", pos2, mes.get("t2", 1.0), s2));
    return ms;
}

}  // namespace detail

class SingletWorld final : public World {
public:
    explicit SingletWorld(WorldSpec spec) : World(std::move(spec)) {
        detail::reject_unknown_params(this->spec().params, {}, "world 'singlet_pair'");
    }

    std::vector<CatalogEntry> view_catalog() const override { return detail::pair_catalog(); }
    std::string compatibility_class(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return "spin_pair";
    }
    GenerationOp canonical_generation() const override { return base_op("decay"); }
    CodingRule make_rule(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return detail::pair_spin_rule("spin_pair");
    }

protected:
    void check_measurement(const MeasurementSpec& mes) const override {
        if (mes.label != "spin_pair") unknown_measurement(mes);
        detail::require_pair_axes(mes);
    }

    detail::HiddenPayload generate_impl(const GenerationOp& g, RandomSource&) const override {
        if (g.label != "decay")
            throw InvalidGenerationParams("world 'singlet_pair' only generates via 'decay', got '" +
                                          g.label + "'");
        detail::reject_unknown_params(g.params, {}, "generation 'decay'");
        return detail::SingletTag{};
    }

    MarkSet measure_impl(const detail::HiddenPayload&, const GenerationOp&,
                         const MeasurementSpec& mes, RandomSource& rng) const override {
        auto joint = singlet_joint_probs(mes.axis("a"), mes.axis("b"));
        double u = rng.uniform();
        int cell = 3;
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
            acc += joint[static_cast<std::size_t>(k)];
            if (u < acc) {
                cell = k;
                break;
            }
        }
        int s1 = cell < 2 ? +1 : -1;
        int s2 = (cell % 2 == 0) ? +1 : -1;
        return detail::pair_marks(mes, s1, s2);
    }
};

// ---------------------------------------------------------------------------

class CoinPairWorld final : public World {
public:
    explicit CoinPairWorld(WorldSpec spec) : World(std::move(spec)) {
        detail::reject_unknown_params(this->spec().params, {}, "world 'coin_pair'");
    }

    std::vector<CatalogEntry> view_catalog() const override {
        return {{MeasurementSpec{"read_pair", {}}, "read_pair"}};
    }
    std::string compatibility_class(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return "read_pair";
    }
    GenerationOp canonical_generation() const override { return base_op("toss"); }
    CodingRule make_rule(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return detail::pair_spin_rule("read_pair");
    }

protected:
    void check_measurement(const MeasurementSpec& mes) const override {
        if (mes.label != "read_pair") unknown_measurement(mes);
    }

    detail::HiddenPayload generate_impl(const GenerationOp& g, RandomSource& rng) const override {
        if (g.label != "toss")
            throw InvalidGenerationParams("world 'coin_pair' only generates via 'toss', got '" +
                                          g.label + "'");
        detail::reject_unknown_params(g.params, {}, "generation 'toss'");
        detail::CoinFaces c;
        c.s1 = rng.bernoulli(0.5) ? +1 : -1;
        c.s2 = rng.bernoulli(0.5) ? +1 : -1;
        return c;
    }

    MarkSet measure_impl(const detail::HiddenPayload& payload, const GenerationOp&,
                         const MeasurementSpec& mes, RandomSource&) const override {
        const auto& c = std::get<detail::CoinFaces>(payload);
        return detail::pair_marks(mes, c.s1, c.s2);
    }
};

// ---------------------------------------------------------------------------

class FreeParticleWorld final : public World {
public:
    explicit FreeParticleWorld(WorldSpec spec) : World(std::move(spec)) {
        detail::reject_unknown_params(this->spec().params, {"mass", "mean_momentum", "sigma_p"},
                                      "world 'free_particle'");
        mass_ = param_or(this->spec().params, "mass", 1.0);
        p0_ = param_or(this->spec().params, "mean_momentum", 1.0);
        sigma_p_ = param_or(this->spec().params, "sigma_p", 1.0);
        if (!(mass_ > 0.0)) throw InvalidGenerationParams("parameter 'mass' must be > 0");
        if (!(sigma_p_ > 0.0)) throw InvalidGenerationParams("parameter 'sigma_p' must be > 0");
    }

    double mass() const { return mass_; }
    double mean_momentum() const { return p0_; }
    double sigma_p() const { return sigma_p_; }
    double sigma_x0() const { return 0.5 / sigma_p_; }  // minimum-uncertainty packet, hbar = 1

    std::vector<CatalogEntry> view_catalog() const override {
        MeasurementSpec pos{"position", {{"t", 1.0}}};
        MeasurementSpec mom{"momentum_tof", {{"flight_time", 8.0}}};
        return {{pos, "position"}, {mom, "momentum_tof"}};
    }

    std::string compatibility_class(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return mes.label;
    }

    GenerationOp canonical_generation() const override { return base_op("emit"); }

    CodingRule make_rule(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        int bins = static_cast<int>(mes.get("bins", 32.0));
        if (bins < 2) throw IncompatibleMeasurementSpec("'bins' must be >= 2");
        if (mes.label == "position") {
            double t = mes.get("t", 1.0);
            double center = mes.get("center", p0_ * t / mass_);
            double sigma = std::sqrt(sigma_x0() * sigma_x0() + std::pow(sigma_p_ * t / mass_, 2));
            double halfwidth = mes.get("halfwidth", 4.0 * sigma);
            return detail::binned_axis_rule("position", 0, center, halfwidth, bins);
        }
        double flight = mes.get("flight_time", 8.0);
        if (!(flight > 0.0)) throw IncompatibleMeasurementSpec("'flight_time' must be > 0");
        double center_p = mes.get("center", p0_);
        double halfwidth_p = mes.get("halfwidth", 4.0 * sigma_p_);
        // Bins live on the impact axis; values are the momenta their centers
        // code for under p = m * d / dt.
        return detail::binned_axis_rule("momentum_tof", 0, center_p * flight / mass_,
                                        halfwidth_p * flight / mass_, bins, true, mass_ / flight);
    }

    GenerationOp evolve(const GenerationOp& g, const EnvironmentSpec& ce, double dt) const override {
        if (ce.label != "none" && ce.label != "free_flight")
            throw UnsupportedEnvironment("world 'free_particle' does not evolve under '" + ce.label +
                                         "'");
        if (dt < 0.0) throw UnsupportedEnvironment("negative evolution duration");
        if (dt == 0.0) return g;
        GenerationOp out = g;
        out.params["elapsed"] = param_or(g.params, "elapsed", 0.0) + dt;
        return out;
    }

protected:
    void check_measurement(const MeasurementSpec& mes) const override {
        if (mes.label != "position" && mes.label != "momentum_tof") unknown_measurement(mes);
    }

    detail::HiddenPayload generate_impl(const GenerationOp& g, RandomSource& rng) const override {
        if (g.label != "emit")
            throw InvalidGenerationParams("world 'free_particle' only generates via 'emit', got '" +
                                          g.label + "'");
        detail::reject_unknown_params(g.params, {"elapsed"}, "generation 'emit'");
        if (param_or(g.params, "elapsed", 0.0) < 0.0)
            throw InvalidGenerationParams("parameter 'elapsed' must be >= 0");
        detail::PhaseSpacePoint pt;
        pt.x0 = rng.normal(0.0, sigma_x0());
        pt.p = rng.normal(p0_, sigma_p_);
        return pt;
    }

    MarkSet measure_impl(const detail::HiddenPayload& payload, const GenerationOp& origin,
                         const MeasurementSpec& mes, RandomSource&) const override {
        const auto& pt = std::get<detail::PhaseSpacePoint>(payload);
        double elapsed = param_or(origin.params, "elapsed", 0.0);
        MarkSet ms;
        ms.measurement_label = mes.label;
        if (mes.label == "position") {
            double t = mes.get("t", 1.0);
            double x = pt.x0 + pt.p * (elapsed + t) / mass_;
            ms.marks.push_back(Mark{"screen", SpaceTimeCoord{x, 0.0, 0.0, t}, std::nullopt});
            return ms;
        }
        double flight = mes.get("flight_time", 8.0);
        if (!(flight > 0.0)) throw IncompatibleMeasurementSpec("'flight_time' must be > 0");
        double x = pt.x0 + pt.p * (elapsed + flight) / mass_;
        ms.marks.push_back(Mark{"screen", SpaceTimeCoord{x, 0.0, 0.0, flight}, std::nullopt});
        ms.marks.push_back(Mark{"chrono", SpaceTimeCoord{0.0, 0.0, 0.0, flight}, std::nullopt});
        return ms;
    }

private:
    double mass_ = 1.0;
    double p0_ = 1.0;
    double sigma_p_ = 1.0;
};

// ---------------------------------------------------------------------------

class DoubleSlitWorld final : public World {
public:
    explicit DoubleSlitWorld(WorldSpec spec) : World(std::move(spec)) {
        detail::reject_unknown_params(this->spec().params,
                                      {"slit_separation", "wavelength", "screen_distance", "n_fringes"},
                                      "world 'double_slit'");
        double d = param_or(this->spec().params, "slit_separation", 1.0);
        double lam = param_or(this->spec().params, "wavelength", 0.5);
        double dist = param_or(this->spec().params, "screen_distance", 2.0);
        n_fringes_ = static_cast<int>(param_or(this->spec().params, "n_fringes", 2.0));
        if (!(d > 0.0)) throw InvalidGenerationParams("parameter 'slit_separation' must be > 0");
        if (!(lam > 0.0)) throw InvalidGenerationParams("parameter 'wavelength' must be > 0");
        if (!(dist > 0.0)) throw InvalidGenerationParams("parameter 'screen_distance' must be > 0");
        if (n_fringes_ < 1) throw InvalidGenerationParams("parameter 'n_fringes' must be >= 1");
        fringe_period_ = lam * dist / d;
    }

    // Far-field idealization: each slit alone illuminates the window
    // uniformly; both together modulate it by 1 + v cos(2 pi x / period).
    double fringe_period() const { return fringe_period_; }
    double window_width() const { return n_fringes_ * fringe_period_; }

    std::vector<CatalogEntry> view_catalog() const override {
        return {{MeasurementSpec{"screen", {{"bins", 32.0}}}, "screen"}};
    }
    std::string compatibility_class(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return "screen";
    }
    GenerationOp canonical_generation() const override {
        GenerationOp g = base_op("both");
        g.params = {{"open1", 1.0}, {"open2", 1.0}, {"relative_phase", 0.0}, {"amplitude_ratio", 1.0}};
        return g;
    }

    CodingRule make_rule(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        int bins = static_cast<int>(mes.get("bins", 32.0));
        if (bins < 2) throw IncompatibleMeasurementSpec("'bins' must be >= 2");
        CodingRule rule = detail::binned_axis_rule("screen", 0, 0.0, window_width() / 2.0, bins);
        // marks never leave the window; pin the edge bins to it
        rule.regions.front().boxes[0].lo[0] = -window_width() / 2.0;
        rule.regions.back().boxes[0].hi[0] = window_width() / 2.0;
        return rule;
    }

    bool is_composition(const GenerationOp& g12, const GenerationOp& g1,
                        const GenerationOp& g2) const override {
        return g12.world_id == id() && g1.world_id == id() && g2.world_id == id() &&
               g12.label == "both" && g1.label == "slit1" && g2.label == "slit2";
    }

protected:
    void check_measurement(const MeasurementSpec& mes) const override {
        if (mes.label != "screen") unknown_measurement(mes);
    }

    detail::HiddenPayload generate_impl(const GenerationOp& g, RandomSource&) const override {
        detail::SlitConfig cfg;
        if (g.label == "slit1") {
            detail::reject_unknown_params(g.params, {}, "generation 'slit1'");
            cfg.w1 = 1.0;
            cfg.w2 = 0.0;
        } else if (g.label == "slit2") {
            detail::reject_unknown_params(g.params, {}, "generation 'slit2'");
            cfg.w1 = 0.0;
            cfg.w2 = 1.0;
        } else if (g.label == "both") {
            detail::reject_unknown_params(g.params, {"open1", "open2", "relative_phase", "amplitude_ratio"},
                                          "generation 'both'");
            double ratio = param_or(g.params, "amplitude_ratio", 1.0);
            if (!(ratio >= 0.0)) throw InvalidGenerationParams("parameter 'amplitude_ratio' must be >= 0");
            cfg.w1 = param_or(g.params, "open1", 1.0) > 0.0 ? 1.0 : 0.0;
            cfg.w2 = param_or(g.params, "open2", 1.0) > 0.0 ? ratio : 0.0;
            cfg.phase = param_or(g.params, "relative_phase", 0.0);
            if (cfg.w1 == 0.0 && cfg.w2 == 0.0)
                throw InvalidGenerationParams("parameter 'open1'/'open2': at least one slit must be open");
        } else {
            throw InvalidGenerationParams(
                "world 'double_slit' generates via 'slit1', 'slit2' or 'both', got '" + g.label + "'");
        }
        return cfg;
    }

    MarkSet measure_impl(const detail::HiddenPayload& payload, const GenerationOp&,
                         const MeasurementSpec& mes, RandomSource& rng) const override {
        const auto& cfg = std::get<detail::SlitConfig>(payload);
        const double w = window_width();
        double x = 0.0;
        if (cfg.w1 == 0.0 || cfg.w2 == 0.0) {
            x = rng.uniform(-w / 2.0, w / 2.0);
        } else {
            double vis = 2.0 * cfg.w1 * cfg.w2 / (cfg.w1 * cfg.w1 + cfg.w2 * cfg.w2);
            const double k = 6.283185307179586476925287 / fringe_period_;
            for (;;) {
                x = rng.uniform(-w / 2.0, w / 2.0);
                if (rng.uniform() * (1.0 + vis) <= 1.0 + vis * std::cos(k * x + cfg.phase)) break;
            }
        }
        MarkSet ms;
        ms.measurement_label = "screen";
        ms.marks.push_back(Mark{"screen", SpaceTimeCoord{x, 0.0, 0.0, mes.get("t", 1.0)}, std::nullopt});
        return ms;
    }

private:
    double fringe_period_ = 1.0;
    int n_fringes_ = 2;
};

// ---------------------------------------------------------------------------

class InfluenceContrastWorld final : public World {
public:
    explicit InfluenceContrastWorld(WorldSpec spec) : World(std::move(spec)) {
        detail::reject_unknown_params(this->spec().params, {"influence_speed", "coupling"},
                                      "world 'influence_contrast'");
        speed_ = param_or(this->spec().params, "influence_speed", 1.0);
        coupling_ = param_or(this->spec().params, "coupling", 1.0);
        if (!(speed_ > 0.0)) throw InvalidGenerationParams("parameter 'influence_speed' must be > 0");
        if (coupling_ < 0.0 || coupling_ > 1.0)
            throw InvalidGenerationParams("parameter 'coupling' must be in [0, 1]");
    }

    double influence_speed() const { return speed_; }

    std::vector<CatalogEntry> view_catalog() const override { return detail::pair_catalog(); }
    std::string compatibility_class(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return "spin_pair";
    }
    GenerationOp canonical_generation() const override { return base_op("decay"); }
    CodingRule make_rule(const MeasurementSpec& mes) const override {
        check_measurement(mes);
        return detail::pair_spin_rule("spin_pair");
    }

protected:
    void check_measurement(const MeasurementSpec& mes) const override {
        if (mes.label != "spin_pair") unknown_measurement(mes);
        detail::require_pair_axes(mes);
    }

    detail::HiddenPayload generate_impl(const GenerationOp& g, RandomSource& rng) const override {
        if (g.label != "decay")
            throw InvalidGenerationParams(
                "world 'influence_contrast' only generates via 'decay', got '" + g.label + "'");
        detail::reject_unknown_params(g.params, {}, "generation 'decay'");
        return detail::LambdaVector{rng.unit_vector()};
    }

    // Outcome at A1 is the local deterministic response sign(a.lambda). A
    // message (a, s1) leaves the A1 event at the world's influence speed; if
    // it reaches A2 before t2 the second outcome is drawn from the singlet
    // conditional law, otherwise A2 falls back to the local response
    // -sign(b.lambda), whose correlation is -1 + 2*theta/pi.
    MarkSet measure_impl(const detail::HiddenPayload& payload, const GenerationOp&,
                         const MeasurementSpec& mes, RandomSource& rng) const override {
        const Vec3 lambda = std::get<detail::LambdaVector>(payload).lambda;
        const Vec3 a = mes.axis("a");
        const Vec3 b = mes.axis("b");
        int s1 = a.dot(lambda) >= 0.0 ? +1 : -1;

        Vec3 pos1{mes.get("pos1_x", -1.0), mes.get("pos1_y", 0.0), mes.get("pos1_z", 0.0)};
        Vec3 pos2{mes.get("pos2_x", 1.0), mes.get("pos2_y", 0.0), mes.get("pos2_z", 0.0)};
        double t1 = mes.get("t1", 1.0);
        double t2 = mes.get("t2", 1.0);
        double arrival = t1 + (pos2 - pos1).norm() / speed_;

        bool heeded = arrival <= t2;
        if (heeded && coupling_ < 1.0) heeded = rng.bernoulli(coupling_);

        int s2;
        if (heeded) {
            auto joint = singlet_joint_probs(a, b);
            double p_plus_given_s1 =
                s1 > 0 ? joint[0] / (joint[0] + joint[1]) : joint[2] / (joint[2] + joint[3]);
            s2 = rng.bernoulli(p_plus_given_s1) ? +1 : -1;
        } else {
            s2 = b.dot(lambda) >= 0.0 ? -1 : +1;
        }
        return detail::pair_marks(mes, s1, s2);
    }

private:
    double speed_ = 1.0;
    double coupling_ = 1.0;
};

// ---------------------------------------------------------------------------

inline WorldHandle make_world(const WorldSpec& spec) {
    if (spec.kind == "classical_die") return std::make_shared<DieWorld>(spec);
    if (spec.kind == "qubit") return std::make_shared<QubitWorld>(spec);
    if (spec.kind == "singlet_pair") return std::make_shared<SingletWorld>(spec);
    if (spec.kind == "coin_pair") return std::make_shared<CoinPairWorld>(spec);
    if (spec.kind == "free_particle") return std::make_shared<FreeParticleWorld>(spec);
    if (spec.kind == "double_slit") return std::make_shared<DoubleSlitWorld>(spec);
    if (spec.kind == "influence_contrast") return std::make_shared<InfluenceContrastWorld>(spec);
    throw UnknownWorld("no world kind '" + spec.kind + "'");
}

inline std::vector<std::string> builtin_world_kinds() {
    return {"classical_die", "qubit",       "singlet_pair",      "coin_pair",
            "free_particle", "double_slit", "influence_contrast"};
}

}  // namespace iqm
