// bell.hpp
// Local hidden-variable machinery and its confrontation with the two-system
// worlds: exact LHV correlations over a finite lambda space, sampled world
// correlations, the 1964 three-setting inequality, CHSH, and the exhaustive
// deterministic-strategy bound.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iqm/protocol.hpp"

namespace iqm {

// Finite hidden-parameter model: weights rho over lambda slots and local
// deterministic responses A(a, lambda), B(b, lambda) in {-1, +1}. Locality is
// structural: A never sees b and B never sees a.
struct LHVModel {
    std::vector<double> rho;
    std::function<int(const Vec3&, std::size_t)> response_a;
    std::function<int(const Vec3&, std::size_t)> response_b;

    std::size_t size() const { return rho.size(); }

    void validate(const std::vector<Vec3>& probe_settings = {}) const {
        if (rho.empty() || !response_a || !response_b)
            throw MalformedModel("LHV model needs weights and both response functions");
        double sum = 0.0;
        for (double w : rho) {
            if (!(w >= 0.0)) throw MalformedModel("LHV weights must be >= 0");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw MalformedModel("LHV weights must sum to 1");
        for (const Vec3& s : probe_settings) {
            for (std::size_t i = 0; i < rho.size(); ++i) {
                int a = response_a(s, i);
                int b = response_b(s, i);
                if ((a != 1 && a != -1) || (b != 1 && b != -1))
                    throw MalformedModel("LHV responses must be exactly +1 or -1");
            }
        }
    }
};

// P(a,b) = sum_lambda rho(lambda) A(a,lambda) B(b,lambda). The sum lies in
// [-1, 1] mathematically; accumulated rounding of non-dyadic weights can
// overshoot by ulps, so the result is clamped.
inline double lhv_correlation_exact(const LHVModel& m, const Vec3& a, const Vec3& b) {
    if (m.rho.empty() || !m.response_a || !m.response_b)
        throw MalformedModel("LHV model needs weights and both response functions");
    double e = 0.0;
    for (std::size_t i = 0; i < m.rho.size(); ++i)
        e += m.rho[i] * m.response_a(a, i) * m.response_b(b, i);
    if (e > 1.0) e = 1.0;
    if (e < -1.0) e = -1.0;
    return e;
}

// The classic anti-copy model A = sign(a.lambda), B = -sign(b.lambda) with
// lambda on an equal-weight sphere grid (uniform cos-theta strata). Its exact
// correlation converges to -1 + 2*theta/pi as the grid refines.
inline LHVModel anti_copy_model(std::size_t n_cos, std::size_t n_phi) {
    LHVModel m;
    auto lambdas = std::make_shared<std::vector<Vec3>>();
    const double tau = 6.283185307179586476925287;
    for (std::size_t i = 0; i < n_cos; ++i) {
        double c = -1.0 + (static_cast<double>(i) + 0.5) * 2.0 / static_cast<double>(n_cos);
        double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (std::size_t j = 0; j < n_phi; ++j) {
            double phi = (static_cast<double>(j) + 0.5) * tau / static_cast<double>(n_phi);
            lambdas->push_back(Vec3{s * std::cos(phi), s * std::sin(phi), c});
        }
    }
    m.rho.assign(lambdas->size(), 1.0 / static_cast<double>(lambdas->size()));
    m.response_a = [lambdas](const Vec3& a, std::size_t i) {
        return a.dot((*lambdas)[i]) >= 0.0 ? +1 : -1;
    };
    m.response_b = [lambdas](const Vec3& b, std::size_t i) {
        return b.dot((*lambdas)[i]) >= 0.0 ? -1 : +1;
    };
    return m;
}

// Model given by explicit response tables over a fixed list of settings;
// this is the form the config file can carry.
inline LHVModel tabulated_model(std::vector<Vec3> settings, std::vector<std::vector<int>> table_a,
                                std::vector<std::vector<int>> table_b, std::vector<double> rho) {
    LHVModel m;
    m.rho = std::move(rho);
    auto shared_settings = std::make_shared<std::vector<Vec3>>(std::move(settings));
    auto lookup = [shared_settings](const Vec3& v) -> std::size_t {
        for (std::size_t k = 0; k < shared_settings->size(); ++k) {
            Vec3 d = v - (*shared_settings)[k];
            if (d.norm() < 1e-9) return k;
        }
        throw MalformedModel("setting not tabulated in the LHV model");
    };
    auto ta = std::make_shared<std::vector<std::vector<int>>>(std::move(table_a));
    auto tb = std::make_shared<std::vector<std::vector<int>>>(std::move(table_b));
    m.response_a = [lookup, ta](const Vec3& a, std::size_t i) { return (*ta)[lookup(a)][i]; };
    m.response_b = [lookup, tb](const Vec3& b, std::size_t i) { return (*tb)[lookup(b)][i]; };
    return m;
}

// ---------------------------------------------------------------------------

struct Estimate {
    double value = 0.0;
    std::uint64_t n = 0;
    double ci_low = 0.0;
    double ci_high = 0.0;

    double half_width() const { return 0.5 * (ci_high - ci_low); }
};

inline Estimate product_mean_estimate(const FrequencyTable& table, double z = 1.96) {
    double e = 0.0;
    for (std::size_t j = 0; j < table.spectrum.size(); ++j) {
        if (!table.spectrum[j].is_pair())
            throw NonProductUniverse("correlation needs a spectrum of outcome pairs");
        const OutcomePair& p = table.spectrum[j].pair();
        e += table.frequency(j) * p.first * p.second;
    }
    double sigma = table.n > 0 ? std::sqrt(std::max(0.0, 1.0 - e * e) / static_cast<double>(table.n))
                               : 0.0;
    return Estimate{e, table.n, e - z * sigma, e + z * sigma};
}

// Empirical mean of the product of the coded pair outcomes over N exemplars.
inline Estimate world_correlation(const World& world, const Vec3& a, const Vec3& b, std::uint64_t n,
                                  std::uint64_t seed, unsigned threads = 1, double z = 1.96) {
    MeasurementSpec mes = pair_spin_spec(a, b);
    CodingRule rule = world.make_rule(mes);
    AccumulateOptions opts;
    opts.threads = threads;
    FrequencyTable table = accumulate_statistics(world, world.canonical_generation(), mes, rule, n,
                                                 seed, opts);
    return product_mean_estimate(table, z);
}

// Unit vector at `deg` degrees from the z axis, in the x-z plane; the common
// parameterization for planar setting scans.
inline Vec3 setting_from_angle_deg(double deg) {
    double rad = deg * 3.14159265358979323846 / 180.0;
    return Vec3{std::sin(rad), 0.0, std::cos(rad)};
}

struct CorrelationRow {
    double a_deg = 0.0;
    double b_deg = 0.0;
    Estimate e;
};

struct CorrelationTable {
    std::string source;  // lhv_exact, lhv_sampled, world_sampled, quantum_exact
    std::vector<CorrelationRow> rows;
};

// ---------------------------------------------------------------------------

struct Bell1964Result {
    double margin = 0.0;  // |E(a,b) - E(a,c)| - (1 + E(b,c))
    bool violated = false;
};

inline Bell1964Result bell1964_check(double e_ab, double e_ac, double e_bc, double threshold = 0.0) {
    Bell1964Result r;
    r.margin = std::abs(e_ab - e_ac) - (1.0 + e_bc);
    r.violated = r.margin > threshold;
    return r;
}

inline double chsh_value(double e_ab, double e_ab2, double e_a2b, double e_a2b2) {
    return std::abs(e_ab - e_ab2) + std::abs(e_a2b + e_a2b2);
}

struct ChshBound {
    double max_s = 0.0;
    std::array<int, 4> witness{};  // (A(a), A(a'), B(b), B(b')) attaining max_s
};

// Maximum of the CHSH value over all 16 deterministic strategies; by
// convexity this bounds every LHV model at the given settings.
inline ChshBound lhv_max_bruteforce(const Vec3& = {}, const Vec3& = {}, const Vec3& = {},
                                    const Vec3& = {}) {
    ChshBound bound;
    for (int mask = 0; mask < 16; ++mask) {
        int aa = (mask & 1) ? +1 : -1;
        int aa2 = (mask & 2) ? +1 : -1;
        int bb = (mask & 4) ? +1 : -1;
        int bb2 = (mask & 8) ? +1 : -1;
        double s = chsh_value(aa * bb, aa * bb2, aa2 * bb, aa2 * bb2);
        if (s > bound.max_s) {
            bound.max_s = s;
            bound.witness = {aa, aa2, bb, bb2};
        }
    }
    return bound;
}

}  // namespace iqm
