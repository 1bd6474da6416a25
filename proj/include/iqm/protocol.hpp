// protocol.hpp
// Repeated-succession statistics: run [G.Mes(X)] pipelines, accumulate
// frequency tables, diagnose convergence toward a probability law, compute
// dispersion, and form evolved generation operations. Frequencies are always
// reported with their N and binomial intervals, never as exact limits.
//
// Parallel contract: repetition i of a run uses the RNG stream derived from
// (seed, start_index + i), and counts are combined associatively, so results
// do not depend on how work is split across threads.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "iqm/coding.hpp"
#include "iqm/micro_worlds.hpp"

namespace iqm {

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

// Wilson score interval for a binomial proportion.
inline Interval binomial_interval(std::uint64_t count, std::uint64_t n, double z = 1.96) {
    if (n == 0) return {0.0, 1.0};
    double p = static_cast<double>(count) / static_cast<double>(n);
    double nn = static_cast<double>(n);
    double z2 = z * z;
    double denom = 1.0 + z2 / nn;
    double center = (p + z2 / (2.0 * nn)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct FrequencyTable {
    GenerationOp g;
    std::string measurement_label;
    std::vector<SpectrumValue> spectrum;
    std::vector<std::uint64_t> counts;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;

    double frequency(std::size_t slot) const {
        return n == 0 ? 0.0 : static_cast<double>(counts[slot]) / static_cast<double>(n);
    }
    std::vector<double> frequencies() const {
        std::vector<double> f(counts.size());
        for (std::size_t j = 0; j < counts.size(); ++j) f[j] = frequency(j);
        return f;
    }
    Interval ci(std::size_t slot, double z = 1.96) const { return binomial_interval(counts[slot], n, z); }
};

// One generate -> measure -> code pipeline; the exemplar is consumed.
inline SpectrumValue run_succession(const World& world, const GenerationOp& g,
                                    const MeasurementSpec& mes, const CodingRule& rule,
                                    RandomSource& rng) {
    HiddenExemplar ex = world.generate_exemplar(g, rng);
    MarkSet ms = world.measure_exemplar(ex, mes, rng);
    return code(rule, ms);
}

struct AccumulateOptions {
    std::uint64_t start_index = 0;            // offset into the (seed, index) stream family
    unsigned threads = 1;                     // worker cap; results are independent of it
    std::vector<std::uint64_t>* exemplar_ids = nullptr;  // optionally collect consumed ids
};

namespace detail {

inline void check_contiguous_spectrum(const CodingRule& rule) {
    for (std::size_t j = 0; j < rule.spectrum.size(); ++j)
        if (rule.spectrum[j].index != static_cast<int>(j) + 1)
            throw AmbiguousCoding("rule '" + rule.measurement_label +
                                  "' spectrum indices are not contiguous from 1");
}

inline void accumulate_range(const World& world, const GenerationOp& g, const MeasurementSpec& mes,
                             const CodingRule& rule, std::uint64_t seed, std::uint64_t first,
                             std::uint64_t last, std::vector<std::uint64_t>& counts,
                             std::vector<std::uint64_t>* ids) {
    for (std::uint64_t i = first; i < last; ++i) {
        RandomSource rng = RandomSource::for_index(seed, i);
        HiddenExemplar ex = world.generate_exemplar(g, rng);
        MarkSet ms = world.measure_exemplar(ex, mes, rng);
        SpectrumValue v = code(rule, ms);
        ++counts[static_cast<std::size_t>(v.index - 1)];
        if (ids != nullptr) ids->push_back(ex.exemplar_id());
    }
}

}  // namespace detail

// N independent successions with per-repetition RNG streams.
inline FrequencyTable accumulate_statistics(const World& world, const GenerationOp& g,
                                            const MeasurementSpec& mes, const CodingRule& rule,
                                            std::uint64_t n, std::uint64_t seed,
                                            const AccumulateOptions& opts = {}) {
    if (n < 1) throw EmptyTable("accumulate_statistics needs N >= 1");
    detail::check_contiguous_spectrum(rule);

    FrequencyTable table;
    table.g = g;
    table.measurement_label = rule.measurement_label;
    table.spectrum = rule.spectrum;
    table.counts.assign(rule.spectrum.size(), 0);
    table.n = n;
    table.seed = seed;

    unsigned workers = std::max(1u, opts.threads);
    if (workers == 1 || n < 4 * workers) {
        detail::accumulate_range(world, g, mes, rule, seed, opts.start_index, opts.start_index + n,
                                 table.counts, opts.exemplar_ids);
        return table;
    }

    std::vector<std::vector<std::uint64_t>> counts(workers,
                                                   std::vector<std::uint64_t>(rule.spectrum.size(), 0));
    std::vector<std::vector<std::uint64_t>> ids(opts.exemplar_ids != nullptr ? workers : 0);
    std::vector<std::thread> pool;
    std::uint64_t chunk = n / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::uint64_t first = opts.start_index + w * chunk;
        std::uint64_t last = (w + 1 == workers) ? opts.start_index + n : first + chunk;
        pool.emplace_back([&, w, first, last] {
            detail::accumulate_range(world, g, mes, rule, seed, first, last, counts[w],
                                     opts.exemplar_ids != nullptr ? &ids[w] : nullptr);
        });
    }
    for (auto& t : pool) t.join();
    for (unsigned w = 0; w < workers; ++w)
        for (std::size_t j = 0; j < table.counts.size(); ++j) table.counts[j] += counts[w][j];
    if (opts.exemplar_ids != nullptr)
        for (auto& chunk_ids : ids)
            opts.exemplar_ids->insert(opts.exemplar_ids->end(), chunk_ids.begin(), chunk_ids.end());
    return table;
}

// Count additivity across disjoint stream ranges of the same (g, mes).
inline FrequencyTable merge_tables(const FrequencyTable& a, const FrequencyTable& b) {
    if (!(a.g == b.g) || a.measurement_label != b.measurement_label ||
        a.spectrum.size() != b.spectrum.size())
        throw IncompatibleMeasurementSpec("cannot merge tables of different (g, measurement)");
    FrequencyTable out = a;
    for (std::size_t j = 0; j < out.counts.size(); ++j) out.counts[j] += b.counts[j];
    out.n += b.n;
    return out;
}

// ---------------------------------------------------------------------------

enum class ConvergenceVerdict { converging, inconclusive };

struct ConvergenceCheckpoint {
    std::uint64_t n = 0;
    std::vector<double> frequencies;
    std::vector<Interval> ci;
};

struct ConvergenceReport {
    std::vector<ConvergenceCheckpoint> checkpoints;
    std::vector<double> drifts;  // L-inf distance between successive checkpoints
    double max_drift = 0.0;
    std::optional<double> exponent;  // slope of log(drift) vs log(N)
    ConvergenceVerdict verdict = ConvergenceVerdict::inconclusive;
};

struct ConvergenceOptions {
    double exponent_low = -0.8;
    double exponent_high = -0.2;
    double ci_z = 1.96;
};

// Frequencies are snapshotted along one cumulative run, so checkpoint i is a
// prefix of checkpoint i+1's sample.
template <class WorldT>
ConvergenceReport convergence_report(const WorldT& world, const GenerationOp& g,
                                     const MeasurementSpec& mes, const CodingRule& rule,
                                     const std::vector<std::uint64_t>& schedule, std::uint64_t seed,
                                     const ConvergenceOptions& opts = {}) {
    if (schedule.size() < 3)
        throw EmptyTable("convergence schedule needs at least 3 checkpoints");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1])
            throw EmptyTable("convergence schedule must be strictly increasing");
    detail::check_contiguous_spectrum(rule);

    ConvergenceReport report;
    std::vector<std::uint64_t> counts(rule.spectrum.size(), 0);
    std::uint64_t done = 0;
    for (std::uint64_t target : schedule) {
        for (; done < target; ++done) {
            RandomSource rng = RandomSource::for_index(seed, done);
            SpectrumValue v = run_succession(world, g, mes, rule, rng);
            ++counts[static_cast<std::size_t>(v.index - 1)];
        }
        ConvergenceCheckpoint cp;
        cp.n = target;
        for (std::uint64_t c : counts) {
            cp.frequencies.push_back(static_cast<double>(c) / static_cast<double>(target));
            cp.ci.push_back(binomial_interval(c, target, opts.ci_z));
        }
        report.checkpoints.push_back(std::move(cp));
    }

    for (std::size_t i = 0; i + 1 < report.checkpoints.size(); ++i) {
        double d = 0.0;
        const auto& a = report.checkpoints[i].frequencies;
        const auto& b = report.checkpoints[i + 1].frequencies;
        for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
        report.drifts.push_back(d);
        report.max_drift = std::max(report.max_drift, d);
    }

    // Fit log(drift_i) ~ exponent * log(N_i); a dispersion-free (all-zero
    // drift) run converges trivially.
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < report.drifts.size(); ++i) {
        if (report.drifts[i] > 0.0) {
            xs.push_back(std::log(static_cast<double>(report.checkpoints[i].n)));
            ys.push_back(std::log(report.drifts[i]));
        }
    }
    if (xs.empty()) {
        report.verdict = ConvergenceVerdict::converging;
        return report;
    }
    if (xs.size() < 2) {
        report.verdict = ConvergenceVerdict::inconclusive;
        return report;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    double slope = sxy / sxx;
    report.exponent = slope;
    report.verdict = (slope >= opts.exponent_low && slope <= opts.exponent_high)
                         ? ConvergenceVerdict::converging
                         : ConvergenceVerdict::inconclusive;
    return report;
}

// ---------------------------------------------------------------------------

// Empirical variance of the coded numeric values, sum_j f_j (x_j - mean)^2.
inline double dispersion(const FrequencyTable& t) {
    if (t.n < 2) throw EmptyTable("dispersion needs N >= 2");
    for (const auto& v : t.spectrum)
        if (!v.is_scalar())
            throw NonScalarSpectrum("dispersion is defined for scalar spectra only; '" + v.label +
                                    "' is not scalar");
    double mean = 0.0;
    for (std::size_t j = 0; j < t.spectrum.size(); ++j) mean += t.frequency(j) * t.spectrum[j].scalar();
    double var = 0.0;
    for (std::size_t j = 0; j < t.spectrum.size(); ++j) {
        double d = t.spectrum[j].scalar() - mean;
        var += t.frequency(j) * d * d;
    }
    return var;
}

// G' = f(G, CE, dt): a new generation op whose exemplars are g-exemplars
// evolved for dt under ce.
inline GenerationOp evolve_generation(const World& world, const GenerationOp& g,
                                      const EnvironmentSpec& ce, double dt) {
    if (!(dt >= 0.0)) throw UnsupportedEnvironment("evolution duration must be >= 0");
    if (g.world_id != world.id())
        throw UnknownWorld("generation op addresses world '" + g.world_id + "', this is '" +
                           world.id() + "'");
    for (const auto& [key, value] : ce.params)
        if (!std::isfinite(value))
            throw UnsupportedEnvironment("environment parameter '" + key + "' is not finite");
    return world.evolve(g, ce, dt);
}

}  // namespace iqm
