// tree.hpp
// Probability trees: one trunk (the generation op), one branch per
// compatibility class of views, each branch crowned by a finite probability
// space derived from a frequency table. Probabilities are carried as integer
// counts over N so the Kolmogorov checks can run in exact arithmetic.
// On top of the tree structure: independence verdicts with a statistical
// margin, the cross-branch dispersion tradeoff, two-system joint/marginal
// factorization, and composed-generation interference reports.
#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iqm/protocol.hpp"

namespace iqm {

// An event is a set of universe slots (0-based positions, not spectrum indices).
using Event = std::vector<std::size_t>;

inline Event event_union(const Event& a, const Event& b) {
    Event out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}
inline Event event_intersection(const Event& a, const Event& b) {
    Event out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}
inline bool events_disjoint(const Event& a, const Event& b) {
    return event_intersection(a, b).empty();
}

// Finite Kolmogorov space over a discrete spectrum; the algebra is the full
// power set, with weights induced by the counts.
struct ProbabilitySpace {
    std::vector<SpectrumValue> universe;
    std::vector<std::uint64_t> counts;
    std::uint64_t n = 0;

    Event full_event() const {
        Event e(universe.size());
        for (std::size_t j = 0; j < e.size(); ++j) e[j] = j;
        return e;
    }
    std::uint64_t count(const Event& e) const {
        std::uint64_t c = 0;
        for (std::size_t slot : e) c += counts.at(slot);
        return c;
    }
    double probability(const Event& e) const {
        return n == 0 ? 0.0 : static_cast<double>(count(e)) / static_cast<double>(n);
    }
    double weight(std::size_t slot) const {
        return n == 0 ? 0.0 : static_cast<double>(counts.at(slot)) / static_cast<double>(n);
    }
};

inline ProbabilitySpace build_space(const FrequencyTable& t) {
    if (t.n < 1) throw EmptyTable("cannot build a probability space from an empty table");
    ProbabilitySpace space;
    space.universe = t.spectrum;
    space.counts = t.counts;
    space.n = t.n;
    return space;
}

struct Branch {
    std::string compatibility_class_id;
    std::vector<MeasurementSpec> specs;
    SpaceTimeSupport envelope;  // d_X * (t_X - t_G), bookkeeping only
    FrequencyTable table;
    ProbabilitySpace space;
    std::vector<std::uint64_t> exemplar_ids;  // every exemplar consumed by this branch
};

struct ProbabilityTree {
    std::string world_id;
    GenerationOp trunk;
    std::vector<Branch> branches;
};

struct TreeOptions {
    unsigned threads = 1;
    bool record_exemplar_ids = true;
};

// Groups views by compatibility class and gathers one frequency table per
// class. A class may be listed once only: two *different* specs cannot share
// one interaction on one exemplar, so they cannot share a branch's table.
inline ProbabilityTree build_tree(const World& world, const GenerationOp& g,
                                  const std::vector<MeasurementSpec>& views,
                                  const std::vector<CodingRule>& rules, std::uint64_t n_per_branch,
                                  std::uint64_t seed, const TreeOptions& opts = {}) {
    if (views.empty()) throw EmptyViewSet("build_tree needs at least one view");
    if (views.size() != rules.size())
        throw EmptyViewSet("build_tree needs one coding rule per view");

    ProbabilityTree tree;
    tree.world_id = world.id();
    tree.trunk = g;

    std::map<std::string, std::size_t> class_to_branch;
    std::vector<std::size_t> branch_view;  // representative view per branch
    for (std::size_t v = 0; v < views.size(); ++v) {
        std::string cls = world.compatibility_class(views[v]);
        auto it = class_to_branch.find(cls);
        if (it == class_to_branch.end()) {
            class_to_branch.emplace(cls, tree.branches.size());
            Branch b;
            b.compatibility_class_id = cls;
            b.specs.push_back(views[v]);
            tree.branches.push_back(std::move(b));
            branch_view.push_back(v);
        } else {
            Branch& b = tree.branches[it->second];
            const MeasurementSpec& have = b.specs.front();
            if (have.label != views[v].label || have.params != views[v].params)
                throw IncompatibleMeasurementSpec(
                    "views in class '" + cls +
                    "' differ; a joint measurement must be expressed as a single spec");
            // duplicate of the spec already driving this branch
        }
    }

    std::uint64_t branch_seed_index = 0;
    for (std::size_t bi = 0; bi < tree.branches.size(); ++bi) {
        Branch& branch = tree.branches[bi];
        const MeasurementSpec& mes = views[branch_view[bi]];
        const CodingRule& rule = rules[branch_view[bi]];
        AccumulateOptions acc;
        acc.threads = opts.threads;
        acc.start_index = 0;
        if (opts.record_exemplar_ids) acc.exemplar_ids = &branch.exemplar_ids;
        std::uint64_t branch_seed = derive_stream_seed(seed, 0xb4a9c000ULL + branch_seed_index++);
        branch.table = accumulate_statistics(world, g, mes, rule, n_per_branch, branch_seed, acc);
        branch.space = build_space(branch.table);
        branch.envelope.spatial_extent = std::max(1.0, g.spacetime_support.spatial_extent);
        double t_mes = std::max({mes.get("t", 1.0), mes.get("t1", 0.0), mes.get("t2", 0.0),
                                 mes.get("flight_time", 0.0)});
        branch.envelope.duration = t_mes > 0.0 ? t_mes : 1.0;
    }
    return tree;
}

// ---------------------------------------------------------------------------

enum class IndependenceVerdict { independent, dependent, inconclusive };

// Compares p(A and B) against p(A)p(B) with a z-sigma margin from the space's
// N: within z -> independent, beyond 2z -> dependent, in between ->
// inconclusive. Degenerate events (A = U or empty) compare exactly.
inline IndependenceVerdict independence_verdict(const ProbabilitySpace& s, const Event& a,
                                                const Event& b, double z = 3.0) {
    double pa = s.probability(a);
    double pb = s.probability(b);
    double pab = s.probability(event_intersection(a, b));
    double delta = pab - pa * pb;
    if (delta == 0.0) return IndependenceVerdict::independent;
    double var = pa * pb * (1.0 - pa) * (1.0 - pb);
    double sigma = std::sqrt(std::max(var, 0.0) / static_cast<double>(std::max<std::uint64_t>(s.n, 1)));
    if (sigma == 0.0) return IndependenceVerdict::dependent;  // exact mismatch
    double score = std::abs(delta) / sigma;
    if (score <= z) return IndependenceVerdict::independent;
    if (score > 2.0 * z) return IndependenceVerdict::dependent;
    return IndependenceVerdict::inconclusive;
}

// ---------------------------------------------------------------------------

struct DispersionPair {
    std::string class_x, class_y;
    double dispersion_x = 0.0, dispersion_y = 0.0;
};

struct MetaDependenceReport {
    std::vector<DispersionPair> pairs;               // incompatible branch pairs only
    std::optional<double> pauli_variance_sum;        // present when sigma_x/y/z branches exist
};

// The observable footprint of the cross-branch meta-dependence: per pair of
// incompatible branches with scalar spectra, the two empirical dispersions.
inline MetaDependenceReport meta_dependence_report(const ProbabilityTree& tree) {
    std::vector<std::size_t> scalar_branches;
    for (std::size_t i = 0; i < tree.branches.size(); ++i) {
        bool scalar = true;
        for (const auto& v : tree.branches[i].table.spectrum)
            if (!v.is_scalar()) scalar = false;
        if (scalar) scalar_branches.push_back(i);
    }
    if (scalar_branches.size() < 2)
        throw EmptyViewSet("meta-dependence needs at least two branches with scalar spectra");

    MetaDependenceReport report;
    for (std::size_t i = 0; i < scalar_branches.size(); ++i) {
        for (std::size_t j = i + 1; j < scalar_branches.size(); ++j) {
            const Branch& x = tree.branches[scalar_branches[i]];
            const Branch& y = tree.branches[scalar_branches[j]];
            if (x.compatibility_class_id == y.compatibility_class_id) continue;
            report.pairs.push_back(DispersionPair{x.compatibility_class_id, y.compatibility_class_id,
                                                  dispersion(x.table), dispersion(y.table)});
        }
    }

    double sum = 0.0;
    int found = 0;
    for (const char* cls : {"sigma_x", "sigma_y", "sigma_z"}) {
        for (const auto& b : tree.branches) {
            if (b.compatibility_class_id == cls) {
                sum += dispersion(b.table);
                ++found;
                break;
            }
        }
    }
    if (found == 3) report.pauli_variance_sum = sum;
    return report;
}

// ---------------------------------------------------------------------------

struct FactorizationReport {
    std::vector<double> first_values, second_values;     // marginal universes
    std::vector<double> joint;                           // row-major [i * second + j]
    std::vector<double> marginal_first, marginal_second;
    std::vector<double> deviation;                       // joint - product of marginals
    std::vector<Interval> deviation_ci;
    double max_abs_deviation = 0.0;
    std::uint64_t n = 0;

    std::size_t cell(std::size_t i, std::size_t j) const { return i * second_values.size() + j; }
};

// Joint law, marginals and the deviation matrix p(x,y) - p(x)p(y) for a
// branch whose universe is a product set of outcome pairs.
inline FactorizationReport joint_marginal_report(const Branch& branch, double ci_z = 1.96) {
    const ProbabilitySpace& s = branch.space;
    for (const auto& v : s.universe)
        if (!v.is_pair())
            throw NonProductUniverse("branch universe is not a product set of outcome pairs");

    FactorizationReport report;
    report.n = s.n;
    auto slot_of = [](std::vector<double>& values, double v) {
        for (std::size_t k = 0; k < values.size(); ++k)
            if (values[k] == v) return k;
        values.push_back(v);
        return values.size() - 1;
    };
    std::vector<std::pair<std::size_t, std::size_t>> cells(s.universe.size());
    for (std::size_t u = 0; u < s.universe.size(); ++u) {
        const OutcomePair& p = s.universe[u].pair();
        cells[u] = {slot_of(report.first_values, p.first), slot_of(report.second_values, p.second)};
    }
    std::size_t rows = report.first_values.size();
    std::size_t cols = report.second_values.size();
    if (rows * cols != s.universe.size())
        throw NonProductUniverse("universe does not cover the full product of marginal values");

    report.joint.assign(rows * cols, 0.0);
    report.marginal_first.assign(rows, 0.0);
    report.marginal_second.assign(cols, 0.0);
    for (std::size_t u = 0; u < s.universe.size(); ++u) {
        double w = s.weight(u);
        report.joint[cells[u].first * cols + cells[u].second] = w;
        report.marginal_first[cells[u].first] += w;
        report.marginal_second[cells[u].second] += w;
    }
    report.deviation.assign(rows * cols, 0.0);
    report.deviation_ci.assign(rows * cols, Interval{});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double pi = report.marginal_first[i];
            double pj = report.marginal_second[j];
            double d = report.joint[i * cols + j] - pi * pj;
            report.deviation[i * cols + j] = d;
            double var = std::max(pi * pj * (1.0 - pi) * (1.0 - pj), 1e-300);
            double sigma = std::sqrt(var / static_cast<double>(std::max<std::uint64_t>(s.n, 1)));
            report.deviation_ci[i * cols + j] = {d - ci_z * sigma, d + ci_z * sigma};
            report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(d));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

struct InterferenceReport {
    FrequencyTable table_g1, table_g2, table_g12;
    std::vector<double> deviation_from_mixture;  // p12 - (p1 + p2)/2 per bin
    std::vector<double> deviation_from_raw_sum;  // p12 - (p1 + p2) per bin
    std::vector<Interval> mixture_deviation_ci;
    double fringe_visibility = 0.0;              // (max - min)/(max + min) of p12 bins
};

// Compares the composed-generation law against the two single-route laws.
// Both the normalized equal mixture and the literal sum are reported, since
// only the former is a probability law.
inline InterferenceReport composed_interference_report(const World& world, const GenerationOp& g1,
                                                       const GenerationOp& g2, const GenerationOp& g12,
                                                       const MeasurementSpec& view,
                                                       const CodingRule& rule, std::uint64_t n,
                                                       std::uint64_t seed, unsigned threads = 1,
                                                       double ci_z = 1.96) {
    if (!world.is_composition(g12, g1, g2))
        throw NotComposable("g12 is not a declared composition of (g1, g2) on world '" + world.id() +
                            "'");
    InterferenceReport report;
    AccumulateOptions acc;
    acc.threads = threads;
    report.table_g1 =
        accumulate_statistics(world, g1, view, rule, n, derive_stream_seed(seed, 0xc0130001ULL), acc);
    report.table_g2 =
        accumulate_statistics(world, g2, view, rule, n, derive_stream_seed(seed, 0xc0130002ULL), acc);
    report.table_g12 =
        accumulate_statistics(world, g12, view, rule, n, derive_stream_seed(seed, 0xc0130003ULL), acc);

    double pmax = 0.0, pmin = 1.0;
    for (std::size_t j = 0; j < rule.spectrum.size(); ++j) {
        double p1 = report.table_g1.frequency(j);
        double p2 = report.table_g2.frequency(j);
        double p12 = report.table_g12.frequency(j);
        double mixture = 0.5 * (p1 + p2);
        report.deviation_from_mixture.push_back(p12 - mixture);
        report.deviation_from_raw_sum.push_back(p12 - (p1 + p2));
        double var = p12 * (1.0 - p12) + 0.25 * (p1 * (1.0 - p1) + p2 * (1.0 - p2));
        double sigma = std::sqrt(std::max(var, 1e-300) / static_cast<double>(n));
        report.mixture_deviation_ci.push_back(
            {p12 - mixture - ci_z * sigma, p12 - mixture + ci_z * sigma});
        pmax = std::max(pmax, p12);
        pmin = std::min(pmin, p12);
    }
    report.fringe_visibility = (pmax + pmin) > 0.0 ? (pmax - pmin) / (pmax + pmin) : 0.0;
    return report;
}

// ---------------------------------------------------------------------------

// Plain-text rendering: trunk at the bottom, one column per branch, the
// frequency law crowning each branch.
inline std::string render_tree_text(const ProbabilityTree& tree) {
    std::ostringstream os;
    os << "probability tree  T(" << tree.trunk.label << ", {";
    for (std::size_t i = 0; i < tree.branches.size(); ++i)
        os << (i ? ", " : "") << tree.branches[i].compatibility_class_id;
    os << "})  on world '" << tree.world_id << "'\n\n";
    for (const auto& b : tree.branches) {
        os << "  [" << b.compatibility_class_id << "]  N=" << b.table.n << "  envelope d*t="
           << b.envelope.spatial_extent << "*" << b.envelope.duration << "\n";
        for (std::size_t j = 0; j < b.table.spectrum.size(); ++j) {
            Interval ci = b.table.ci(j);
            os << "      p(" << b.table.spectrum[j].label << ") = " << b.table.frequency(j) << "  ["
               << ci.low << ", " << ci.high << "]\n";
        }
        os << "        \\\n";
    }
    os << "         \\__ trunk: " << tree.trunk.label << " (support d*t="
       << tree.trunk.spacetime_support.spatial_extent << "*" << tree.trunk.spacetime_support.duration
       << ")\n";
    return os.str();
}

}  // namespace iqm
