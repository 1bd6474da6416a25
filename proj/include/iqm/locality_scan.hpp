// locality_scan.hpp
// The delayed-second-measurement scan: for each hypothesized influence speed
// vi, schedule Mes2 late enough that a message leaving the Mes1 event at
// speed vi would already have arrived, then test whether the measured CHSH
// correlation is still above the LHV bound. A speed is eliminated when the
// quantum correlation persists under its blocking schedule; a world carrying
// a genuine slower-than-scheduled influence shows up as a drop of S to the
// local value, so elimination failures accumulate at the fast end of the grid.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "iqm/bell.hpp"

namespace iqm {

struct ScanConfig {
    double d1 = 1.0, d2 = 1.0;  // source-to-apparatus distances
    double v1 = 1.0, v2 = 1.0;  // subsystem transport speeds
    std::vector<double> vi_grid;
    double margin = 1.25;  // safety factor on the blocking delay, >= 1
    // Default settings separate the quantum CHSH value (2.22) from the linear
    // local fallback law (5/3); at the textbook (0, 90, 45, 135) that law
    // sits exactly on the bound 2 and a blocked point could not be classified.
    struct Settings {
        double a_deg = 0.0, a2_deg = 45.0, b_deg = 60.0, b2_deg = 105.0;
    } settings;
    std::uint64_t n_per_point = 100000;  // successions per grid point, split over the 4 settings
    double z = 3.0;                      // elimination margin in sigmas

    void check() const {
        if (!(d1 > 0.0) || !(d2 > 0.0)) throw NonPositiveSpeed("distances d1, d2 must be > 0");
        if (!(v1 > 0.0) || !(v2 > 0.0)) throw NonPositiveSpeed("transport speeds v1, v2 must be > 0");
        if (!(margin >= 1.0)) throw NonPositiveSpeed("margin must be >= 1");
        for (double vi : vi_grid)
            if (!(vi > 0.0)) throw NonPositiveSpeed("influence speeds must be > 0");
        if (!std::is_sorted(vi_grid.begin(), vi_grid.end()))
            throw NonPositiveSpeed("vi grid must be sorted ascending");
        if (n_per_point < 4) throw EmptyTable("n_per_point must cover the four settings");
    }
};

// Extra delay for Mes2 under hypothesis vi: the influence window has length
// (d1 + d2)/vi, stretched by the safety margin.
inline double required_delay(const ScanConfig& cfg, double vi) {
    if (!(vi > 0.0)) throw NonPositiveSpeed("influence speed must be > 0");
    return cfg.margin * (cfg.d1 + cfg.d2) / vi;
}

struct ScheduledRun {
    double t_mes1 = 0.0;
    double delay = 0.0;
    double t_mes2 = 0.0;
};

inline ScheduledRun make_schedule(const ScanConfig& cfg, double vi) {
    ScheduledRun s;
    s.t_mes1 = cfg.d1 / cfg.v1;
    s.delay = required_delay(cfg, vi);
    s.t_mes2 = std::max(cfg.d2 / cfg.v2, s.t_mes1 + s.delay);
    return s;
}

enum class PointStatus { eliminated, failed, ambiguous };

struct ScanPoint {
    double vi = 0.0;
    ScheduledRun schedule;
    std::vector<CorrelationRow> correlations;  // the four CHSH settings
    double s = 0.0;
    double sigma_s = 0.0;
    PointStatus status = PointStatus::ambiguous;
};

struct ScanReport {
    ScanConfig config;
    std::vector<ScanPoint> points;
    std::vector<double> eliminated;
};

inline ScanReport run_scan(const World& world, const ScanConfig& cfg, std::uint64_t seed,
                           unsigned threads = 1) {
    cfg.check();
    ScanReport report;
    report.config = cfg;

    const Vec3 a = setting_from_angle_deg(cfg.settings.a_deg);
    const Vec3 a2 = setting_from_angle_deg(cfg.settings.a2_deg);
    const Vec3 b = setting_from_angle_deg(cfg.settings.b_deg);
    const Vec3 b2 = setting_from_angle_deg(cfg.settings.b2_deg);
    const std::array<std::pair<double, double>, 4> setting_angles = {
        std::pair<double, double>{cfg.settings.a_deg, cfg.settings.b_deg},
        {cfg.settings.a_deg, cfg.settings.b2_deg},
        {cfg.settings.a2_deg, cfg.settings.b_deg},
        {cfg.settings.a2_deg, cfg.settings.b2_deg}};
    const std::array<std::pair<Vec3, Vec3>, 4> setting_axes = {
        std::pair<Vec3, Vec3>{a, b}, {a, b2}, {a2, b}, {a2, b2}};

    const Vec3 pos1{-cfg.d1, 0.0, 0.0};
    const Vec3 pos2{cfg.d2, 0.0, 0.0};
    const std::uint64_t n_per_setting = cfg.n_per_point / 4;
    const GenerationOp g = world.canonical_generation();

    for (std::size_t gi = 0; gi < cfg.vi_grid.size(); ++gi) {
        ScanPoint point;
        point.vi = cfg.vi_grid[gi];
        point.schedule = make_schedule(cfg, point.vi);
        // schedule soundness: the influence window must be strictly closed
        if (!(point.schedule.t_mes2 - point.schedule.t_mes1 > (cfg.d1 + cfg.d2) / point.vi))
            throw NonPositiveSpeed("schedule does not strictly close the influence window for vi=" +
                                   std::to_string(point.vi));

        double variance_sum = 0.0;
        std::array<double, 4> es{};
        for (std::size_t si = 0; si < 4; ++si) {
            MeasurementSpec mes = pair_spin_spec(setting_axes[si].first, setting_axes[si].second,
                                                 point.schedule.t_mes1, point.schedule.t_mes2, pos1,
                                                 pos2);
            CodingRule rule = world.make_rule(mes);
            AccumulateOptions opts;
            opts.threads = threads;
            std::uint64_t stream = derive_stream_seed(seed, 0x5ca40000ULL + gi * 16 + si);
            FrequencyTable table =
                accumulate_statistics(world, g, mes, rule, n_per_setting, stream, opts);
            Estimate e = product_mean_estimate(table);
            point.correlations.push_back(
                CorrelationRow{setting_angles[si].first, setting_angles[si].second, e});
            es[si] = e.value;
            variance_sum +=
                std::max(0.0, 1.0 - e.value * e.value) / static_cast<double>(n_per_setting);
        }
        point.s = chsh_value(es[0], es[1], es[2], es[3]);
        point.sigma_s = std::sqrt(variance_sum);

        double excess = point.s - 2.0;
        if (excess > cfg.z * point.sigma_s)
            point.status = PointStatus::eliminated;
        else if (excess < -cfg.z * point.sigma_s)
            point.status = PointStatus::failed;
        else
            point.status = PointStatus::ambiguous;
        if (point.status == PointStatus::eliminated) report.eliminated.push_back(point.vi);
        report.points.push_back(std::move(point));
    }
    return report;
}

// ---------------------------------------------------------------------------

enum class ScanOutcome { no_influence_up_to_kappa, influence_detected, inconclusive };

struct ScanVerdict {
    ScanOutcome outcome = ScanOutcome::inconclusive;
    double bracket_low = 0.0;   // grid speeds bracketing where elimination first fails
    double bracket_high = 0.0;
};

inline ScanVerdict scan_verdict(const ScanReport& report) {
    ScanVerdict verdict;
    if (report.points.empty()) {
        verdict.outcome = ScanOutcome::no_influence_up_to_kappa;
        return verdict;
    }
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        const ScanPoint& p = report.points[i];
        if (p.status == PointStatus::eliminated) continue;
        if (p.status == PointStatus::ambiguous) {
            verdict.outcome = ScanOutcome::inconclusive;
            return verdict;
        }
        verdict.outcome = ScanOutcome::influence_detected;
        verdict.bracket_low = i == 0 ? 0.0 : report.points[i - 1].vi;
        verdict.bracket_high = p.vi;
        return verdict;
    }
    verdict.outcome = ScanOutcome::no_influence_up_to_kappa;
    return verdict;
}

}  // namespace iqm
