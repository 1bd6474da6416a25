#include <catch2/catch_amalgamated.hpp>

#include "iqm/iqm.hpp"
#include "oracles.hpp"

using namespace iqm;

namespace {

WorldHandle world_of(const std::string& kind, ParamMap params = {}) {
    WorldSpec spec;
    spec.kind = kind;
    spec.params = std::move(params);
    return make_world(spec);
}

ScanConfig base_config(std::vector<double> grid, std::uint64_t n_per_point) {
    ScanConfig cfg;
    cfg.d1 = 1.0;
    cfg.d2 = 1.0;
    cfg.v1 = 1.0;
    cfg.v2 = 1.0;
    cfg.vi_grid = std::move(grid);
    cfg.margin = 1.25;
    cfg.n_per_point = n_per_point;
    // angles where the singlet gives S = 2.2247 while the linear local law
    // gives 5/3; at the textbook (0, 90, 45, 135) the linear law sits at
    // exactly 2 and blocked points could never be classified
    cfg.settings = {0.0, 45.0, 60.0, 105.0};
    return cfg;
}

}  // namespace

TEST_CASE("required_delay arithmetic") {
    ScanConfig cfg = base_config({2.0}, 100);
    cfg.margin = 1.0;
    CHECK(required_delay(cfg, 2.0) == 1.0);

    // monotone decreasing in the hypothesized speed
    double previous = 1e300;
    for (double vi : {0.5, 1.0, 3.0, 10.0, 1000.0}) {
        double tau = required_delay(cfg, vi);
        CHECK(tau < previous);
        previous = tau;
    }

    ScanConfig wide = cfg;
    wide.d1 = 3.0;
    wide.d2 = 1.0;
    wide.margin = 1.5;
    CHECK(required_delay(wide, 2.0) == 3.0);

    CHECK_THROWS_AS(required_delay(cfg, 0.0), NonPositiveSpeed);
    CHECK_THROWS_AS(required_delay(cfg, -3.0), NonPositiveSpeed);
}

TEST_CASE("schedules strictly close the influence window") {
    ScanConfig cfg = base_config({0.5, 1.0, 2.0, 8.0, 64.0}, 100);
    for (double vi : cfg.vi_grid) {
        ScheduledRun s = make_schedule(cfg, vi);
        CHECK(s.t_mes1 == cfg.d1 / cfg.v1);
        CHECK(s.t_mes2 - s.t_mes1 > (cfg.d1 + cfg.d2) / vi);
        CHECK(s.t_mes2 >= cfg.d2 / cfg.v2);
    }
}

TEST_CASE("config validation") {
    ScanConfig cfg = base_config({1.0, 2.0}, 100);
    CHECK_NOTHROW(cfg.check());

    ScanConfig unsorted = cfg;
    unsorted.vi_grid = {2.0, 1.0};
    CHECK_THROWS_AS(unsorted.check(), NonPositiveSpeed);

    ScanConfig bad_margin = cfg;
    bad_margin.margin = 0.8;
    CHECK_THROWS_AS(bad_margin.check(), NonPositiveSpeed);

    ScanConfig bad_distance = cfg;
    bad_distance.d1 = 0.0;
    CHECK_THROWS_AS(bad_distance.check(), NonPositiveSpeed);
}

TEST_CASE("singlet correlations are schedule-invariant: every speed is eliminated") {
    auto singlet = world_of("singlet_pair");
    ScanConfig cfg = base_config({1.0, 2.0, 5.0, 10.0, 100.0}, 20000);
    ScanReport report = run_scan(*singlet, cfg, 404);

    REQUIRE(report.points.size() == 5);
    for (const auto& p : report.points) {
        INFO("vi = " << p.vi);
        CHECK(p.status == PointStatus::eliminated);
        CHECK(p.s > 2.0 + cfg.z * p.sigma_s);
    }
    CHECK(report.eliminated.size() == 5);

    // timing cannot move the quantum correlation: spreads within combined CIs
    for (std::size_t i = 0; i < report.points.size(); ++i)
        for (std::size_t j = i + 1; j < report.points.size(); ++j)
            CHECK(std::abs(report.points[i].s - report.points[j].s) <=
                  cfg.z * (report.points[i].sigma_s + report.points[j].sigma_s));

    CHECK(scan_verdict(report).outcome == ScanOutcome::no_influence_up_to_kappa);
}

TEST_CASE("a genuine influence is bracketed by the scan") {
    auto contrast = world_of("influence_contrast", {{"influence_speed", 5.0}});
    ScanConfig cfg = base_config({2.0, 5.0, 10.0}, 20000);
    ScanReport report = run_scan(*contrast, cfg, 405);

    REQUIRE(report.points.size() == 3);
    // margin 1.25: blocking delays for vi <= 6.25 still let the speed-5
    // message through (quantum law), the vi = 10 schedule beats it (local law)
    CHECK(report.points[0].status == PointStatus::eliminated);
    CHECK(report.points[1].status == PointStatus::eliminated);
    CHECK(report.points[2].status == PointStatus::failed);
    CHECK(report.points[2].s == Catch::Approx(5.0 / 3.0).margin(0.1));

    ScanVerdict verdict = scan_verdict(report);
    CHECK(verdict.outcome == ScanOutcome::influence_detected);
    CHECK(verdict.bracket_low == 5.0);
    CHECK(verdict.bracket_high == 10.0);
    CHECK(verdict.bracket_low <= 5.0);
    CHECK(5.0 <= verdict.bracket_high);
}

TEST_CASE("elimination failures form an up-set of the grid") {
    // single true speed: once a schedule outruns the message, every faster
    // hypothesis (shorter delay) does too
    for (double true_speed : {3.0, 5.0}) {
        for (double margin : {1.1, 1.25, 2.0}) {
            auto contrast = world_of("influence_contrast", {{"influence_speed", true_speed}});
            ScanConfig cfg = base_config({1.0, 2.0, 4.0, 8.0, 16.0}, 4000);
            cfg.margin = margin;
            ScanReport report = run_scan(*contrast, cfg, 1000 + static_cast<std::uint64_t>(margin * 10));
            bool failed_seen = false;
            for (const auto& p : report.points) {
                INFO("true " << true_speed << " margin " << margin << " vi " << p.vi);
                CHECK(p.status != PointStatus::ambiguous);
                if (p.status == PointStatus::failed) failed_seen = true;
                if (failed_seen) CHECK(p.status == PointStatus::failed);
            }
        }
    }
}

TEST_CASE("an empty grid gives an empty report") {
    auto singlet = world_of("singlet_pair");
    ScanConfig cfg = base_config({}, 100);
    ScanReport report = run_scan(*singlet, cfg, 1);
    CHECK(report.points.empty());
    CHECK(report.eliminated.empty());
    CHECK(scan_verdict(report).outcome == ScanOutcome::no_influence_up_to_kappa);
}

TEST_CASE("starved statistics go inconclusive") {
    auto singlet = world_of("singlet_pair");
    ScanConfig cfg = base_config({1.0, 2.0}, 100);  // 25 successions per setting
    ScanReport report = run_scan(*singlet, cfg, 42);
    bool any_ambiguous = false;
    for (const auto& p : report.points) any_ambiguous |= p.status == PointStatus::ambiguous;
    CHECK(any_ambiguous);
    CHECK(scan_verdict(report).outcome == ScanOutcome::inconclusive);
}

TEST_CASE("the runner asserts schedule soundness per point") {
    auto singlet = world_of("singlet_pair");
    ScanConfig cfg = base_config({2.0}, 400);
    cfg.margin = 1.0;  // delay exactly equal to the window is not strict
    CHECK_THROWS_AS(run_scan(*singlet, cfg, 3), NonPositiveSpeed);
}
