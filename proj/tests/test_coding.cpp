#include <catch2/catch_amalgamated.hpp>

#include "iqm/iqm.hpp"
#include "oracles.hpp"

using namespace iqm;

namespace {

WorldHandle die_world() {
    WorldSpec spec;
    spec.kind = "classical_die";
    return make_world(spec);
}

MarkSet die_mark(int face) {
    MarkSet ms;
    ms.measurement_label = "read";
    ms.marks.push_back(Mark{"die_zone", {static_cast<double>(face), 0.0, 0.0, 1.0}, std::nullopt});
    return ms;
}

}  // namespace

TEST_CASE("code maps die marks to their face value") {
    auto world = die_world();
    CodingRule rule = world->make_rule(MeasurementSpec{"read", {}});
    SpectrumValue v = code(rule, die_mark(4));
    CHECK(v.index == 4);
    CHECK(v.scalar() == 4.0);
    // pure function: same arguments, same value
    CHECK(code(rule, die_mark(4)).index == v.index);
}

TEST_CASE("code maps Stern-Gerlach zones to +1 / -1") {
    WorldSpec spec;
    spec.kind = "qubit";
    auto world = make_world(spec);
    CodingRule rule = world->make_rule(MeasurementSpec{"sigma_z", {}});

    MarkSet upper;
    upper.measurement_label = "sigma_z";
    upper.marks.push_back(Mark{"sg_screen", {0.0, 0.0, 1.0, 1.0}, std::nullopt});
    CHECK(code(rule, upper).scalar() == 1.0);

    MarkSet lower = upper;
    lower.marks[0].coord.z = -1.0;
    CHECK(code(rule, lower).scalar() == -1.0);
}

TEST_CASE("code puts a time-of-flight impact in the right momentum bin") {
    WorldSpec spec;
    spec.kind = "free_particle";
    spec.params = {{"mass", 1.0}, {"mean_momentum", 2.0}, {"sigma_p", 1.0}};
    auto world = make_world(spec);
    MeasurementSpec mes{"momentum_tof", {{"flight_time", 1.0}}};
    CodingRule rule = world->make_rule(mes);

    MarkSet ms;
    ms.measurement_label = "momentum_tof";
    ms.marks.push_back(Mark{"screen", {2.0, 0.0, 0.0, 1.0}, std::nullopt});
    ms.marks.push_back(Mark{"chrono", {0.0, 0.0, 0.0, 1.0}, std::nullopt});
    SpectrumValue v = code(rule, ms);

    Vec3 p = tof_momentum(ms.marks[0], 0.0, ms.marks[1], 1.0);
    CHECK(p.x == 2.0);
    // bin width is 8 sigma_p / 32 scaled by t/m
    CHECK(std::abs(v.vec().x - p.x) <= 0.125 + 1e-12);
    CHECK(v.vec().y == 0.0);
}

TEST_CASE("code error paths") {
    auto world = die_world();
    CodingRule rule = world->make_rule(MeasurementSpec{"read", {}});

    MarkSet wrong_label = die_mark(3);
    wrong_label.measurement_label = "peek";
    CHECK_THROWS_AS(code(rule, wrong_label), IncompatibleMeasurementSpec);

    CHECK_THROWS_AS(code(rule, die_mark(7)), UncodableMarkSet);

    CodingRule overlapping = rule;
    overlapping.regions[1].boxes[0] = overlapping.regions[0].boxes[0];
    CHECK_THROWS_AS(code(overlapping, die_mark(1)), AmbiguousCoding);
}

TEST_CASE("tof_momentum formula") {
    Mark chrono{"chrono", {0.0, 0.0, 0.0, 1.0}, std::nullopt};

    Mark origin{"screen", {0.0, 0.0, 0.0, 1.0}, std::nullopt};
    Vec3 p0 = tof_momentum(origin, 0.0, chrono, 1.0);
    CHECK(p0.x == 0.0);
    CHECK(p0.y == 0.0);
    CHECK(p0.z == 0.0);

    Mark impact{"screen", {3.0, 4.0, 0.0, 1.0}, std::nullopt};
    Vec3 p = tof_momentum(impact, 0.0, chrono, 1.0);
    CHECK(p.x == 3.0);
    CHECK(p.y == 4.0);
    CHECK(p.norm() == 5.0);

    Mark slow{"screen", {1.0, 0.0, 0.0, 2.0}, std::nullopt};
    Mark chrono2{"chrono", {0.0, 0.0, 0.0, 2.0}, std::nullopt};
    Vec3 p2 = tof_momentum(slow, 0.0, chrono2, 4.0);
    CHECK(p2.x == 2.0);

    CHECK_THROWS_AS(tof_momentum(impact, 1.0, chrono, 1.0), NonPositiveFlightTime);
    CHECK_THROWS_AS(tof_momentum(impact, 2.0, chrono, 1.0), NonPositiveFlightTime);
}

TEST_CASE("tof_momentum is homogeneous in displacement and flight time") {
    RandomSource rng(0xce11);
    for (int trial = 0; trial < 200; ++trial) {
        Vec3 d{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
        double dt = rng.uniform(0.1, 5.0);
        double mass = rng.uniform(0.1, 3.0);
        double scale = rng.uniform(0.2, 4.0);

        Mark impact{"screen", {d.x, d.y, d.z, dt}, std::nullopt};
        Mark chrono{"chrono", {0.0, 0.0, 0.0, dt}, std::nullopt};
        Vec3 p = tof_momentum(impact, 0.0, chrono, mass);

        Mark scaled_impact{"screen", {scale * d.x, scale * d.y, scale * d.z, dt}, std::nullopt};
        Vec3 p_scaled = tof_momentum(scaled_impact, 0.0, chrono, mass);
        CHECK(p_scaled.x == Catch::Approx(scale * p.x).margin(1e-9));
        CHECK(p_scaled.y == Catch::Approx(scale * p.y).margin(1e-9));
        CHECK(p_scaled.z == Catch::Approx(scale * p.z).margin(1e-9));

        Mark late_chrono{"chrono", {0.0, 0.0, 0.0, scale * dt}, std::nullopt};
        Mark late_impact{"screen", {d.x, d.y, d.z, scale * dt}, std::nullopt};
        Vec3 p_late = tof_momentum(late_impact, 0.0, late_chrono, mass);
        CHECK(p_late.x == Catch::Approx(p.x / scale).margin(1e-9));
        CHECK(p_late.norm() == Catch::Approx(p.norm() / scale).margin(1e-9));
    }
}

TEST_CASE("validate_rule passes a well-formed die rule") {
    auto world = die_world();
    MeasurementSpec read{"read", {}};
    CodingRule rule = world->make_rule(read);
    ValidationReport report =
        validate_rule(rule, *world, world->canonical_generation(), read, 10000);
    CHECK(report.disjoint);
    CHECK(report.uncodable == 0);
    CHECK(report.ambiguous == 0);
    CHECK(report.passed());
}

TEST_CASE("validate_rule reports overlapping regions by name") {
    auto world = die_world();
    MeasurementSpec read{"read", {}};
    CodingRule rule = world->make_rule(read);
    rule.regions[1].boxes[0].lo[0] = rule.regions[0].boxes[0].lo[0];  // face_2 now covers face_1
    ValidationReport report = validate_rule(rule, *world, world->canonical_generation(), read, 100);
    CHECK_FALSE(report.disjoint);
    REQUIRE(report.overlapping_regions.size() == 1);
    CHECK(report.overlapping_regions[0].first == "face_1");
    CHECK(report.overlapping_regions[0].second == "face_2");
    CHECK_FALSE(report.passed());
}

TEST_CASE("validate_rule totality failure rate matches the missing mass") {
    auto world = die_world();
    MeasurementSpec read{"read", {}};
    CodingRule rule = world->make_rule(read);
    rule.regions.pop_back();  // no region for face 6
    rule.spectrum.pop_back();
    const std::uint64_t n = 10000;
    ValidationReport report = validate_rule(rule, *world, world->canonical_generation(), read, n);
    CHECK(report.disjoint);
    CHECK(report.uncodable > 0);
    double rate = report.uncodable_rate();
    CHECK(std::abs(rate - 1.0 / 6.0) < oracle::binomial_4sigma(1.0 / 6.0, double(n)));
}

TEST_CASE("every world-emitted mark set matches exactly one region") {
    // uniqueness fuzz across the worlds with nontrivial rules
    struct Case {
        WorldSpec spec;
        MeasurementSpec mes;
    };
    std::vector<Case> cases;
    cases.push_back({{"classical_die", "", {}}, MeasurementSpec{"read", {}}});
    cases.push_back({{"qubit", "", {}}, MeasurementSpec{"sigma_x", {}}});
    cases.push_back({{"singlet_pair", "", {}},
                     pair_spin_spec(setting_from_angle_deg(0.0), setting_from_angle_deg(37.0))});
    cases.push_back({{"free_particle", "", {}}, MeasurementSpec{"momentum_tof", {}}});
    cases.push_back({{"double_slit", "", {}}, MeasurementSpec{"screen", {}}});

    for (const auto& c : cases) {
        auto world = make_world(c.spec);
        CodingRule rule = world->make_rule(c.mes);
        std::uint64_t n = c.spec.kind == "classical_die" ? 100000 : 20000;
        ValidationReport report =
            validate_rule(rule, *world, world->canonical_generation(), c.mes, n);
        INFO(c.spec.kind);
        CHECK(report.passed());
    }
}
