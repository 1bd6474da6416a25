#include <catch2/catch_amalgamated.hpp>

#include <set>

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

FrequencyTable manual_table(std::vector<SpectrumValue> spectrum, std::vector<std::uint64_t> counts) {
    FrequencyTable t;
    t.measurement_label = "manual";
    t.spectrum = std::move(spectrum);
    t.counts = std::move(counts);
    for (std::uint64_t c : t.counts) t.n += c;
    return t;
}

Event random_event(RandomSource& rng, std::size_t universe) {
    Event e;
    for (std::size_t j = 0; j < universe; ++j)
        if (rng.bernoulli(0.5)) e.push_back(j);
    return e;
}

ProbabilityTree qubit_pauli_tree(double theta, double phi, std::uint64_t n, std::uint64_t seed) {
    auto qubit = world_of("qubit");
    GenerationOp g = qubit->canonical_generation();
    g.params["theta"] = theta;
    g.params["phi"] = phi;
    std::vector<MeasurementSpec> views = {MeasurementSpec{"sigma_x", {}},
                                          MeasurementSpec{"sigma_y", {}},
                                          MeasurementSpec{"sigma_z", {}}};
    std::vector<CodingRule> rules;
    for (const auto& v : views) rules.push_back(qubit->make_rule(v));
    return build_tree(*qubit, g, views, rules, n, seed);
}

}  // namespace

TEST_CASE("build_space carries the table's law") {
    auto die = world_of("classical_die");
    MeasurementSpec read{"read", {}};
    CodingRule rule = die->make_rule(read);
    const std::uint64_t n = 6000;
    ProbabilitySpace space =
        build_space(accumulate_statistics(*die, die->canonical_generation(), read, rule, n, 12));

    CHECK(space.probability(space.full_event()) == 1.0);
    Event even = {1, 3, 5};  // faces 2, 4, 6
    CHECK(std::abs(space.probability(even) - 0.5) < oracle::binomial_4sigma(0.5, double(n)));

    ProbabilitySpace point = build_space(
        manual_table({SpectrumValue{1, 1.0, "a"}, SpectrumValue{2, 2.0, "b"}}, {1000, 0}));
    CHECK(point.probability({0}) == 1.0);
    CHECK(point.probability({1}) == 0.0);

    ProbabilitySpace two = build_space(
        manual_table({SpectrumValue{1, 1.0, "a"}, SpectrumValue{2, 2.0, "b"}}, {30, 70}));
    CHECK(two.probability({0}) == 0.3);
    CHECK(two.probability({0, 1}) == 1.0);

    FrequencyTable empty;
    empty.spectrum = {SpectrumValue{1, 1.0, "a"}};
    empty.counts = {0};
    CHECK_THROWS_AS(build_space(empty), EmptyTable);
}

TEST_CASE("Kolmogorov axioms hold exactly on built spaces") {
    std::vector<ProbabilitySpace> spaces;
    {
        auto die = world_of("classical_die");
        MeasurementSpec read{"read", {}};
        spaces.push_back(build_space(accumulate_statistics(
            *die, die->canonical_generation(), read, die->make_rule(read), 60000, 5)));
    }
    {
        auto singlet = world_of("singlet_pair");
        MeasurementSpec mes = pair_spin_spec(setting_from_angle_deg(0), setting_from_angle_deg(60));
        spaces.push_back(build_space(accumulate_statistics(
            *singlet, singlet->canonical_generation(), mes, singlet->make_rule(mes), 10000, 6)));
    }
    {
        auto particle = world_of("free_particle");
        MeasurementSpec mes{"momentum_tof", {}};
        spaces.push_back(build_space(accumulate_statistics(
            *particle, particle->canonical_generation(), mes, particle->make_rule(mes), 10000, 7)));
    }

    RandomSource rng(0xa1);
    for (const auto& space : spaces) {
        CHECK(space.probability({}) == 0.0);
        CHECK(space.probability(space.full_event()) == 1.0);
        for (int trial = 0; trial < 10000; ++trial) {
            Event a = random_event(rng, space.universe.size());
            Event b = random_event(rng, space.universe.size());
            // exact integer-count arithmetic
            std::uint64_t ca = space.count(a);
            std::uint64_t cb = space.count(b);
            std::uint64_t cu = space.count(event_union(a, b));
            std::uint64_t ci = space.count(event_intersection(a, b));
            CHECK(cu + ci == ca + cb);
            CHECK(cu <= ca + cb);
            if (events_disjoint(a, b)) CHECK(cu == ca + cb);
            Event sub = event_intersection(a, b);  // sub is a subset of a
            CHECK(space.count(sub) <= ca);
        }
    }
}

TEST_CASE("build_tree groups views into branches over one trunk") {
    ProbabilityTree tree = qubit_pauli_tree(0.0, 0.0, 2000, 42);
    REQUIRE(tree.branches.size() == 3);
    std::set<std::string> classes;
    for (const auto& b : tree.branches) {
        CHECK(tree.trunk == tree.branches.front().table.g);
        CHECK(b.table.g == tree.trunk);  // trunk sharing, literal
        CHECK(b.table.n == 2000);
        CHECK(b.envelope.duration > 0.0);
        classes.insert(b.compatibility_class_id);
    }
    CHECK(classes.size() == 3);

    // branch exclusivity: no exemplar feeds two branches
    std::set<std::uint64_t> seen;
    for (const auto& b : tree.branches) {
        REQUIRE(b.exemplar_ids.size() == 2000);
        for (std::uint64_t id : b.exemplar_ids) CHECK(seen.insert(id).second);
    }
}

TEST_CASE("single-view and pair-universe trees") {
    auto die = world_of("classical_die");
    MeasurementSpec read{"read", {}};
    ProbabilityTree dtree = build_tree(*die, die->canonical_generation(), {read},
                                       {die->make_rule(read)}, 1000, 3);
    CHECK(dtree.branches.size() == 1);

    auto singlet = world_of("singlet_pair");
    MeasurementSpec pair = pair_spin_spec(setting_from_angle_deg(0), setting_from_angle_deg(60));
    ProbabilityTree stree = build_tree(*singlet, singlet->canonical_generation(), {pair},
                                       {singlet->make_rule(pair)}, 1000, 4);
    REQUIRE(stree.branches.size() == 1);
    for (const auto& v : stree.branches[0].space.universe) CHECK(v.is_pair());

    CHECK_THROWS_AS(build_tree(*die, die->canonical_generation(), {}, {}, 10, 1), EmptyViewSet);

    // two different settings cannot share one branch's interaction
    MeasurementSpec other = pair_spin_spec(setting_from_angle_deg(0), setting_from_angle_deg(90));
    CHECK_THROWS_AS(build_tree(*singlet, singlet->canonical_generation(), {pair, other},
                               {singlet->make_rule(pair), singlet->make_rule(other)}, 100, 5),
                    IncompatibleMeasurementSpec);
}

TEST_CASE("independence verdicts") {
    SECTION("independent coin pair") {
        auto coin = world_of("coin_pair");
        MeasurementSpec mes{"read_pair", {}};
        ProbabilitySpace s = build_space(accumulate_statistics(
            *coin, coin->canonical_generation(), mes, coin->make_rule(mes), 100000, 11));
        // universe order: (+,+), (+,-), (-,+), (-,-)
        Event first_plus = {0, 1};
        Event second_plus = {0, 2};
        CHECK(independence_verdict(s, first_plus, second_plus) == IndependenceVerdict::independent);
    }

    SECTION("perfectly anticorrelated singlet at equal settings") {
        auto singlet = world_of("singlet_pair");
        MeasurementSpec mes = pair_spin_spec(setting_from_angle_deg(0), setting_from_angle_deg(0));
        ProbabilitySpace s = build_space(accumulate_statistics(
            *singlet, singlet->canonical_generation(), mes, singlet->make_rule(mes), 100000, 12));
        Event first_plus = {0, 1};
        Event second_plus = {0, 2};
        CHECK(independence_verdict(s, first_plus, second_plus) == IndependenceVerdict::dependent);
    }

    SECTION("the full event is independent of anything, exactly") {
        ProbabilitySpace s = build_space(
            manual_table({SpectrumValue{1, 1.0, "a"}, SpectrumValue{2, 2.0, "b"}}, {37, 63}));
        CHECK(independence_verdict(s, s.full_event(), {0}) == IndependenceVerdict::independent);
        CHECK(independence_verdict(s, {}, {0}) == IndependenceVerdict::independent);
    }
}

TEST_CASE("meta-dependence shows the dispersion tradeoff across branches") {
    ProbabilityTree tree = qubit_pauli_tree(0.0, 0.0, 100000, 21);
    MetaDependenceReport report = meta_dependence_report(tree);
    REQUIRE(report.pairs.size() == 3);

    double var_z = 0.0, var_x = 0.0;
    for (const auto& b : tree.branches) {
        if (b.compatibility_class_id == "sigma_z") var_z = dispersion(b.table);
        if (b.compatibility_class_id == "sigma_x") var_x = dispersion(b.table);
    }
    CHECK(var_z == 0.0);
    CHECK(var_x == Catch::Approx(1.0).margin(0.05));

    REQUIRE(report.pauli_variance_sum.has_value());
    CHECK(*report.pauli_variance_sum == Catch::Approx(2.0).margin(0.05));

    // an arbitrary preparation keeps the purity sum at 2
    ProbabilityTree tilted = qubit_pauli_tree(1.2, 0.9, 100000, 22);
    MetaDependenceReport tilted_report = meta_dependence_report(tilted);
    REQUIRE(tilted_report.pauli_variance_sum.has_value());
    CHECK(*tilted_report.pauli_variance_sum == Catch::Approx(2.0).margin(0.05));

    // a one-branch tree has no incompatible pair to report on
    auto die = world_of("classical_die");
    MeasurementSpec read{"read", {}};
    ProbabilityTree dtree = build_tree(*die, die->canonical_generation(), {read},
                                       {die->make_rule(read)}, 1000, 23);
    CHECK_THROWS_AS(meta_dependence_report(dtree), EmptyViewSet);
}

TEST_CASE("joint/marginal factorization") {
    SECTION("independent coin pair deviations vanish within CI") {
        auto coin = world_of("coin_pair");
        MeasurementSpec mes{"read_pair", {}};
        ProbabilityTree tree = build_tree(*coin, coin->canonical_generation(), {mes},
                                          {coin->make_rule(mes)}, 100000, 31);
        FactorizationReport r = joint_marginal_report(tree.branches[0], 3.5);
        for (std::size_t c = 0; c < r.deviation.size(); ++c) {
            CHECK(r.deviation_ci[c].low <= 0.0);
            CHECK(r.deviation_ci[c].high >= 0.0);
        }
    }

    SECTION("singlet at 60 degrees misses factorization by 1/8") {
        auto singlet = world_of("singlet_pair");
        MeasurementSpec mes = pair_spin_spec(setting_from_angle_deg(0), setting_from_angle_deg(60));
        ProbabilityTree tree = build_tree(*singlet, singlet->canonical_generation(), {mes},
                                          {singlet->make_rule(mes)}, 100000, 32);
        FactorizationReport r = joint_marginal_report(tree.branches[0]);
        // cell (+,+): joint 1/8 vs product 1/4
        CHECK(r.first_values[0] == 1.0);
        CHECK(r.second_values[0] == 1.0);
        CHECK(r.deviation[0] == Catch::Approx(-0.125).margin(0.01));
        CHECK(r.max_abs_deviation > 0.1);
    }

    SECTION("singlet at 90 degrees factorizes") {
        auto singlet = world_of("singlet_pair");
        MeasurementSpec mes = pair_spin_spec(setting_from_angle_deg(0), setting_from_angle_deg(90));
        ProbabilityTree tree = build_tree(*singlet, singlet->canonical_generation(), {mes},
                                          {singlet->make_rule(mes)}, 100000, 33);
        FactorizationReport r = joint_marginal_report(tree.branches[0]);
        for (std::size_t c = 0; c < r.joint.size(); ++c) {
            CHECK(r.joint[c] == Catch::Approx(0.25).margin(oracle::binomial_4sigma(0.25, 100000.0)));
            CHECK(std::abs(r.deviation[c]) < oracle::binomial_4sigma(0.25, 100000.0));
        }
    }

    SECTION("scalar universes are rejected") {
        auto die = world_of("classical_die");
        MeasurementSpec read{"read", {}};
        ProbabilityTree tree = build_tree(*die, die->canonical_generation(), {read},
                                          {die->make_rule(read)}, 1000, 34);
        CHECK_THROWS_AS(joint_marginal_report(tree.branches[0]), NonProductUniverse);
    }
}

TEST_CASE("composed generation interferes; blocked routes do not") {
    auto slit_world = world_of("double_slit");
    auto* slit = dynamic_cast<const DoubleSlitWorld*>(slit_world.get());
    REQUIRE(slit != nullptr);

    GenerationOp g1 = slit_world->canonical_generation();
    g1.label = "slit1";
    g1.params.clear();
    GenerationOp g2 = g1;
    g2.label = "slit2";
    GenerationOp g12 = slit_world->canonical_generation();

    MeasurementSpec view{"screen", {{"bins", 32.0}}};
    CodingRule rule = slit_world->make_rule(view);
    const std::uint64_t n = 200000;
    InterferenceReport r =
        composed_interference_report(*slit_world, g1, g2, g12, view, rule, n, 71);

    CHECK(r.fringe_visibility >= 0.9);

    // locate the central (bright) and first dark-fringe bins
    std::size_t bright = 0, dark = 0;
    double best_bright = 1e9, best_dark = 1e9;
    for (std::size_t j = 0; j < rule.regions.size(); ++j) {
        double center = 0.5 * (rule.regions[j].boxes[0].lo[0] + rule.regions[j].boxes[0].hi[0]);
        if (std::abs(center) < best_bright) {
            best_bright = std::abs(center);
            bright = j;
        }
        if (std::abs(center - slit->fringe_period() / 2.0) < best_dark) {
            best_dark = std::abs(center - slit->fringe_period() / 2.0);
            dark = j;
        }
    }
    double mixture_bright =
        0.5 * (r.table_g1.frequency(bright) + r.table_g2.frequency(bright));
    CHECK(r.table_g12.frequency(bright) / mixture_bright == Catch::Approx(2.0).margin(0.15));
    double mixture_dark = 0.5 * (r.table_g1.frequency(dark) + r.table_g2.frequency(dark));
    CHECK(r.table_g12.frequency(dark) < 0.1 * mixture_dark);

    // raw-sum deviation is reported too, and differs from the mixture one
    CHECK(r.deviation_from_raw_sum[bright] ==
          Catch::Approx(r.deviation_from_mixture[bright] - mixture_bright).margin(1e-12));

    SECTION("blocking the second slit reproduces the single-slit law") {
        GenerationOp blocked = g12;
        blocked.params["open2"] = 0.0;
        InterferenceReport rb =
            composed_interference_report(*slit_world, g1, g2, blocked, view, rule, n, 72);
        for (std::size_t j = 0; j < rule.regions.size(); ++j) {
            double diff = rb.table_g12.frequency(j) - rb.table_g1.frequency(j);
            CHECK(std::abs(diff) < 2.0 * oracle::binomial_4sigma(1.0 / 32.0, double(n)));
        }
        CHECK(rb.fringe_visibility < 0.1);
    }

    SECTION("non-composable requests are rejected") {
        CHECK_THROWS_AS(
            composed_interference_report(*slit_world, g1, g2, g1, view, rule, 100, 1),
            NotComposable);
        auto die = world_of("classical_die");
        MeasurementSpec read{"read", {}};
        CHECK_THROWS_AS(composed_interference_report(*die, die->canonical_generation(),
                                                     die->canonical_generation(),
                                                     die->canonical_generation(), read,
                                                     die->make_rule(read), 100, 1),
                        NotComposable);
    }
}

TEST_CASE("the analytic fringe law has unit visibility; the binned one nearly") {
    auto slit_world = world_of("double_slit");
    auto* slit = dynamic_cast<const DoubleSlitWorld*>(slit_world.get());
    REQUIRE(slit != nullptr);
    // continuum extrema of (1 + cos)/W
    double dmax = 2.0, dmin = 0.0;
    CHECK((dmax - dmin) / (dmax + dmin) == 1.0);

    // binned analytic visibility over the rule's bins
    MeasurementSpec view{"screen", {}};
    CodingRule rule = slit_world->make_rule(view);
    double pmax = 0.0, pmin = 1.0;
    for (const auto& region : rule.regions) {
        double p = oracle::fringe_bin(region.boxes[0].lo[0], region.boxes[0].hi[0],
                                      slit->fringe_period(), slit->window_width(), 1.0);
        pmax = std::max(pmax, p);
        pmin = std::min(pmin, p);
    }
    CHECK((pmax - pmin) / (pmax + pmin) > 0.97);
}

TEST_CASE("tree renders to text with trunk and branch laws") {
    ProbabilityTree tree = qubit_pauli_tree(0.0, 0.0, 1000, 91);
    std::string text = render_tree_text(tree);
    CHECK(text.find("trunk") != std::string::npos);
    CHECK(text.find("sigma_x") != std::string::npos);
    CHECK(text.find("sigma_z") != std::string::npos);
    CHECK(text.find("p(+1)") != std::string::npos);
}
