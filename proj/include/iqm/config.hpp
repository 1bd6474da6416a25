// config.hpp
// Run configuration: a JSON document with a mandatory seed, one world, exactly
// one command block ({statistics | tree | bell | scan | interference}) and an
// output spec. Parsing is strict: unknown keys are rejected with the JSON
// path of the offending key. run() dispatches the parsed pipeline and writes
// report files; identical (config, seed) runs produce byte-identical files.
#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "iqm/reports.hpp"

namespace iqm {

struct OutputSpec {
    std::string dir = ".";
    bool json = true;
    bool csv = true;
};

struct StatisticsCmd {
    GenerationOp g;
    MeasurementSpec mes;
    std::uint64_t n = 1;
    std::vector<std::uint64_t> schedule;  // optional convergence checkpoints
    std::optional<CodingRule> rule;       // defaults to the world's rule
};

struct TreeCmd {
    GenerationOp g;
    std::vector<MeasurementSpec> views;
    std::uint64_t n_per_branch = 1;
};

struct LhvTableConfig {
    std::vector<double> settings_deg;
    std::vector<double> rho;
    std::vector<std::vector<int>> response_a;
    std::vector<std::vector<int>> response_b;
};

struct BellCmd {
    std::uint64_t n = 1;
    std::array<double, 4> chsh_deg{0.0, 90.0, 45.0, 135.0};  // a, a', b, b'
    std::optional<std::array<double, 3>> bell1964_deg;
    std::vector<double> sweep_deg;  // optional E(theta) sweep, b = a + theta
    std::optional<LhvTableConfig> lhv;
};

struct ScanCmd {
    ScanConfig cfg;
};

struct InterferenceCmd {
    GenerationOp g1, g2, g12;
    MeasurementSpec view;
    std::uint64_t n = 1;
};

using Command = std::variant<StatisticsCmd, TreeCmd, BellCmd, ScanCmd, InterferenceCmd>;

struct RunConfig {
    std::uint64_t seed = 0;
    WorldSpec world;
    Command command;
    OutputSpec output;
    unsigned threads = 0;  // 0 = all cores; set by the CLI, not the file
};

// --------------------------------------------------------------------------- parsing

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                       const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok) throw SchemaError(path + "." + it.key(), "unknown key");
    }
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path + "." + key, "missing required key");
    return *it;
}

inline double as_number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    return j.get<double>();
}

inline std::uint64_t as_count(const Json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        throw SchemaError(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::string as_string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path, "expected a string");
    return j.get<std::string>();
}

inline ParamMap parse_params(const Json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object of named numbers");
    ParamMap params;
    for (auto it = j.begin(); it != j.end(); ++it)
        params[it.key()] = as_number(it.value(), path + "." + it.key());
    return params;
}

inline GenerationOp parse_generation(const Json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    check_keys(j, {"label", "params", "spacetime_support"}, path);
    GenerationOp g;
    g.label = as_string(require(j, "label", path), path + ".label");
    if (j.contains("params")) g.params = parse_params(j["params"], path + ".params");
    if (j.contains("spacetime_support")) {
        const Json& s = j["spacetime_support"];
        check_keys(s, {"spatial_extent", "duration"}, path + ".spacetime_support");
        g.spacetime_support.spatial_extent =
            s.contains("spatial_extent")
                ? as_number(s["spatial_extent"], path + ".spacetime_support.spatial_extent")
                : 0.0;
        g.spacetime_support.duration =
            s.contains("duration") ? as_number(s["duration"], path + ".spacetime_support.duration")
                                   : 0.0;
        if (!g.spacetime_support.valid())
            throw SchemaError(path + ".spacetime_support", "extent and duration must be >= 0");
    }
    return g;
}

inline MeasurementSpec parse_measurement(const Json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    check_keys(j, {"label", "params"}, path);
    MeasurementSpec mes;
    mes.label = as_string(require(j, "label", path), path + ".label");
    if (j.contains("params")) mes.params = parse_params(j["params"], path + ".params");
    return mes;
}

inline SpaceTimeBox parse_box(const Json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object with 'lo' and 'hi'");
    check_keys(j, {"lo", "hi"}, path);
    const Json& lo = require(j, "lo", path);
    const Json& hi = require(j, "hi", path);
    if (!lo.is_array() || lo.size() != 4 || !hi.is_array() || hi.size() != 4)
        throw SchemaError(path, "'lo' and 'hi' must be arrays of 4 numbers (x, y, z, t)");
    SpaceTimeBox box;
    for (std::size_t k = 0; k < 4; ++k) {
        box.lo[k] = as_number(lo[k], path + ".lo");
        box.hi[k] = as_number(hi[k], path + ".hi");
    }
    if (!box.valid()) throw SchemaError(path, "box needs lo <= hi on every axis");
    return box;
}

inline CodingRule parse_rule(const Json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    check_keys(j, {"measurement_label", "spectrum", "regions"}, path);
    CodingRule rule;
    rule.measurement_label =
        as_string(require(j, "measurement_label", path), path + ".measurement_label");
    const Json& spectrum = require(j, "spectrum", path);
    if (!spectrum.is_array() || spectrum.empty())
        throw SchemaError(path + ".spectrum", "expected a non-empty array");
    int expected = 1;
    for (const Json& jv : spectrum) {
        std::string vp = path + ".spectrum[" + std::to_string(expected - 1) + "]";
        check_keys(jv, {"index", "label", "value"}, vp);
        SpectrumValue v;
        v.index = static_cast<int>(as_count(require(jv, "index", vp), vp + ".index"));
        if (v.index != expected) throw SchemaError(vp + ".index", "indices must run 1..k contiguously");
        ++expected;
        v.label = as_string(require(jv, "label", vp), vp + ".label");
        const Json& val = require(jv, "value", vp);
        if (val.is_number()) {
            v.value = val.get<double>();
        } else if (val.is_array() && val.size() == 3) {
            v.value = Vec3{as_number(val[0], vp), as_number(val[1], vp), as_number(val[2], vp)};
        } else if (val.is_object()) {
            check_keys(val, {"first", "second"}, vp + ".value");
            v.value = OutcomePair{as_number(require(val, "first", vp), vp + ".value.first"),
                                  as_number(require(val, "second", vp), vp + ".value.second")};
        } else {
            throw SchemaError(vp + ".value", "expected number, [x,y,z] or {first, second}");
        }
        rule.spectrum.push_back(v);
    }
    const Json& regions = require(j, "regions", path);
    if (!regions.is_array() || regions.empty())
        throw SchemaError(path + ".regions", "expected a non-empty array");
    std::size_t ri = 0;
    for (const Json& jr : regions) {
        std::string rp = path + ".regions[" + std::to_string(ri++) + "]";
        check_keys(jr, {"region_id", "spectrum_index", "boxes"}, rp);
        CodingRegion region;
        region.region_id = as_string(require(jr, "region_id", rp), rp + ".region_id");
        region.spectrum_index =
            static_cast<int>(as_count(require(jr, "spectrum_index", rp), rp + ".spectrum_index"));
        if (region.spectrum_index < 1 || region.spectrum_index > static_cast<int>(rule.spectrum.size()))
            throw SchemaError(rp + ".spectrum_index", "out of spectrum range");
        const Json& boxes = require(jr, "boxes", rp);
        if (!boxes.is_array() || boxes.empty())
            throw SchemaError(rp + ".boxes", "expected a non-empty array");
        std::size_t bi = 0;
        for (const Json& jb : boxes)
            region.boxes.push_back(parse_box(jb, rp + ".boxes[" + std::to_string(bi++) + "]"));
        rule.regions.push_back(region);
    }
    return rule;
}

inline LhvTableConfig parse_lhv(const Json& j, const std::string& path) {
    check_keys(j, {"settings_deg", "rho", "response_a", "response_b"}, path);
    LhvTableConfig lhv;
    for (const Json& v : require(j, "settings_deg", path))
        lhv.settings_deg.push_back(as_number(v, path + ".settings_deg"));
    for (const Json& v : require(j, "rho", path)) lhv.rho.push_back(as_number(v, path + ".rho"));
    auto parse_table = [&](const char* key, std::vector<std::vector<int>>& table) {
        for (const Json& row : require(j, key, path)) {
            std::vector<int> r;
            for (const Json& v : row) {
                double x = as_number(v, path + "." + key);
                if (x != 1.0 && x != -1.0)
                    throw SchemaError(path + "." + key, "responses must be +1 or -1");
                r.push_back(static_cast<int>(x));
            }
            if (r.size() != lhv.rho.size())
                throw SchemaError(path + "." + key, "each row needs one response per lambda");
            table.push_back(r);
        }
        if (table.size() != lhv.settings_deg.size())
            throw SchemaError(path + "." + key, "one row per setting required");
    };
    parse_table("response_a", lhv.response_a);
    parse_table("response_b", lhv.response_b);
    return lhv;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw SchemaError("$", "top level must be an object");
    detail::check_keys(root,
                       {"seed", "world", "statistics", "tree", "bell", "scan", "interference",
                        "output"},
                       "$");

    RunConfig cfg;
    if (!root.contains("seed")) throw MissingSeed("config must carry an explicit 64-bit seed");
    cfg.seed = detail::as_count(root["seed"], "$.seed");

    const Json& jw = detail::require(root, "world", "$");
    detail::check_keys(jw, {"kind", "id", "params"}, "$.world");
    cfg.world.kind = detail::as_string(detail::require(jw, "kind", "$.world"), "$.world.kind");
    if (jw.contains("id")) cfg.world.id = detail::as_string(jw["id"], "$.world.id");
    if (jw.contains("params")) cfg.world.params = detail::parse_params(jw["params"], "$.world.params");
    if (cfg.world.id.empty()) cfg.world.id = cfg.world.kind;

    int blocks = 0;
    for (const char* key : {"statistics", "tree", "bell", "scan", "interference"})
        if (root.contains(key)) ++blocks;
    if (blocks != 1)
        throw SchemaError("$", "exactly one command block required, found " + std::to_string(blocks));

    if (root.contains("statistics")) {
        const Json& j = root["statistics"];
        detail::check_keys(j, {"generation", "measurement", "n", "schedule", "rule"}, "$.statistics");
        StatisticsCmd cmd;
        cmd.g = detail::parse_generation(detail::require(j, "generation", "$.statistics"),
                                         "$.statistics.generation");
        cmd.g.world_id = cfg.world.id;
        cmd.mes = detail::parse_measurement(detail::require(j, "measurement", "$.statistics"),
                                            "$.statistics.measurement");
        cmd.n = detail::as_count(detail::require(j, "n", "$.statistics"), "$.statistics.n");
        if (cmd.n < 1) throw SchemaError("$.statistics.n", "must be >= 1");
        if (j.contains("schedule")) {
            for (const Json& v : j["schedule"])
                cmd.schedule.push_back(detail::as_count(v, "$.statistics.schedule"));
            for (std::size_t i = 1; i < cmd.schedule.size(); ++i)
                if (cmd.schedule[i] <= cmd.schedule[i - 1])
                    throw SchemaError("$.statistics.schedule", "must be strictly increasing");
            if (!cmd.schedule.empty() && cmd.schedule.size() < 3)
                throw SchemaError("$.statistics.schedule", "needs at least 3 checkpoints");
        }
        if (j.contains("rule")) cmd.rule = detail::parse_rule(j["rule"], "$.statistics.rule");
        cfg.command = std::move(cmd);
    } else if (root.contains("tree")) {
        const Json& j = root["tree"];
        detail::check_keys(j, {"generation", "views", "n_per_branch"}, "$.tree");
        TreeCmd cmd;
        cmd.g = detail::parse_generation(detail::require(j, "generation", "$.tree"),
                                         "$.tree.generation");
        cmd.g.world_id = cfg.world.id;
        const Json& views = detail::require(j, "views", "$.tree");
        if (!views.is_array() || views.empty())
            throw SchemaError("$.tree.views", "expected a non-empty array");
        std::size_t vi = 0;
        for (const Json& v : views)
            cmd.views.push_back(
                detail::parse_measurement(v, "$.tree.views[" + std::to_string(vi++) + "]"));
        cmd.n_per_branch =
            detail::as_count(detail::require(j, "n_per_branch", "$.tree"), "$.tree.n_per_branch");
        if (cmd.n_per_branch < 1) throw SchemaError("$.tree.n_per_branch", "must be >= 1");
        cfg.command = std::move(cmd);
    } else if (root.contains("bell")) {
        const Json& j = root["bell"];
        detail::check_keys(j, {"n", "chsh_angles_deg", "bell1964_angles_deg", "sweep_deg", "lhv"},
                           "$.bell");
        BellCmd cmd;
        cmd.n = detail::as_count(detail::require(j, "n", "$.bell"), "$.bell.n");
        if (cmd.n < 1) throw SchemaError("$.bell.n", "must be >= 1");
        if (j.contains("chsh_angles_deg")) {
            const Json& angles = j["chsh_angles_deg"];
            if (!angles.is_array() || angles.size() != 4)
                throw SchemaError("$.bell.chsh_angles_deg", "expected [a, a', b, b']");
            for (std::size_t k = 0; k < 4; ++k)
                cmd.chsh_deg[k] = detail::as_number(angles[k], "$.bell.chsh_angles_deg");
        }
        if (j.contains("bell1964_angles_deg")) {
            const Json& angles = j["bell1964_angles_deg"];
            if (!angles.is_array() || angles.size() != 3)
                throw SchemaError("$.bell.bell1964_angles_deg", "expected [a, b, c]");
            cmd.bell1964_deg = {detail::as_number(angles[0], "$.bell.bell1964_angles_deg"),
                                detail::as_number(angles[1], "$.bell.bell1964_angles_deg"),
                                detail::as_number(angles[2], "$.bell.bell1964_angles_deg")};
        }
        if (j.contains("sweep_deg"))
            for (const Json& v : j["sweep_deg"])
                cmd.sweep_deg.push_back(detail::as_number(v, "$.bell.sweep_deg"));
        if (j.contains("lhv")) cmd.lhv = detail::parse_lhv(j["lhv"], "$.bell.lhv");
        cfg.command = std::move(cmd);
    } else if (root.contains("scan")) {
        const Json& j = root["scan"];
        detail::check_keys(
            j, {"d1", "d2", "v1", "v2", "vi_grid", "margin", "n_per_point", "z", "settings_deg"},
            "$.scan");
        ScanCmd cmd;
        cmd.cfg.d1 = detail::as_number(detail::require(j, "d1", "$.scan"), "$.scan.d1");
        cmd.cfg.d2 = detail::as_number(detail::require(j, "d2", "$.scan"), "$.scan.d2");
        cmd.cfg.v1 = detail::as_number(detail::require(j, "v1", "$.scan"), "$.scan.v1");
        cmd.cfg.v2 = detail::as_number(detail::require(j, "v2", "$.scan"), "$.scan.v2");
        const Json& grid = detail::require(j, "vi_grid", "$.scan");
        if (!grid.is_array()) throw SchemaError("$.scan.vi_grid", "expected an array");
        for (const Json& v : grid) cmd.cfg.vi_grid.push_back(detail::as_number(v, "$.scan.vi_grid"));
        for (std::size_t i = 1; i < cmd.cfg.vi_grid.size(); ++i)
            if (cmd.cfg.vi_grid[i] <= cmd.cfg.vi_grid[i - 1])
                throw SchemaError("$.scan.vi_grid", "must be sorted strictly ascending");
        if (j.contains("margin"))
            cmd.cfg.margin = detail::as_number(j["margin"], "$.scan.margin");
        cmd.cfg.n_per_point =
            detail::as_count(detail::require(j, "n_per_point", "$.scan"), "$.scan.n_per_point");
        if (j.contains("z")) cmd.cfg.z = detail::as_number(j["z"], "$.scan.z");
        if (j.contains("settings_deg")) {
            const Json& s = j["settings_deg"];
            if (!s.is_array() || s.size() != 4)
                throw SchemaError("$.scan.settings_deg", "expected [a, a', b, b']");
            cmd.cfg.settings.a_deg = detail::as_number(s[0], "$.scan.settings_deg");
            cmd.cfg.settings.a2_deg = detail::as_number(s[1], "$.scan.settings_deg");
            cmd.cfg.settings.b_deg = detail::as_number(s[2], "$.scan.settings_deg");
            cmd.cfg.settings.b2_deg = detail::as_number(s[3], "$.scan.settings_deg");
        }
        try {
            cmd.cfg.check();
        } catch (const Error& e) {
            throw SchemaError("$.scan", e.what());
        }
        cfg.command = std::move(cmd);
    } else {
        const Json& j = root["interference"];
        detail::check_keys(j, {"g1", "g2", "g12", "view", "n"}, "$.interference");
        InterferenceCmd cmd;
        cmd.g1 = detail::parse_generation(detail::require(j, "g1", "$.interference"),
                                          "$.interference.g1");
        cmd.g2 = detail::parse_generation(detail::require(j, "g2", "$.interference"),
                                          "$.interference.g2");
        cmd.g12 = detail::parse_generation(detail::require(j, "g12", "$.interference"),
                                           "$.interference.g12");
        cmd.g1.world_id = cmd.g2.world_id = cmd.g12.world_id = cfg.world.id;
        cmd.view = detail::parse_measurement(detail::require(j, "view", "$.interference"),
                                             "$.interference.view");
        cmd.n = detail::as_count(detail::require(j, "n", "$.interference"), "$.interference.n");
        if (cmd.n < 1) throw SchemaError("$.interference.n", "must be >= 1");
        cfg.command = std::move(cmd);
    }

    if (root.contains("output")) {
        const Json& j = root["output"];
        detail::check_keys(j, {"dir", "formats"}, "$.output");
        if (j.contains("dir")) cfg.output.dir = detail::as_string(j["dir"], "$.output.dir");
        if (j.contains("formats")) {
            cfg.output.json = cfg.output.csv = false;
            for (const Json& f : j["formats"]) {
                std::string fmt = detail::as_string(f, "$.output.formats");
                if (fmt == "json")
                    cfg.output.json = true;
                else if (fmt == "csv")
                    cfg.output.csv = true;
                else
                    throw SchemaError("$.output.formats", "unknown format '" + fmt + "'");
            }
        }
    }
    return cfg;
}

// --------------------------------------------------------------------------- pipelines

namespace detail {

inline std::string out_path(const OutputSpec& out, const std::string& name) {
    return (std::filesystem::path(out.dir) / name).string();
}

inline void emit(const OutputSpec& out, const std::string& stem, const Json* json,
                 const std::string* csv) {
    std::filesystem::create_directories(out.dir);
    if (out.json && json != nullptr) write_text_file(out_path(out, stem + ".json"), json->dump(2) + "\n");
    if (out.csv && csv != nullptr) write_text_file(out_path(out, stem + ".csv"), *csv);
}

inline unsigned effective_threads(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

inline int run_statistics(const RunConfig& cfg, const StatisticsCmd& cmd) {
    WorldHandle world = make_world(cfg.world);
    CodingRule rule = cmd.rule ? *cmd.rule : world->make_rule(cmd.mes);
    ValidationReport check =
        validate_rule(rule, *world, cmd.g, cmd.mes, std::min<std::uint64_t>(cmd.n, 2000),
                      derive_stream_seed(cfg.seed, 0xfa11ULL));
    if (!check.passed())
        throw Error("coding rule failed validation: " + std::to_string(check.uncodable) +
                    " uncodable, " + std::to_string(check.ambiguous) + " ambiguous mark sets");

    AccumulateOptions opts;
    opts.threads = effective_threads(cfg.threads);
    FrequencyTable table = accumulate_statistics(*world, cmd.g, cmd.mes, rule, cmd.n,
                                                 derive_stream_seed(cfg.seed, 0x57a7ULL), opts);
    Json j = to_json(table);
    std::string csv = to_csv(table);
    emit(cfg.output, "frequency_table", &j, &csv);

    if (!cmd.schedule.empty()) {
        ConvergenceReport conv = convergence_report(*world, cmd.g, cmd.mes, rule, cmd.schedule,
                                                    derive_stream_seed(cfg.seed, 0xc09fULL));
        Json jc = to_json(conv);
        std::string cc = to_csv(conv);
        emit(cfg.output, "convergence", &jc, &cc);
        std::cout << "statistics: N=" << table.n << ", " << table.spectrum.size()
                  << " spectrum values, convergence "
                  << (conv.verdict == ConvergenceVerdict::converging ? "converging" : "inconclusive");
        if (conv.exponent) std::cout << " (exponent " << format_double(*conv.exponent) << ")";
        std::cout << "\n";
    } else {
        std::size_t top = 0;
        for (std::size_t s = 1; s < table.counts.size(); ++s)
            if (table.counts[s] > table.counts[top]) top = s;
        std::cout << "statistics: N=" << table.n << ", mode '" << table.spectrum[top].label
                  << "' freq " << format_double(table.frequency(top)) << "\n";
    }
    return 0;
}

inline int run_tree(const RunConfig& cfg, const TreeCmd& cmd) {
    WorldHandle world = make_world(cfg.world);
    std::vector<CodingRule> rules;
    for (const auto& v : cmd.views) rules.push_back(world->make_rule(v));
    TreeOptions opts;
    opts.threads = effective_threads(cfg.threads);
    ProbabilityTree tree = build_tree(*world, cmd.g, cmd.views, rules, cmd.n_per_branch,
                                      derive_stream_seed(cfg.seed, 0x72eeULL), opts);
    Json j = to_json(tree);

    bool scalar_pair_possible = tree.branches.size() >= 2;
    if (scalar_pair_possible) {
        try {
            j["meta_dependence"] = to_json(meta_dependence_report(tree));
        } catch (const EmptyViewSet&) {
            // fewer than two scalar branches; nothing to report
        }
    }
    for (const auto& b : tree.branches) {
        if (!b.space.universe.empty() && b.space.universe.front().is_pair()) {
            j["factorization"] = to_json(joint_marginal_report(b));
            break;
        }
    }
    emit(cfg.output, "tree", &j, nullptr);
    write_text_file(out_path(cfg.output, "tree.txt"), render_tree_text(tree));
    std::cout << "tree: " << tree.branches.size() << " branch(es), N=" << cmd.n_per_branch
              << " per branch\n";
    return 0;
}

inline int run_bell(const RunConfig& cfg, const BellCmd& cmd) {
    unsigned threads = effective_threads(cfg.threads);
    CorrelationTable table;
    double e_ab, e_ab2, e_a2b, e_a2b2;
    double ci = 0.0;
    const auto& A = cmd.chsh_deg;

    if (cmd.lhv) {
        table.source = "lhv_exact";
        std::vector<Vec3> settings;
        for (double deg : cmd.lhv->settings_deg) settings.push_back(setting_from_angle_deg(deg));
        LHVModel model = tabulated_model(settings, cmd.lhv->response_a, cmd.lhv->response_b,
                                         cmd.lhv->rho);
        model.validate(settings);
        auto corr = [&](double a_deg, double b_deg) {
            double e = lhv_correlation_exact(model, setting_from_angle_deg(a_deg),
                                             setting_from_angle_deg(b_deg));
            table.rows.push_back(CorrelationRow{a_deg, b_deg, Estimate{e, 0, e, e}});
            return e;
        };
        e_ab = corr(A[0], A[2]);
        e_ab2 = corr(A[0], A[3]);
        e_a2b = corr(A[1], A[2]);
        e_a2b2 = corr(A[1], A[3]);
    } else {
        WorldHandle world = make_world(cfg.world);
        table.source = "world_sampled";
        std::uint64_t k = 0;
        auto corr = [&](double a_deg, double b_deg) {
            Estimate e = world_correlation(*world, setting_from_angle_deg(a_deg),
                                           setting_from_angle_deg(b_deg), cmd.n,
                                           derive_stream_seed(cfg.seed, 0xbe11ULL + k++), threads);
            table.rows.push_back(CorrelationRow{a_deg, b_deg, e});
            ci = std::max(ci, e.half_width());
            return e.value;
        };
        e_ab = corr(A[0], A[2]);
        e_ab2 = corr(A[0], A[3]);
        e_a2b = corr(A[1], A[2]);
        e_a2b2 = corr(A[1], A[3]);
        for (double theta : cmd.sweep_deg) corr(0.0, theta);
    }

    double s = chsh_value(e_ab, e_ab2, e_a2b, e_a2b2);
    ChshBound bound = lhv_max_bruteforce();
    Json j;
    j["correlations"] = to_json(table);
    j["chsh"] = Json{{"angles_deg", Json::array({A[0], A[1], A[2], A[3]})},
                     {"s", s},
                     {"lhv_bound", bound.max_s},
                     {"violated", s > bound.max_s}};
    if (cmd.bell1964_deg) {
        const auto& t = *cmd.bell1964_deg;
        // sampled triple over the same source
        double eab, eac, ebc;
        if (cmd.lhv) {
            std::vector<Vec3> settings;
            for (double deg : cmd.lhv->settings_deg) settings.push_back(setting_from_angle_deg(deg));
            LHVModel model = tabulated_model(settings, cmd.lhv->response_a, cmd.lhv->response_b,
                                             cmd.lhv->rho);
            eab = lhv_correlation_exact(model, setting_from_angle_deg(t[0]),
                                        setting_from_angle_deg(t[1]));
            eac = lhv_correlation_exact(model, setting_from_angle_deg(t[0]),
                                        setting_from_angle_deg(t[2]));
            ebc = lhv_correlation_exact(model, setting_from_angle_deg(t[1]),
                                        setting_from_angle_deg(t[2]));
        } else {
            WorldHandle world = make_world(cfg.world);
            eab = world_correlation(*world, setting_from_angle_deg(t[0]), setting_from_angle_deg(t[1]),
                                    cmd.n, derive_stream_seed(cfg.seed, 0x1964AULL), threads)
                      .value;
            eac = world_correlation(*world, setting_from_angle_deg(t[0]), setting_from_angle_deg(t[2]),
                                    cmd.n, derive_stream_seed(cfg.seed, 0x1964BULL), threads)
                      .value;
            ebc = world_correlation(*world, setting_from_angle_deg(t[1]), setting_from_angle_deg(t[2]),
                                    cmd.n, derive_stream_seed(cfg.seed, 0x1964CULL), threads)
                      .value;
        }
        Bell1964Result r = bell1964_check(eab, eac, ebc);
        j["bell1964"] = Json{{"angles_deg", Json::array({t[0], t[1], t[2]})},
                             {"margin", r.margin},
                             {"violated", r.violated}};
    }
    std::string csv = to_csv(table);
    emit(cfg.output, "bell", &j, nullptr);
    if (cfg.output.csv) write_text_file(out_path(cfg.output, "correlations.csv"), csv);

    char line[160];
    std::snprintf(line, sizeof(line), "CHSH S=%.2f \xC2\xB1 %.2f, LHV bound %.2f: %s", s, ci,
                  bound.max_s, s > bound.max_s ? "VIOLATED" : "SATISFIED");
    std::cout << line << "\n";
    return 0;
}

inline int run_scan_cmd(const RunConfig& cfg, const ScanCmd& cmd) {
    WorldHandle world = make_world(cfg.world);
    ScanReport report = run_scan(*world, cmd.cfg, derive_stream_seed(cfg.seed, 0x5ca9ULL),
                                 effective_threads(cfg.threads));
    ScanVerdict verdict = scan_verdict(report);
    Json j = to_json(report, verdict);
    std::string csv = to_csv(report);
    emit(cfg.output, "scan", &j, &csv);
    std::cout << "scan: " << report.eliminated.size() << "/" << report.points.size()
              << " speeds eliminated, verdict " << to_string(verdict.outcome);
    if (verdict.outcome == ScanOutcome::influence_detected)
        std::cout << " bracket [" << format_double(verdict.bracket_low) << ", "
                  << format_double(verdict.bracket_high) << "]";
    std::cout << "\n";
    return 0;
}

inline int run_interference(const RunConfig& cfg, const InterferenceCmd& cmd) {
    WorldHandle world = make_world(cfg.world);
    CodingRule rule = world->make_rule(cmd.view);
    InterferenceReport report =
        composed_interference_report(*world, cmd.g1, cmd.g2, cmd.g12, cmd.view, rule, cmd.n,
                                     derive_stream_seed(cfg.seed, 0x1f3aULL),
                                     effective_threads(cfg.threads));
    Json j = to_json(report);
    std::string csv = to_csv(report);
    emit(cfg.output, "interference", &j, &csv);
    std::cout << "interference: fringe visibility " << format_double(report.fringe_visibility)
              << " over " << report.table_g12.spectrum.size() << " bins\n";
    return 0;
}

}  // namespace detail

// Dispatches the configured pipeline. Returns 0 on success; pipeline errors
// surface as exceptions for the caller to map to exit status 1.
inline int run(const RunConfig& cfg) {
    return std::visit(
        [&](const auto& cmd) -> int {
            using T = std::decay_t<decltype(cmd)>;
            if constexpr (std::is_same_v<T, StatisticsCmd>) return detail::run_statistics(cfg, cmd);
            else if constexpr (std::is_same_v<T, TreeCmd>) return detail::run_tree(cfg, cmd);
            else if constexpr (std::is_same_v<T, BellCmd>) return detail::run_bell(cfg, cmd);
            else if constexpr (std::is_same_v<T, ScanCmd>) return detail::run_scan_cmd(cfg, cmd);
            else return detail::run_interference(cfg, cmd);
        },
        cfg.command);
}

}  // namespace iqm
