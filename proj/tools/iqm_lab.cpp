// iqm-lab: run transferred-description pipelines from a JSON config.
//
//   iqm-lab run <config.json> [--threads N] [--out DIR]
//   iqm-lab validate <config.json>
//   iqm-lab worlds
//
// Exit status: 0 success, 1 pipeline error, 2 config error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "iqm/iqm.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw iqm::SchemaError("$", "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* command_name(const iqm::RunConfig& cfg) {
    struct Visitor {
        const char* operator()(const iqm::StatisticsCmd&) const { return "statistics"; }
        const char* operator()(const iqm::TreeCmd&) const { return "tree"; }
        const char* operator()(const iqm::BellCmd&) const { return "bell"; }
        const char* operator()(const iqm::ScanCmd&) const { return "scan"; }
        const char* operator()(const iqm::InterferenceCmd&) const { return "interference"; }
    };
    return std::visit(Visitor{}, cfg.command);
}

void print_worlds() {
    for (const std::string& kind : iqm::builtin_world_kinds()) {
        iqm::WorldSpec spec;
        spec.kind = kind;
        iqm::WorldHandle world = iqm::make_world(spec);
        iqm::GenerationOp g = world->canonical_generation();
        std::cout << kind << "\n  generation: " << g.label;
        if (!g.params.empty()) {
            std::cout << " (";
            bool first = true;
            for (const auto& [k, v] : g.params) {
                std::cout << (first ? "" : ", ") << k << "=" << iqm::format_double(v);
                first = false;
            }
            std::cout << ")";
        }
        std::cout << "\n  views:\n";
        for (const auto& entry : world->view_catalog()) {
            std::cout << "    " << entry.spec.label << "  [class " << entry.compatibility_class_id
                      << "]";
            if (!entry.spec.params.empty()) {
                std::cout << "  defaults:";
                for (const auto& [k, v] : entry.spec.params)
                    std::cout << " " << k << "=" << iqm::format_double(v);
            }
            std::cout << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iqm-lab: micro-world succession statistics, probability trees, Bell tests and "
                 "locality scans"};
    app.require_subcommand(1);

    std::string config_path;
    unsigned threads = 0;
    std::string out_dir;

    CLI::App* cmd_run = app.add_subcommand("run", "run the pipeline described by a config file");
    cmd_run->add_option("config", config_path, "JSON config file")->required();
    cmd_run->add_option("--threads", threads, "worker cap (default: all cores)");
    cmd_run->add_option("--out", out_dir, "output directory (overrides config and IQM_LAB_OUT)");

    CLI::App* cmd_validate = app.add_subcommand("validate", "parse and check a config file");
    cmd_validate->add_option("config", config_path, "JSON config file")->required();

    CLI::App* cmd_worlds = app.add_subcommand("worlds", "list built-in worlds and view catalogs");

    CLI11_PARSE(app, argc, argv);

    if (cmd_worlds->parsed()) {
        print_worlds();
        return 0;
    }

    iqm::RunConfig cfg;
    try {
        cfg = iqm::parse_config(read_file(config_path));
        // constructing the world validates its kind and parameters
        iqm::make_world(cfg.world);
    } catch (const iqm::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    if (cmd_validate->parsed()) {
        std::cout << "config OK: " << command_name(cfg) << " pipeline on world '" << cfg.world.kind
                  << "', seed " << cfg.seed << "\n";
        return 0;
    }

    cfg.threads = threads;
    if (!out_dir.empty()) {
        cfg.output.dir = out_dir;
    } else if (const char* env = std::getenv("IQM_LAB_OUT"); env != nullptr && *env != '\0') {
        cfg.output.dir = env;
    }

    try {
        return iqm::run(cfg);
    } catch (const iqm::Error& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return 1;
    }
}
