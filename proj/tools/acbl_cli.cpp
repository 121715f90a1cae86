#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "acbl/errors.hpp"
#include "acbl/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunArgs {
    std::string config;
    std::string out;
    int jobs = 1;
    std::string seed_from;
};

int run_kind(const std::string& kind, const RunArgs& a) {
    std::ifstream in(a.config);
    if (!in) throw acbl::ConfigError("cli", "cannot read config file " + a.config);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw acbl::ConfigError("cli", std::string("<root>: not valid JSON (") + e.what() + ")");
    }
    if (!j.is_object()) throw acbl::ConfigError("cli", "<root>: expected an object");
    j["kind"] = kind;  // the subcommand decides what runs
    acbl::RunConfig cfg = acbl::parse_config(j);
    acbl::RunContext ctx;
    if (!a.out.empty()) ctx.out_root = a.out;
    ctx.jobs = a.jobs;
    if (!a.seed_from.empty()) ctx.seed_from = fs::path(a.seed_from);
    acbl::RunRecord rec = acbl::run_experiment(cfg, ctx);
    const fs::path dir = acbl::run_directory(cfg, ctx);
    std::cout << "run " << rec.config_hash << " -> " << dir.string() << "\n";
    for (const auto& c : rec.checks)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.criterion << ": " << c.quantity << " = " << c.measured
                  << " (required " << c.required << ")\n";
    if (cfg.kind == acbl::ExperimentKind::Verify) return rec.passed() ? 0 : 1;
    return 0;
}

int run_report(const std::vector<std::string>& dirs, const std::string& out) {
    std::vector<acbl::RunRecord> recs;
    for (const auto& d : dirs) recs.push_back(acbl::load_record(d));
    acbl::Report rep = acbl::emit_report(recs);
    fs::path o = out.empty() ? fs::path(dirs.front()).parent_path() : fs::path(out);
    if (o.empty()) o = ".";
    fs::create_directories(o);
    std::ofstream(o / "report.md") << rep.markdown;
    std::ofstream(o / "report.json") << rep.json.dump(2) << "\n";
    std::cout << rep.markdown;
    return rep.json["all_passed"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary-layer clustering toolkit: placement, reduced Toda system and PDE solves"};
    app.set_version_flag("--version", acbl::kVersion);
    app.require_subcommand(1);

    RunArgs args;
    std::string chosen;
    const std::vector<std::pair<std::string, std::string>> kinds = {
        {"predict", "closed-form and algebraic layer placement"},
        {"solve-radial", "radial Newton solves on the disk"},
        {"solve-strip", "2D strip Newton solves in Fermi coordinates"},
        {"toda-solve", "reduced Toda solve with synthetic forcing"},
        {"resonance-scan", "gap of the reduced operator over an ε grid"},
        {"verify", "radial layer-law acceptance checks (exit 1 on failure)"},
    };
    for (const auto& [name, help] : kinds) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", args.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output root (default: the config's output field)");
        sub->add_option("--jobs", args.jobs, "worker threads for independent ε points")->check(CLI::PositiveNumber);
        sub->add_option("--seed-from", args.seed_from, "earlier run directory used as a warm start")
            ->check(CLI::ExistingDirectory);
        sub->callback([&chosen, n = name] { chosen = n; });
    }
    std::vector<std::string> report_dirs;
    std::string report_out;
    CLI::App* rep = app.add_subcommand("report", "summarize one or more run directories");
    rep->add_option("runs", report_dirs, "run directories containing record.json")->required()->check(CLI::ExistingDirectory);
    rep->add_option("--out", report_out, "where report.md and report.json go");
    rep->callback([&chosen] { chosen = "report"; });

    CLI11_PARSE(app, argc, argv);
    try {
        if (chosen == "report") return run_report(report_dirs, report_out);
        return run_kind(chosen, args);
    } catch (const acbl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const acbl::Error& e) {
        std::cerr << "solver error " << e.what() << "\n";
        return 3;
    }
}
