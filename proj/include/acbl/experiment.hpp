#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace acbl {

enum class ExperimentKind { Predict, SolveRadial, SolveStrip, TodaSolve, ResonanceScan, Verify };

std::string to_string(ExperimentKind k);
ExperimentKind kind_from_string(const std::string& s);

struct CurveSpec {
    std::string type = "circle";  ///< circle | ellipse | points
    double radius = 1.0;
    double a = 1.2, b = 1.0;
    std::vector<std::pair<double, double>> points;
};

struct PotentialSpec {
    std::string type = "constant";  ///< constant | radial_poly | radial_exp | collar_table
    double value = 1.0;
    std::vector<double> coeffs;  ///< radial_poly
    double amp = 1.0, rate = 1.0, r0 = 1.0;  ///< radial_exp
    std::vector<double> v0, vt, vtt;  ///< collar_table
};

struct ForcingSpec {
    double amplitude = 1.0;
    double power = 1.25;  ///< h = amplitude·ε^power·cos(mode·2πθ/ℓ)
    int mode = 3;
};

struct RunOptions {
    bool use_phi11 = false;
    bool gamma_weighted = false;
    bool taylor = false;
    double resonance_threshold = 0.1;
    int theta_nodes = 256;   ///< placement / Toda θ grid
    int nz = 256;            ///< strip z nodes
    double hs_max = 0.15;
    double h_fine = 0.05;    ///< radial fine spacing in units of ε
    double delta0 = 0.0;     ///< 0 → 0.4/max|k|
    double delta_tilde = 2.0;
    ForcingSpec forcing;
};

struct EpsRange {
    double lo = 1e-4, hi = 1e-2;
    int points = 200;
};

struct RunConfig {
    ExperimentKind kind = ExperimentKind::Predict;
    CurveSpec curve;
    PotentialSpec potential;
    int N = 1;
    std::vector<double> eps;          ///< descending
    std::optional<EpsRange> eps_range;  ///< resonance-scan grid
    RunOptions options;
    std::string output = "runs";
};

/// Strict parse: unknown keys, wrong types and invalid values raise ConfigError naming the field path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& p);
/// Canonical form with every default filled in.
nlohmann::json to_json(const RunConfig& c);
/// FNV-1a 64-bit over the canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);
std::uint64_t fnv1a64(const std::string& bytes);

struct Check {
    std::string criterion;
    std::string quantity;
    double measured = 0.0;
    std::string required;
    bool pass = false;
};

struct RunRecord {
    std::string config_hash;
    std::string kind;
    std::string version;
    nlohmann::json config;
    nlohmann::json results = nlohmann::json::object();  ///< per-ε results keyed by %.17g ε
    std::vector<Check> checks;
    std::vector<std::string> artifacts;  ///< relative to the run directory
    nlohmann::json timings = nlohmann::json::object();
    bool pde_run = false;

    bool passed() const;
    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
};

struct RunContext {
    std::filesystem::path out_root;       ///< empty → config.output
    int jobs = 1;
    std::optional<std::filesystem::path> seed_from;  ///< earlier run directory used as a warm start
};

/// Run one configuration; artifacts go to <root>/<hash>/ and record.json is written last.
RunRecord run_experiment(const RunConfig& config, const RunContext& ctx = {});
std::filesystem::path run_directory(const RunConfig& config, const RunContext& ctx);
RunRecord load_record(const std::filesystem::path& run_dir);

struct Report {
    std::string markdown;
    nlohmann::json json;
};

/// Per-criterion pass/fail, error-decay fits with 95% confidence intervals and artifact links.
Report emit_report(const std::vector<RunRecord>& records);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace acbl
