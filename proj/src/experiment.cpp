#include "acbl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "acbl/errors.hpp"
#include "acbl/geometry.hpp"
#include "acbl/numerics.hpp"
#include "acbl/pde.hpp"
#include "acbl/placement.hpp"
#include "acbl/toda.hpp"

namespace acbl {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Predict: return "predict";
        case ExperimentKind::SolveRadial: return "solve-radial";
        case ExperimentKind::SolveStrip: return "solve-strip";
        case ExperimentKind::TodaSolve: return "toda-solve";
        case ExperimentKind::ResonanceScan: return "resonance-scan";
        case ExperimentKind::Verify: return "verify";
    }
    return "?";
}

ExperimentKind kind_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::Predict, ExperimentKind::SolveRadial, ExperimentKind::SolveStrip,
                   ExperimentKind::TodaSolve, ExperimentKind::ResonanceScan, ExperimentKind::Verify})
        if (to_string(k) == s) return k;
    throw ConfigError("cli", "kind: unknown experiment kind '" + s + "'");
}

// ---------------------------------------------------------------- config parsing

namespace {

// Reads one JSON object, remembers which keys were consumed, rejects the rest.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "expected an object");
    }
    ~Fields() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(it.key(), "unknown key");
    }
    bool has(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k);
    }
    const json& at(const std::string& k) {
        seen_.insert(k);
        return j_.at(k);
    }
    std::string path(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    [[noreturn]] void fail(const std::string& k, const std::string& what) const {
        throw ConfigError("cli", (k.empty() ? (path_.empty() ? std::string("<root>") : path_) : path(k)) + ": " + what);
    }

    double number(const std::string& k, double def, bool positive = false) {
        if (!has(k)) return def;
        const json& v = at(k);
        if (!v.is_number()) fail(k, "expected a number");
        double x = v.get<double>();
        if (!std::isfinite(x)) fail(k, "must be finite");
        if (positive && !(x > 0.0)) fail(k, "must be positive");
        return x;
    }
    int integer(const std::string& k, int def, int min_value) {
        if (!has(k)) return def;
        const json& v = at(k);
        if (!v.is_number_integer()) fail(k, "expected an integer");
        int x = v.get<int>();
        if (x < min_value) fail(k, "must be at least " + std::to_string(min_value));
        return x;
    }
    bool boolean(const std::string& k, bool def) {
        if (!has(k)) return def;
        const json& v = at(k);
        if (!v.is_boolean()) fail(k, "expected true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& k, const std::string& def) {
        if (!has(k)) return def;
        const json& v = at(k);
        if (!v.is_string()) fail(k, "expected a string");
        return v.get<std::string>();
    }
    std::vector<double> numbers(const std::string& k) {
        if (!has(k)) return {};
        const json& v = at(k);
        if (!v.is_array()) fail(k, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(k + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

CurveSpec parse_curve(const json& j) {
    Fields f(j, "curve");
    CurveSpec c;
    c.type = f.string("type", "circle");
    if (c.type == "circle") {
        c.radius = f.number("radius", 1.0, true);
    } else if (c.type == "ellipse") {
        c.a = f.number("a", 1.2, true);
        c.b = f.number("b", 1.0, true);
    } else if (c.type == "points") {
        if (!f.has("points")) f.fail("points", "required for type 'points'");
        const json& p = f.at("points");
        if (!p.is_array() || p.size() < 8) f.fail("points", "expected at least 8 [x, y] pairs");
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!p[i].is_array() || p[i].size() != 2 || !p[i][0].is_number() || !p[i][1].is_number())
                f.fail("points[" + std::to_string(i) + "]", "expected [x, y]");
            c.points.emplace_back(p[i][0].get<double>(), p[i][1].get<double>());
        }
    } else {
        f.fail("type", "unknown curve type '" + c.type + "'");
    }
    return c;
}

PotentialSpec parse_potential(const json& j) {
    Fields f(j, "potential");
    PotentialSpec p;
    p.type = f.string("type", "constant");
    if (p.type == "constant") {
        p.value = f.number("value", 1.0, true);
    } else if (p.type == "radial_poly") {
        p.coeffs = f.numbers("coeffs");
        if (p.coeffs.empty()) f.fail("coeffs", "required for type 'radial_poly'");
    } else if (p.type == "radial_exp") {
        p.amp = f.number("amp", 1.0, true);
        p.rate = f.number("rate", 1.0);
        p.r0 = f.number("r0", 1.0);
    } else if (p.type == "collar_table") {
        p.v0 = f.numbers("v0");
        p.vt = f.numbers("vt");
        p.vtt = f.numbers("vtt");
        if (p.v0.size() < 4 || p.vt.size() != p.v0.size() || p.vtt.size() != p.v0.size())
            f.fail("v0", "collar tables need equal-length v0/vt/vtt with at least 4 rows");
        for (double v : p.v0)
            if (!(v > 0.0)) f.fail("v0", "values must be positive");
    } else {
        f.fail("type", "unknown potential type '" + p.type + "'");
    }
    return p;
}

RunOptions parse_options(const json& j) {
    Fields f(j, "options");
    RunOptions o;
    o.use_phi11 = f.boolean("use_phi11", o.use_phi11);
    o.gamma_weighted = f.boolean("gamma_weighted", o.gamma_weighted);
    o.taylor = f.boolean("taylor", o.taylor);
    o.resonance_threshold = f.number("resonance_threshold", o.resonance_threshold, true);
    o.theta_nodes = f.integer("theta_nodes", o.theta_nodes, 64);
    o.nz = f.integer("nz", o.nz, 8);
    o.hs_max = f.number("hs_max", o.hs_max, true);
    o.h_fine = f.number("h_fine", o.h_fine, true);
    o.delta0 = f.number("delta0", o.delta0);
    if (o.delta0 < 0.0) f.fail("delta0", "must be non-negative (0 selects the default)");
    o.delta_tilde = f.number("delta_tilde", o.delta_tilde, true);
    if (f.has("forcing")) {
        Fields g(f.at("forcing"), "options.forcing");
        o.forcing.amplitude = g.number("amplitude", o.forcing.amplitude);
        o.forcing.power = g.number("power", o.forcing.power);
        o.forcing.mode = g.integer("mode", o.forcing.mode, 0);
    }
    return o;
}

}  // namespace

RunConfig parse_config(const json& j) {
    Fields f(j, "");
    RunConfig c;
    if (!f.has("kind")) f.fail("kind", "required");
    c.kind = kind_from_string(f.string("kind", ""));
    if (f.has("curve")) c.curve = parse_curve(f.at("curve"));
    if (f.has("potential")) c.potential = parse_potential(f.at("potential"));
    c.N = f.integer("N", 1, 0);
    c.eps = f.numbers("eps");
    for (std::size_t i = 0; i < c.eps.size(); ++i) {
        if (!(c.eps[i] > 0.0)) f.fail("eps[" + std::to_string(i) + "]", "must be positive");
        if (i > 0 && !(c.eps[i] < c.eps[i - 1])) f.fail("eps", "must be sorted strictly descending");
    }
    if (f.has("eps_range")) {
        Fields g(f.at("eps_range"), "eps_range");
        EpsRange r;
        r.lo = g.number("lo", r.lo, true);
        r.hi = g.number("hi", r.hi, true);
        r.points = g.integer("points", r.points, 3);
        if (!(r.lo < r.hi)) g.fail("hi", "must exceed lo");
        c.eps_range = r;
    }
    if (f.has("options")) c.options = parse_options(f.at("options"));
    c.output = f.string("output", c.output);

    if (c.kind == ExperimentKind::ResonanceScan) {
        if (!c.eps_range) c.eps_range = EpsRange{};
    } else if (c.kind == ExperimentKind::Verify) {
        if (c.eps.empty()) c.eps = {0.02, 0.01, 0.005};
    } else if (c.eps.empty()) {
        f.fail("eps", "at least one ε is required");
    }
    if (c.N < 1 && c.kind != ExperimentKind::SolveRadial) f.fail("N", "must be at least 1 for this kind");
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("cli", std::string("<root>: not valid JSON (") + e.what() + ")");
    }
    return parse_config(j);
}

RunConfig load_config(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cli", "cannot read config file " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

json to_json(const RunConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    json cv{{"type", c.curve.type}};
    if (c.curve.type == "circle") cv["radius"] = c.curve.radius;
    if (c.curve.type == "ellipse") {
        cv["a"] = c.curve.a;
        cv["b"] = c.curve.b;
    }
    if (c.curve.type == "points") {
        cv["points"] = json::array();
        for (auto [x, y] : c.curve.points) cv["points"].push_back({x, y});
    }
    j["curve"] = cv;
    json pv{{"type", c.potential.type}};
    if (c.potential.type == "constant") pv["value"] = c.potential.value;
    if (c.potential.type == "radial_poly") pv["coeffs"] = c.potential.coeffs;
    if (c.potential.type == "radial_exp") {
        pv["amp"] = c.potential.amp;
        pv["rate"] = c.potential.rate;
        pv["r0"] = c.potential.r0;
    }
    if (c.potential.type == "collar_table") {
        pv["v0"] = c.potential.v0;
        pv["vt"] = c.potential.vt;
        pv["vtt"] = c.potential.vtt;
    }
    j["potential"] = pv;
    j["N"] = c.N;
    j["eps"] = c.eps;
    if (c.eps_range) j["eps_range"] = {{"lo", c.eps_range->lo}, {"hi", c.eps_range->hi}, {"points", c.eps_range->points}};
    const RunOptions& o = c.options;
    j["options"] = {{"use_phi11", o.use_phi11},
                    {"gamma_weighted", o.gamma_weighted},
                    {"taylor", o.taylor},
                    {"resonance_threshold", o.resonance_threshold},
                    {"theta_nodes", o.theta_nodes},
                    {"nz", o.nz},
                    {"hs_max", o.hs_max},
                    {"h_fine", o.h_fine},
                    {"delta0", o.delta0},
                    {"delta_tilde", o.delta_tilde},
                    {"forcing", {{"amplitude", o.forcing.amplitude}, {"power", o.forcing.power}, {"mode", o.forcing.mode}}}};
    j["output"] = c.output;
    return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash(const RunConfig& c) {
    json j = to_json(c);
    j.erase("output");  // where results go is not part of their identity
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

// ---------------------------------------------------------------- records

bool RunRecord::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json RunRecord::to_json() const {
    json j;
    j["config_hash"] = config_hash;
    j["kind"] = kind;
    j["version"] = version;
    j["config"] = config;
    j["results"] = results;
    j["checks"] = json::array();
    for (const auto& c : checks)
        j["checks"].push_back({{"criterion", c.criterion},
                               {"quantity", c.quantity},
                               {"measured", c.measured},
                               {"required", c.required},
                               {"pass", c.pass}});
    j["artifacts"] = artifacts;
    j["timings"] = timings;
    j["pde_run"] = pde_run;
    j["passed"] = passed();
    return j;
}

RunRecord RunRecord::from_json(const json& j) {
    RunRecord r;
    try {
        r.config_hash = j.at("config_hash").get<std::string>();
        r.kind = j.at("kind").get<std::string>();
        r.version = j.value("version", "");
        r.config = j.value("config", json::object());
        r.results = j.value("results", json::object());
        for (const auto& c : j.value("checks", json::array()))
            r.checks.push_back({c.at("criterion").get<std::string>(), c.at("quantity").get<std::string>(),
                                c.at("measured").get<double>(), c.at("required").get<std::string>(),
                                c.at("pass").get<bool>()});
        r.artifacts = j.value("artifacts", std::vector<std::string>{});
        r.timings = j.value("timings", json::object());
        r.pde_run = j.value("pde_run", false);
    } catch (const json::exception& e) {
        throw ConfigError("cli", std::string("record.json: ") + e.what());
    }
    return r;
}

RunRecord load_record(const fs::path& run_dir) {
    std::ifstream in(run_dir / "record.json");
    if (!in) throw ConfigError("cli", "no record.json in " + run_dir.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("cli", "record.json: " + std::string(e.what()));
    }
    return RunRecord::from_json(j);
}

// ---------------------------------------------------------------- pipelines

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// shortest decimal that reads back to the same double
std::string key(double v) {
    char buf[40];
    for (int p = 1; p <= 17; ++p) {
        std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string eps_dir(std::size_t k, double eps) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "eps_%02zu_%.6g", k, eps);
    return buf;
}

std::shared_ptr<const BoundaryCurve> build_curve(const CurveSpec& c) {
    if (c.type == "circle") return std::make_shared<const BoundaryCurve>(BoundaryCurve::circle(c.radius));
    if (c.type == "ellipse") return std::make_shared<const BoundaryCurve>(BoundaryCurve::ellipse(c.a, c.b));
    std::vector<Vec2> pts;
    for (auto [x, y] : c.points) pts.push_back({x, y});
    return std::make_shared<const BoundaryCurve>(BoundaryCurve::sampled(pts));
}

std::shared_ptr<const PotentialField> build_potential(const PotentialSpec& p, std::shared_ptr<const BoundaryCurve> curve) {
    if (p.type == "constant") return std::make_shared<const PotentialField>(PotentialField::constant(p.value));
    if (p.type == "radial_poly") return std::make_shared<const PotentialField>(PotentialField::radial_poly({0.0, 0.0}, p.coeffs));
    if (p.type == "radial_exp")
        return std::make_shared<const PotentialField>(PotentialField::radial_exp({0.0, 0.0}, p.amp, p.rate, p.r0));
    return std::make_shared<const PotentialField>(PotentialField::collar_table(std::move(curve), p.v0, p.vt, p.vtt));
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cli", "cannot write " + p.string());
    out << text;
}

// Runs body(k) for k in [0, n) on up to `jobs` threads; rethrows the lowest-index failure.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < n;) {
            try {
                body(k);
            } catch (...) {
                errs[k] = std::current_exception();
            }
        }
    };
    const int T = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int t = 1; t < T; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Pipeline {
    const RunConfig& cfg;
    const RunContext& ctx;
    fs::path dir;
    RunRecord& rec;
    std::shared_ptr<const BoundaryCurve> curve;
    std::shared_ptr<const PotentialField> V;
    std::optional<RunRecord> seed;
    std::mutex mu;

    void add_artifact(const fs::path& p) {
        std::lock_guard<std::mutex> lock(mu);
        rec.artifacts.push_back(fs::relative(p, dir).generic_string());
    }

    CollarData collar(int M) const { return sample_collar(*curve, *V, M); }

    BarfOptions barf_options() const {
        BarfOptions b;
        b.gamma_weighted = cfg.options.gamma_weighted;
        b.delta_tilde = cfg.options.delta_tilde;
        return b;
    }

    TodaSystem toda_system(const CollarData& c, double eps) const {
        LayerVector f = solve_barf(cfg.N, c, eps, barf_options());
        return assemble_system(interaction_coeffs(f, c), f, c, eps);
    }

    // -------------------------------------------------------- predict
    void predict() {
        const CollarData c = collar(cfg.options.theta_nodes);
        std::vector<json> res(cfg.eps.size());
        parallel_for(cfg.eps.size(), ctx.jobs, [&](std::size_t k) {
            const double eps = cfg.eps[k];
            LayerVector f = solve_barf(cfg.N, c, eps, barf_options());
            std::ostringstream os;
            write_placement_csv(os, f, c);
            fs::path p = dir / eps_dir(k, eps) / "placement.csv";
            write_file(p, os.str());
            add_artifact(p);
            json r;
            r["eps"] = eps;
            r["depth_theta0"] = json::array();
            r["spacing_theta0"] = json::array();
            for (int j = 1; j <= cfg.N; ++j) {
                r["depth_theta0"].push_back(f.f(j, 0));
                r["spacing_theta0"].push_back(f.f(j, 0) - f.f(j - 1, 0));
            }
            r["H_min"] = *std::min_element(c.H.begin(), c.H.end());
            r["H_max"] = *std::max_element(c.H.begin(), c.H.end());
            r["ordering_threshold"] = ordering_threshold(cfg.N, c);
            res[k] = r;
        });
        for (std::size_t k = 0; k < res.size(); ++k) rec.results[key(cfg.eps[k])] = res[k];
    }

    // -------------------------------------------------------- resonance scan
    void resonance() {
        const EpsRange r = *cfg.eps_range;
        std::vector<double> grid(r.points);
        for (int i = 0; i < r.points; ++i) grid[i] = r.lo * std::pow(r.hi / r.lo, double(i) / (r.points - 1));
        const CollarData c = collar(cfg.options.theta_nodes);
        ResonanceOptions ro;
        ro.threshold = cfg.options.resonance_threshold;
        ResonanceScanResult s = resonance_scan([&](double eps) { return toda_system(c, eps); }, grid, ro);
        std::ostringstream os;
        os << "eps,gap,resonant,nearest_eps_res\n";
        for (const auto& p : s.points)
            os << g17(p.eps) << ',' << g17(p.gap) << ',' << (p.resonant ? 1 : 0) << ',' << g17(p.nearest_analytic) << '\n';
        write_file(dir / "resonance.csv", os.str());
        add_artifact(dir / "resonance.csv");
        json j;
        j["local_minima"] = s.local_minima;
        j["analytic"] = s.analytic;
        j["certified_count"] = s.certified.size();
        j["constant_coefficients"] = s.constant_coefficients;
        int flagged = 0;
        for (const auto& p : s.points) flagged += p.resonant;
        j["flagged_count"] = flagged;
        rec.results["scan"] = j;
    }

    // -------------------------------------------------------- Toda solve with synthetic forcing
    void toda() {
        const CollarData c = collar(cfg.options.theta_nodes);
        const ForcingSpec& fs_ = cfg.options.forcing;
        std::vector<json> res(cfg.eps.size());
        parallel_for(cfg.eps.size(), ctx.jobs, [&](std::size_t k) {
            const double eps = cfg.eps[k];
            TodaSystem sys = toda_system(c, eps);
            LayerFields h(cfg.N, std::vector<double>(sys.size()));
            for (int n = 0; n < cfg.N; ++n)
                for (int i = 0; i < sys.size(); ++i)
                    h[n][i] = fs_.amplitude * std::pow(eps, fs_.power) *
                              std::cos(fs_.mode * 2.0 * kPi * sys.theta[i] / sys.length);
            TodaSolveOptions to;
            to.threshold = cfg.options.resonance_threshold;
            TodaSolveReport rep = solve_tilde_f(sys, h, to);
            json r;
            r["eps"] = eps;
            r["gap"] = rep.gap;
            r["residual"] = rep.residual;
            r["ft_sup"] = rep.ft_sup;
            r["h_l2"] = rep.h_l2;
            r["stability_constant"] = rep.stability_constant;
            r["iterations"] = rep.iterations;
            r["residual_trace"] = rep.residual_trace;
            r["damping_trace"] = rep.damping_trace;
            r["quadratic_ratios"] = rep.quadratic_ratios;
            r["A_min_eigenvalue"] = [&] {
                double m = std::numeric_limits<double>::infinity();
                for (int i = 0; i < sys.size(); ++i) m = std::min(m, sys.A_eigenvalues(i)[0]);
                return m;
            }();
            res[k] = r;
        });
        json all = json::object();
        for (std::size_t k = 0; k < res.size(); ++k) {
            rec.results[key(cfg.eps[k])] = res[k];
            all[key(cfg.eps[k])] = res[k];
        }
        write_file(dir / "toda_solve.json", all.dump(2) + "\n");
        add_artifact(dir / "toda_solve.json");
    }

    // -------------------------------------------------------- radial
    struct RadialProblem {
        double scale;  // circle radius
        std::function<double(double)> V;  // on the unit disk
    };

    RadialProblem radial_problem() const {
        if (cfg.curve.type != "circle") throw ConfigError("cli", "curve.type: radial solves need a circle");
        auto prof = V->radial_profile();
        if (!prof) throw ConfigError("cli", "potential.type: radial solves need a radially symmetric potential");
        const double R = cfg.curve.radius;
        auto f = *prof;
        return {R, [f, R](double rho) { return f(R * rho); }};
    }

    // nearest ε in the seed run, rescaled in t by the predicted outermost depth
    std::vector<double> radial_seed(double e, int N, const RadialGrid& g, const RadialProblem& rp) const {
        double best = 0.0;
        std::string path;
        for (auto it = seed->results.begin(); it != seed->results.end(); ++it) {
            if (!it->is_object() || !it->contains("solution") || it->value("N", -1) != N) continue;
            double eb = it->at("eps").get<double>() / rp.scale;
            if (path.empty() || std::abs(std::log(eb / e)) < std::abs(std::log(best / e))) {
                best = eb;
                path = it->at("solution").get<std::string>();
            }
        }
        if (path.empty()) throw ConfigError("cli", "--seed-from: run has no radial solutions");
        std::ifstream in(*ctx.seed_from / path);
        std::string line;
        std::getline(in, line);
        std::vector<double> t, u;
        double r, v;
        char comma;
        while (in >> r >> comma >> v) {
            t.push_back(1.0 - r);
            u.push_back(v);
        }
        std::reverse(t.begin(), t.end());
        std::reverse(u.begin(), u.end());
        if (t.size() < 2) throw ConfigError("cli", "--seed-from: unreadable " + path);
        auto fN = [&](double x) { return radial_prediction(N, x, rp.V).depth.back(); };
        const double scale = (best * fN(best)) / (e * fN(e));
        std::vector<double> out(g.size());
        for (int i = 0; i < g.size(); ++i) {
            double tq = (1.0 - g.r[i]) * scale;
            auto it = std::upper_bound(t.begin(), t.end(), tq);
            if (it == t.begin()) out[i] = u.front();
            else if (it == t.end()) out[i] = u.back();
            else {
                std::size_t k = it - t.begin();
                double w = (tq - t[k - 1]) / (t[k] - t[k - 1]);
                out[i] = (1 - w) * u[k - 1] + w * u[k];
            }
        }
        return out;
    }

    json radial_one(double eps, int N, const std::string& sub) {
        RadialProblem rp = radial_problem();
        const double e = eps / rp.scale;  // unit-disk parameter; stretched depths are unchanged
        RadialOptions o;
        o.V = rp.V;
        o.h_fine = cfg.options.h_fine;
        RadialGrid grid;
        std::vector<double> guess;
        if (seed && N > 0) {
            grid = default_radial_grid(N, e, o);
            guess = radial_seed(e, N, grid, rp);
            o.grid = &grid;
            o.guess = &guess;
        }
        RadialSolution s = solve_radial(N, e, o);
        fs::path d = dir / sub;
        std::ostringstream a, b, c;
        write_radial_solution_csv(a, s);
        write_file(d / "radial_solution.csv", a.str());
        TheoryComparison cmp = compare_to_theory(s.layers, {s.predicted});
        write_layers_csv(b, cmp);
        write_file(d / "layers.csv", b.str());
        s.trace.write_jsonl(c, "radial eps=" + key(eps));
        write_file(d / "newton.jsonl", c.str());
        for (const char* n : {"radial_solution.csv", "layers.csv", "newton.jsonl"}) add_artifact(d / n);
        json r;
        r["eps"] = eps;
        r["N"] = N;
        r["solution"] = fs::relative(d / "radial_solution.csv", dir).generic_string();
        r["depth_measured"] = s.layers.depth[0];
        r["depth_predicted"] = s.predicted;
        r["max_rel_delta"] = cmp.max_rel_delta;
        r["residual"] = s.residual;
        r["iterations"] = s.trace.iterations;
        r["continuation"] = s.trace.continuation;
        r["unresolved"] = s.layers.unresolved;
        if (N >= 1) r["rel_error_f1"] = std::abs(s.layers.depth[0][0] - s.predicted[0]) / s.predicted[0];
        if (N >= 2) {
            const auto& d0 = s.layers.depth[0];
            r["spacing_difference"] = (d0[1] - d0[0]) - 2.0 * d0[0];
        }
        return r;
    }

    void radial_sweep_fit(const std::string& key, const std::vector<json>& res) {
        std::vector<double> e, err;
        for (const auto& r : res)
            if (r.contains("rel_error_f1")) {
                e.push_back(r["eps"].get<double>());
                err.push_back(r["rel_error_f1"].get<double>());
            }
        if (e.size() < 2) return;
        LineFit fit = error_decay(e, err);
        json j{{"quantity", "relative error of f1"}, {"eps", e}, {"error", err}, {"slope", fit.slope},
               {"slope_stderr", fit.slope_stderr}, {"points", e.size()}};
        rec.results[key] = j;
    }

    void solve_radial_kind() {
        radial_problem();
        std::vector<json> res(cfg.eps.size());
        parallel_for(cfg.eps.size(), ctx.jobs, [&](std::size_t k) {
            res[k] = radial_one(cfg.eps[k], cfg.N, eps_dir(k, cfg.eps[k]));
        });
        for (std::size_t k = 0; k < res.size(); ++k) rec.results[key(cfg.eps[k])] = res[k];
        radial_sweep_fit("sweep", res);
        rec.pde_run = true;
    }

    // -------------------------------------------------------- strip
    void solve_strip_kind() {
        std::vector<json> res(cfg.eps.size());
        parallel_for(cfg.eps.size(), ctx.jobs, [&](std::size_t k) {
            const double eps = cfg.eps[k];
            StripSetup st{curve, V, eps, cfg.options.delta0, cfg.options.taylor};
            StripOptions o;
            o.hs_max = cfg.options.hs_max;
            o.nz = cfg.options.nz;
            o.use_phi11 = cfg.options.use_phi11;
            o.gamma_weighted = cfg.options.gamma_weighted;
            o.resonance_threshold = cfg.options.resonance_threshold;
            Eigen::MatrixXd guess;
            if (seed) {
                guess = strip_seed(eps, st, o);
                o.guess = &guess;
            }
            StripSolution s = solve_strip(cfg.N, st, o);
            std::vector<std::vector<double>> pred(s.grid.nz);
            for (int m = 0; m < s.grid.nz; ++m)
                for (int j = 1; j <= cfg.N; ++j) pred[m].push_back(s.predicted.f(j, m));
            TheoryComparison cmp = compare_to_theory(s.layers, pred);
            fs::path d = dir / eps_dir(k, eps);
            std::ostringstream a, b, c;
            write_strip_solution_csv(a, s.grid, s.u);
            write_file(d / "strip_solution.csv", a.str());
            write_layers_csv(b, cmp);
            write_file(d / "layers.csv", b.str());
            s.trace.write_jsonl(c, "strip eps=" + key(eps));
            write_file(d / "newton.jsonl", c.str());
            for (const char* n : {"strip_solution.csv", "layers.csv", "newton.jsonl"}) add_artifact(d / n);
            json r;
            r["eps"] = eps;
            r["solution"] = fs::relative(d / "strip_solution.csv", dir).generic_string();
            r["grid"] = {{"ns", s.grid.ns}, {"nz", s.grid.nz}, {"hs", s.grid.hs}, {"s_max", s.grid.s_max}};
            r["residual"] = s.residual;
            r["iterations"] = s.trace.iterations;
            r["reduced_gap"] = s.reduced_gap;
            r["resonant_warning"] = s.resonant;
            r["max_abs_u"] = s.max_abs_u;
            r["max_abs_delta"] = cmp.max_abs_delta;
            r["max_rel_delta"] = cmp.max_rel_delta;
            r["unresolved"] = s.layers.unresolved;
            json depth = json::array();
            for (int j = 0; j < cfg.N; ++j) {
                double lo = 1e300, hi = -1e300;
                for (const auto& row : s.layers.depth) {
                    lo = std::min(lo, row[j]);
                    hi = std::max(hi, row[j]);
                }
                depth.push_back({{"j", j + 1}, {"min", lo}, {"max", hi}});
            }
            r["depth_range"] = depth;
            res[k] = r;
        });
        for (std::size_t k = 0; k < res.size(); ++k) rec.results[key(cfg.eps[k])] = res[k];
        rec.pde_run = true;
    }

    Eigen::MatrixXd strip_seed(double eps, const StripSetup& st, const StripOptions& o) const {
        double best = 0.0;
        std::string path;
        for (auto it = seed->results.begin(); it != seed->results.end(); ++it) {
            if (!it->is_object() || !it->contains("solution")) continue;
            double e = it->at("eps").get<double>();
            if (path.empty() || std::abs(std::log(e / eps)) < std::abs(std::log(best / eps))) {
                best = e;
                path = it->at("solution").get<std::string>();
            }
        }
        if (path.empty()) throw ConfigError("cli", "--seed-from: run has no strip solutions");
        std::ifstream in(*ctx.seed_from / path);
        std::string line;
        std::getline(in, line);
        std::vector<double> S, Z, U;
        double s, z, u;
        char c1, c2;
        while (in >> s >> c1 >> z >> c2 >> u) {
            S.push_back(s);
            Z.push_back(z);
            U.push_back(u);
        }
        // rows are contiguous blocks of constant z
        int ns_old = 0;
        while (ns_old < static_cast<int>(Z.size()) && Z[ns_old] == Z[0]) ++ns_old;
        if (ns_old < 2 || U.size() % ns_old != 0) throw ConfigError("cli", "--seed-from: unreadable " + path);
        const int nz_old = static_cast<int>(U.size()) / ns_old;
        if (nz_old != o.nz) throw ConfigError("cli", "--seed-from: seed run has nz = " + std::to_string(nz_old));
        const double delta0 = st.delta0 > 0.0 ? st.delta0 : default_delta0(*curve);
        StripGrid g = make_strip_grid(delta0 / eps, o.hs_max, curve->length() / eps, o.nz);
        const CollarData col = collar(o.nz);
        BarfOptions bo = barf_options();
        LayerVector fo = solve_barf(cfg.N, col, best, bo), fn = solve_barf(cfg.N, col, eps, bo);
        Eigen::MatrixXd out(g.nz, g.ns);
        for (int m = 0; m < g.nz; ++m) {
            // match the outermost predicted depth of the seed to the new one
            const double scale = fo.f(cfg.N, m) / fn.f(cfg.N, m);
            const double* srow = &S[static_cast<std::size_t>(m) * ns_old];
            const double* urow = &U[static_cast<std::size_t>(m) * ns_old];
            for (int i = 0; i < g.ns; ++i) {
                double sq = g.s(i) * scale;
                auto it = std::upper_bound(srow, srow + ns_old, sq);
                if (it == srow) out(m, i) = urow[0];
                else if (it == srow + ns_old) out(m, i) = urow[ns_old - 1];
                else {
                    std::size_t k = it - srow;
                    double w = (sq - srow[k - 1]) / (srow[k] - srow[k - 1]);
                    out(m, i) = (1 - w) * urow[k - 1] + w * urow[k];
                }
            }
        }
        return out;
    }

    // -------------------------------------------------------- verify (radial layer law)
    void verify() {
        radial_problem();
        std::vector<json> r1(cfg.eps.size()), r2(cfg.eps.size());
        std::vector<std::string> err1(cfg.eps.size()), err2(cfg.eps.size());
        parallel_for(2 * cfg.eps.size(), ctx.jobs, [&](std::size_t q) {
            const std::size_t k = q % cfg.eps.size();
            const int N = q < cfg.eps.size() ? 1 : 2;
            try {
                (N == 1 ? r1 : r2)[k] = radial_one(cfg.eps[k], N, "N" + std::to_string(N) + "/" + eps_dir(k, cfg.eps[k]));
            } catch (const Error& e) {
                (N == 1 ? err1 : err2)[k] = e.what();
            }
        });
        json n1 = json::object(), n2 = json::object();
        for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
            n1[key(cfg.eps[k])] = err1[k].empty() ? r1[k] : json{{"error", err1[k]}};
            n2[key(cfg.eps[k])] = err2[k].empty() ? r2[k] : json{{"error", err2[k]}};
        }
        rec.results["N1"] = n1;
        rec.results["N2"] = n2;
        rec.pde_run = true;

        const std::size_t last = cfg.eps.size() - 1;
        bool ok1 = std::all_of(err1.begin(), err1.end(), [](const std::string& s) { return s.empty(); });
        double worst = 0.0;
        if (ok1) {
            std::vector<json> tmp(r1.begin(), r1.end());
            radial_sweep_fit("sweep", tmp);
            for (std::size_t k = 1; k < r1.size(); ++k)
                worst = std::max(worst, r1[k]["rel_error_f1"].get<double>() / r1[k - 1]["rel_error_f1"].get<double>());
        }
        rec.checks.push_back({"radial layer law", "max ratio of consecutive relative errors of f1 (N=1)",
                              ok1 ? worst : NAN, "< 1 (monotone decreasing)", ok1 && worst < 1.0});
        const double e_last = ok1 ? r1[last]["rel_error_f1"].get<double>() : NAN;
        rec.checks.push_back({"radial layer law", "relative error of f1 at eps=" + key(cfg.eps[last]) + " (N=1)", e_last,
                              "<= 0.15", ok1 && e_last <= 0.15});
        const double target = std::log(2.0) / std::sqrt(2.0);
        const double sd = err2[last].empty() ? r2[last]["spacing_difference"].get<double>() : NAN;
        rec.checks.push_back({"radial layer law",
                              "spacing difference (f2-f1)-2f1 at eps=" + key(cfg.eps[last]) + " (N=2)", sd,
                              "within 20% of ln(2)/sqrt(2) = " + g17(target),
                              err2[last].empty() && std::abs(sd - target) <= 0.2 * target});
    }
};

}  // namespace

fs::path run_directory(const RunConfig& config, const RunContext& ctx) {
    fs::path root = ctx.out_root.empty() ? fs::path(config.output) : ctx.out_root;
    return root / config_hash(config);
}

RunRecord run_experiment(const RunConfig& config, const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config_hash = config_hash(config);
    rec.kind = to_string(config.kind);
    rec.version = kVersion;
    rec.config = to_json(config);
    const fs::path dir = run_directory(config, ctx);
    fs::create_directories(dir);
    write_file(dir / "config.json", rec.config.dump(2) + "\n");

    auto curve = build_curve(config.curve);
    auto V = build_potential(config.potential, curve);
    Pipeline p{config, ctx, dir, rec, curve, V, std::nullopt, {}};
    if (ctx.seed_from) p.seed = load_record(*ctx.seed_from);

    switch (config.kind) {
        case ExperimentKind::Predict: p.predict(); break;
        case ExperimentKind::ResonanceScan: p.resonance(); break;
        case ExperimentKind::TodaSolve: p.toda(); break;
        case ExperimentKind::SolveRadial: p.solve_radial_kind(); break;
        case ExperimentKind::SolveStrip: p.solve_strip_kind(); break;
        case ExperimentKind::Verify: p.verify(); break;
    }
    std::sort(rec.artifacts.begin(), rec.artifacts.end());
    rec.timings["total_seconds"] = seconds_since(t0);
    write_file(dir / "record.json", rec.to_json().dump(2) + "\n");
    return rec;
}

}  // namespace acbl
