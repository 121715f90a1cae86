#include <cmath>
#include <cstdio>
#include <sstream>

#include "acbl/experiment.hpp"
#include "acbl/numerics.hpp"

namespace acbl {

using nlohmann::json;

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "n/a";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// fit entries carry slope, stderr and point count
json fit_with_ci(const json& fit) {
    json out = fit;
    const int n = fit.value("points", 0);
    if (n >= 3) {
        const double t = student_t95(n - 2);
        const double se = fit.value("slope_stderr", 0.0), m = fit.value("slope", 0.0);
        out["ci95"] = {m - t * se, m + t * se};
    } else {
        out["ci95"] = nullptr;  // two points: exact line, no residual degrees of freedom
    }
    return out;
}

}  // namespace

Report emit_report(const std::vector<RunRecord>& records) {
    Report rep;
    json& J = rep.json;
    J["records"] = json::array();
    bool all_pass = true, any_pde = false;
    std::ostringstream md;
    md << "# Run summary\n\n";
    md << "| run | kind | checks | status |\n|---|---|---|---|\n";
    for (const auto& r : records) {
        const bool ok = r.passed();
        all_pass = all_pass && ok;
        any_pde = any_pde || r.pde_run;
        md << "| `" << r.config_hash << "` | " << r.kind << " | " << r.checks.size() << " | " << (ok ? "PASS" : "FAIL")
           << " |\n";
    }

    md << "\n## Criteria\n\n";
    bool any_check = false;
    for (const auto& r : records) {
        if (r.checks.empty()) continue;
        if (!any_check) md << "| run | criterion | quantity | measured | required | result |\n|---|---|---|---|---|---|\n";
        any_check = true;
        for (const auto& c : r.checks)
            md << "| `" << r.config_hash << "` | " << c.criterion << " | " << c.quantity << " | " << num(c.measured)
               << " | " << c.required << " | " << (c.pass ? "PASS" : "**FAIL**") << " |\n";
    }
    if (!any_check) md << "No acceptance checks were requested by these runs.\n";
    std::vector<std::string> failures;
    for (const auto& r : records)
        for (const auto& c : r.checks)
            if (!c.pass)
                failures.push_back(c.criterion + ": " + c.quantity + " measured " + num(c.measured) + ", required " +
                                   c.required);
    if (!failures.empty()) {
        md << "\nFailing:\n\n";
        for (const auto& f : failures) md << "- " << f << "\n";
    }

    md << "\n## Convergence fits\n\n";
    bool any_fit = false;
    for (const auto& r : records) {
        json rj = r.to_json();
        if (r.results.contains("sweep")) {
            json f = fit_with_ci(r.results["sweep"]);
            rj["fit"] = f;
            any_fit = true;
            md << "- `" << r.config_hash << "` " << f.value("quantity", "error") << " ~ ε^p: p = " << num(f["slope"].get<double>());
            if (f["ci95"].is_array())
                md << " (95% CI " << num(f["ci95"][0].get<double>()) << " to " << num(f["ci95"][1].get<double>()) << ")";
            else
                md << " (two points, no interval)";
            md << "\n";
        }
        J["records"].push_back(rj);
    }
    if (!any_fit) md << "No ε sweeps with error data.\n";

    md << "\n## PDE solves\n\n";
    if (!any_pde) {
        md << "not run\n";
        J["pde"] = "not run";
    } else {
        J["pde"] = "run";
        for (const auto& r : records) {
            if (!r.pde_run) continue;
            md << "- `" << r.config_hash << "` (" << r.kind << ")\n";
            auto line = [&](const json& e, const std::string& tag) {
                if (!e.is_object()) return;
                if (e.contains("error")) {
                    md << "  - " << tag << "error: " << e["error"].get<std::string>() << "\n";
                    return;
                }
                if (!e.contains("residual")) return;
                md << "  - " << tag << "ε = " << num(e["eps"].get<double>()) << ": residual " << num(e["residual"].get<double>());
                if (e.contains("max_rel_delta")) md << ", max relative depth delta " << num(e["max_rel_delta"].get<double>());
                if (e.value("resonant_warning", false)) md << ", near resonance";
                md << "\n";
            };
            for (auto it = r.results.begin(); it != r.results.end(); ++it) {
                if (it->is_object() && (it.key() == "N1" || it.key() == "N2"))
                    for (auto jt = it->begin(); jt != it->end(); ++jt) line(*jt, it.key() + ", ");
                else
                    line(*it, "");
            }
        }
    }

    md << "\n## Artifacts\n\n";
    for (const auto& r : records)
        for (const auto& a : r.artifacts) md << "- [" << r.config_hash << "/" << a << "](" << r.config_hash << "/" << a << ")\n";

    J["all_passed"] = all_pass;
    J["failures"] = failures;
    rep.markdown = md.str();
    return rep;
}

}  // namespace acbl
