#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace acbl {

/// Base error. Carries the module tag and an optional diagnostic trace
/// (residual histories, offending values) so callers can report without
/// re-running the computation.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what, std::vector<double> trace = {})
        : std::runtime_error("[" + module + "] " + what),
          module_(std::move(module)),
          trace_(std::move(trace)) {}

    const std::string& module() const noexcept { return module_; }
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::string module_;
    std::vector<double> trace_;
};

struct DomainError : Error { using Error::Error; };       // invalid input, out of chart
struct HypothesisError : Error { using Error::Error; };   // generalized curvature not positive
struct ConvergenceError : Error { using Error::Error; };  // Newton or fixed-point failure
struct ResonanceError : Error { using Error::Error; };    // reduced operator too close to singular
struct BranchError : Error { using Error::Error; };       // solve landed on a different layer count
struct ConfigError : Error { using Error::Error; };       // schema violations

}  // namespace acbl
