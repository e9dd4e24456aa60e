#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pipeflow {

/// Pascal per bar.
inline constexpr double kPascalPerBar = 1.0e5;

/// One entry of a machine-readable problem report.
struct Diagnostic {
  std::string code;
  std::string path;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<Diagnostic> diagnostics)
      : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string summarize(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
      if (!out.empty()) out += "; ";
      out += d.path.empty() ? d.message : d.path + ": " + d.message;
    }
    return out.empty() ? std::string("invalid scenario") : out;
  }

  std::vector<Diagnostic> diagnostics_;
};

/// Failure inside the deterministic network solver (Newton divergence,
/// positivity loss, singular configuration).
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, long step = -1)
      : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
        step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// The adaptive driver cannot reach the requested tolerance within its caps.
class ToleranceUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pipeflow
