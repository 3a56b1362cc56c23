#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fwn/fbm.hpp"

namespace fwn {

struct ExperimentConfig {
  double hurst = 0.75;
  double horizon = 1.0;
  int n = 1025;
  int n_paths = 100000;
  std::uint64_t seed = 0;
  int threads = 0;
  GeneratorMethod generator = GeneratorMethod::circulant;  // moment experiments
  std::string sde_spec = "linear";                         // picard/gronwall
};

enum class ReportMode { equality, upper_bound };
enum class Verdict { pass, fail, inconclusive };

const char* verdict_name(Verdict v);

struct ExperimentReport {
  std::string name;       // experiment name plus sub-case, e.g. "isometry/s*sin"
  double estimate = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  ReportMode mode = ReportMode::equality;
  Verdict verdict = Verdict::fail;
  bool pass = false;
  double scale = 0.0;     // magnitude basis for the inconclusive rule when target ~ 0
  // reproduction metadata
  double hurst = 0.0;
  double horizon = 0.0;
  int n = 0;
  int n_paths = 0;
  std::uint64_t seed = 0;
  std::string extra;      // JSON object with experiment-specific values
  double wall_time = 0.0; // seconds; diagnostic only, not serialized
};

/// Evaluates the margin rules: equality |e-t| <= 4 se, upper bound
/// e <= t (1 + 3 se/e); inconclusive when se > 0.25 max(|t|, scale).
void finalize_report(ExperimentReport& r);

std::vector<std::string> experiment_names();

/// Runs one named verification experiment; returns one report per sub-case.
/// Throws UsageError for unknown names.
std::vector<ExperimentReport> run_experiment(const std::string& name,
                                             const ExperimentConfig& config);

std::string reports_to_json(const std::vector<ExperimentReport>& reports);
void reports_to_csv(std::ostream& out, const std::vector<ExperimentReport>& reports);

}  // namespace fwn
