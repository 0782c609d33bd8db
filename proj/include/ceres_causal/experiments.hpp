#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ceres_causal/report.hpp"

namespace ceres {

/// Knobs shared by every study. Unset optionals fall back to the per-study
/// defaults (the acceptance sizes).
struct ExperimentConfig {
  std::string command = "all";
  std::uint64_t seed = 7;
  std::optional<std::filesystem::path> spec;
  std::optional<std::size_t> trials;
  std::size_t window = 5;
  std::optional<double> kappa;
  double rho = 0.5;
  std::vector<double> tau_grid{1.0, 0.3, 0.1, 0.03, 0.01};
  double tol = 1e-12;
  std::size_t samples = 10000;
  std::size_t jobs = 0;
  std::filesystem::path out = "ceres_out";

  /// Throws InvalidInput naming the offending knob.
  void validate() const;
  /// Canonical JSON of every knob that can change output bytes (not out/jobs).
  [[nodiscard]] std::string canonical_json() const;
  [[nodiscard]] std::string hash() const;
  [[nodiscard]] std::size_t count(std::size_t fallback) const { return trials.value_or(fallback); }
};

/// Merges a JSON config file into `config`; keys mirror the long flag names.
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

/// Parses "1,0.3,0.1".
std::vector<double> parse_double_list(const std::string& text);

struct Verdict {
  int criterion = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Study {
  std::string file;  // CSV file name
  CsvTable table;
};

struct StudyResult {
  std::vector<Study> studies;
  std::vector<Verdict> verdicts;
  std::vector<std::pair<std::string, double>> metrics;

  void append(StudyResult other);
  [[nodiscard]] bool passed() const;
};

StudyResult backdoor_identity_study(const ExperimentConfig& config);
/// Reported only: NWGM gap against the TV spread of the per-z softmaxes.
StudyResult nwgm_gap_study(const ExperimentConfig& config);
StudyResult nwgm_exactness_study(const ExperimentConfig& config);
StudyResult frontdoor_identity_study(const ExperimentConfig& config);
StudyResult mediator_robustness_study(const ExperimentConfig& config);
StudyResult gate_contract_study(const ExperimentConfig& config);
StudyResult qp_oracle_study(const ExperimentConfig& config);
StudyResult isotropic_slack_study(const ExperimentConfig& config);
StudyResult membank_study(const ExperimentConfig& config);

/// Studies behind a subcommand; throws InvalidInput for unknown names.
StudyResult run_command(const ExperimentConfig& config);
std::vector<std::string> command_names();

/// Writes one CSV per study and summary.json under config.out.
void write_outputs(const ExperimentConfig& config, const StudyResult& result);
std::string summary_json(const ExperimentConfig& config, const StudyResult& result);

}  // namespace ceres
