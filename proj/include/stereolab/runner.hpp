#pragma once

// Experiment grid: for every bias level and repetition, resample a balanced
// parent, derive the biased set (and a size-matched stratified baseline),
// obtain predictions, evaluate, and aggregate.
//
// Output directory layout:
//   test.csv                       test split handed to classifiers
//   runs/<kind>_b<level>_r<NN>/    train.csv, predictions.csv[, external.log]
//   ledger.jsonl                   one JSON record per finished run
//   reports/{biased,baseline}_*    aggregated reports

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stereolab/bias_level.hpp"
#include "stereolab/metrics.hpp"

namespace stereolab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExternalCommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ClassifierKind { builtin_centroid, external };

struct ExperimentConfig {
  std::filesystem::path source_manifest;
  std::string target_label;
  std::string target_group;
  std::optional<std::string> reference_group;  // defaults to the other group when |S| = 2
  std::vector<BiasLevel> bias_grid = default_bias_grid();
  int repeats = 10;
  std::uint64_t base_seed = 0;
  ClassifierKind classifier = ClassifierKind::builtin_centroid;
  std::string external_command;  // template with {train}, {test}, {out}
  std::chrono::seconds external_timeout{24 * 60 * 60};
  bool baseline = true;
  int jobs = 1;
};

/// Throws ConfigError on any invariant violation.
void validate(const ExperimentConfig& config);

/// key = value lines; '#' starts a comment. Keys mirror ExperimentConfig.
/// bias_grid accepts "lo:hi:step", a comma list, or "default". A relative
/// source_manifest resolves against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

enum class RunKind { biased, baseline };
std::string_view to_string(RunKind kind);

struct RunRecord {
  RunKind kind = RunKind::biased;
  BiasLevel bias_level;
  int repeat_index = 0;
  std::uint64_t derived_seed = 0;
  std::string train_manifest_path;  // relative to the output directory
  std::string predictions_path;     // relative to the output directory
  std::string train_checksum;
  std::string predictions_checksum;
  std::size_t train_size = 0;
  bool ok = false;
  std::string error;
  std::optional<RecallMatrix> recall_matrix;
};

/// Unique per (bias level index, repeat index) for a given base seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t level_index, int repeat_index);

/// Directory name of one run, e.g. "biased_b-0.8_r03".
std::string run_name(RunKind kind, BiasLevel level, int repeat_index);

std::string ledger_line(const RunRecord& record);
RunRecord parse_ledger_line(std::string_view line, const LabelSet& labels, const GroupSet& groups);
/// Reads a ledger; later lines for the same run supersede earlier ones.
std::vector<RunRecord> read_ledger(const std::filesystem::path& path, const LabelSet& labels,
                                   const GroupSet& groups);

/// Runs `command_template` through /bin/sh with {train}, {test} and {out}
/// replaced by quoted paths, waits up to `timeout`, then loads {out}.
/// stdout and stderr go to `log_path` when given.
PredictionSet external_predict(std::string_view command_template, const std::filesystem::path& train,
                               const std::filesystem::path& test, const std::filesystem::path& out,
                               std::chrono::seconds timeout,
                               const std::optional<std::filesystem::path>& log_path = std::nullopt);

struct GridResult {
  std::map<BiasLevel, AggregateReport> biased;
  std::map<BiasLevel, AggregateReport> baseline;
  std::vector<RunRecord> records;  // in grid order
  std::size_t resumed = 0;         // runs reused from an existing ledger
  std::size_t failed = 0;
};

/// Executes the grid, resuming from an intact ledger in `out_dir`.
GridResult run_grid(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace stereolab
