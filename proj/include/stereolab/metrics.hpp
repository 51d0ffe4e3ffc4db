#pragma once

// Per-(label, group) recall over a test split, group recall differences and
// mean/std aggregation across repeated runs, plus the report files.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stereolab/bias_level.hpp"
#include "stereolab/manifest.hpp"

namespace stereolab {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sample_id -> predicted label.
class PredictionSet {
 public:
  PredictionSet() = default;
  explicit PredictionSet(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  const std::map<std::string, std::string>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  /// Throws EvaluationError if the id already has a prediction.
  void add(std::string sample_id, std::string predicted_label);

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;

 private:
  std::map<std::string, std::string> entries_;
};

/// Reads `sample_id,predicted_label`; rejects duplicate ids.
PredictionSet parse_predictions(std::string_view csv_text, std::string_view source_name);
PredictionSet load_predictions(const std::filesystem::path& path);
std::string serialize_predictions(const PredictionSet& predictions);
void save_predictions(const PredictionSet& predictions, const std::filesystem::path& path);

/// counts[true label][group][predicted label] over the test split.
struct Confusion {
  LabelSet labels;
  GroupSet groups;
  std::vector<std::vector<std::vector<std::size_t>>> counts;
};

class RecallMatrix {
 public:
  RecallMatrix(LabelSet labels, GroupSet groups, std::vector<std::vector<std::size_t>> correct,
               std::vector<std::vector<std::size_t>> support);

  const LabelSet& labels() const { return labels_; }
  const GroupSet& groups() const { return groups_; }
  std::size_t correct(std::size_t label, std::size_t group) const { return correct_[label][group]; }
  std::size_t support(std::size_t label, std::size_t group) const { return support_[label][group]; }
  /// Defined iff support > 0.
  std::optional<double> recall(std::size_t label, std::size_t group) const;

  friend bool operator==(const RecallMatrix&, const RecallMatrix&) = default;

 private:
  LabelSet labels_;
  GroupSet groups_;
  std::vector<std::vector<std::size_t>> correct_;
  std::vector<std::vector<std::size_t>> support_;
};

/// Requires exactly one prediction per test-split record; errors list the
/// offending ids.
Confusion tally(const Manifest& manifest, const PredictionSet& predictions);
RecallMatrix evaluate(const Manifest& manifest, const PredictionSet& predictions);

struct DiffReport {
  LabelSet labels;
  std::string target_group;
  std::string reference_group;
  std::vector<std::optional<double>> diff;  // target recall - reference recall, per label
};

DiffReport diff(const RecallMatrix& matrix, std::string_view target_group,
                std::string_view reference_group);

struct Stat {
  double mean = 0.0;
  std::optional<double> std;  // sample std (n - 1), undefined for n = 1
  std::size_t n = 0;
};

/// Mean and sample standard deviation; nullopt for no values.
std::optional<Stat> summarize(std::span<const double> values);

struct AggregateReport {
  LabelSet labels;
  GroupSet groups;
  std::string target_group;
  std::string reference_group;
  std::vector<std::vector<std::optional<Stat>>> recall;  // [label][group]
  std::vector<std::optional<Stat>> diff;                 // [label]
  std::optional<Stat> train_size;
};

/// Cells undefined in some runs aggregate over the runs where they are
/// defined; n reports how many.
AggregateReport aggregate(std::span<const RecallMatrix> matrices, std::string_view target_group,
                          std::string_view reference_group,
                          std::span<const double> train_sizes = {});

/// Writes <stem>_diff.csv (one row per bias level and label),
/// <stem>_recall.csv (one row per bias level, label and group) and
/// <stem>_table.txt (aligned recall table, one column per bias level).
/// Returns the written paths.
std::vector<std::filesystem::path> emit_reports(const std::map<BiasLevel, AggregateReport>& aggregates,
                                                const std::filesystem::path& out_dir,
                                                std::string_view stem = "report");

struct DiffRow {
  BiasLevel bias;
  std::string label;
  std::optional<double> mean_pct;
  std::optional<double> std_pct;
  std::size_t n_runs = 0;
};

struct RecallRow {
  BiasLevel bias;
  std::string label;
  std::string group;
  std::optional<double> mean_pct;
  std::optional<double> std_pct;
  std::size_t n_runs = 0;
};

std::vector<DiffRow> read_diff_csv(const std::filesystem::path& path);
std::vector<RecallRow> read_recall_csv(const std::filesystem::path& path);

/// Percent with two decimals, or "—" when undefined.
std::string format_percent(const std::optional<double>& fraction);

inline constexpr std::string_view kUndefinedCell = "—";
inline constexpr std::string_view kNotApplicable = "n/a";

}  // namespace stereolab
