#pragma once

// Test-only fixtures and brute-force oracles. Nothing here calls into the
// cell index, planner or evaluator it is used to check.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stereolab/manifest.hpp"
#include "stereolab/metrics.hpp"

namespace stereolab::testing {

/// Per-(label, group) train counts; expands into a manifest whose records
/// are named <label>-<group>-NNNNN.
struct CellCounts {
  std::vector<std::string> labels;
  std::vector<std::string> groups;
  std::vector<std::vector<std::size_t>> counts;  // [label][group]
};

Manifest expand(const CellCounts& cells, std::size_t test_per_cell = 0);

/// The bundled FER+-shaped train profile.
CellCounts ferplus_cells();
std::filesystem::path fixture_dir();

/// Random manifest with |L| <= max_labels, 2 <= |S| <= max_groups, train
/// cells in [min_cell, max_cell], test cells in [0, max_test]. Records are
/// emitted in shuffled order with random ids.
Manifest random_manifest(std::mt19937_64& rng, std::size_t max_labels, std::size_t max_groups,
                         std::size_t min_cell, std::size_t max_cell, std::size_t max_test = 0);

/// Random manifest whose train split is balanced within +-1 per label.
Manifest random_balanced_manifest(std::mt19937_64& rng, std::size_t max_labels, std::size_t max_groups,
                                  std::size_t min_cell, std::size_t max_cell);

/// Count of train records per cell by a linear scan over raw records.
std::map<std::pair<std::string, std::string>, std::size_t> brute_counts(const Manifest& m, Split split);

/// Brute-force imbalance: counts/support for every cell of labels with support.
std::map<std::pair<std::string, std::string>, double> brute_imbalance(const Manifest& m);

/// Balanced targets by exhaustive search: for each label, the k in
/// [0, support] closest to support * min_imb, ties going up; min_imb found by
/// scanning all cells with exact cross-multiplication.
std::map<std::pair<std::string, std::string>, std::size_t> brute_balanced_targets(const Manifest& m);

/// Recall per (label, group) by direct counting over the test split.
std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> brute_recall(
    const Manifest& m, const PredictionSet& p);

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace stereolab::testing
