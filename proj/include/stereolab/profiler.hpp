#pragma once

// Demographic profile of one split: per-cell counts and the imbalance ratio
// imbalance(l, s) = |cell(l, s)| / |label l|.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stereolab/manifest.hpp"

namespace stereolab {

/// An exact fraction count/support; keeps comparisons free of rounding.
struct Ratio {
  std::size_t count = 0;
  std::size_t support = 0;

  double value() const { return static_cast<double>(count) / static_cast<double>(support); }
  /// Cross-multiplied comparison; both supports must be non-zero.
  friend bool operator<(const Ratio& a, const Ratio& b) {
    return static_cast<std::uint64_t>(a.count) * b.support <
           static_cast<std::uint64_t>(b.count) * a.support;
  }
};

struct MinCell {
  std::size_t label = 0;
  std::size_t group = 0;
  Ratio imbalance;
};

/// Counts are the only stored quantity; every ratio and percentage is derived.
class DemographicProfile {
 public:
  DemographicProfile(LabelSet labels, GroupSet groups, Split split,
                     std::vector<std::vector<std::size_t>> counts);

  const LabelSet& labels() const { return labels_; }
  const GroupSet& groups() const { return groups_; }
  Split split() const { return split_; }

  std::size_t count(std::size_t label, std::size_t group) const { return counts_[label][group]; }
  std::size_t support(std::size_t label) const;
  std::size_t total() const;
  std::size_t group_total(std::size_t group) const;

  /// Undefined (nullopt) for labels with zero support.
  std::optional<Ratio> imbalance_ratio(std::size_t label, std::size_t group) const;
  std::optional<double> imbalance(std::size_t label, std::size_t group) const;
  double global_proportion(std::size_t group) const;

  /// Cell with the smallest imbalance over labels with support; first in
  /// label-then-group order on ties.
  MinCell min_cell() const;

  /// Labels whose imbalance is undefined.
  std::vector<std::string> zero_support_labels() const;

  friend bool operator==(const DemographicProfile&, const DemographicProfile&) = default;

 private:
  LabelSet labels_;
  GroupSet groups_;
  Split split_;
  std::vector<std::vector<std::size_t>> counts_;
};

/// Throws ManifestError when the split holds no records.
DemographicProfile profile(const Manifest& manifest, Split split = Split::train);

struct ProfileReport {
  std::string text;
  std::string csv;
};

/// One row per label (support, per-group count and percentage) and a final
/// global row. Percentages carry two decimals; undefined ones print as "—".
ProfileReport profile_report(const DemographicProfile& profile);

/// Row label used for the global-proportion line of the report CSV.
inline constexpr std::string_view kGlobalRow = "(global)";

}  // namespace stereolab
