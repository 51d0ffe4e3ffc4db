#pragma once

// Dataset data model: labelled, group-tagged records split into train/test.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stereolab {

/// Raised when a manifest or one of its records violates an invariant.
class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { train, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

/// True when `text` is non-empty and uses only [A-Za-z0-9_-./].
bool is_identifier(std::string_view text);

namespace detail {

/// Ordered list of distinct names; order defines report ordering.
class NameList {
 public:
  NameList() = default;
  NameList(std::vector<std::string> names, std::size_t min_size, std::string_view what);

  std::span<const std::string> names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  const std::string& operator[](std::size_t i) const { return names_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

  auto begin() const { return names_.begin(); }
  auto end() const { return names_.end(); }

  friend bool operator==(const NameList&, const NameList&) = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace detail

/// The target classification labels. Non-empty.
class LabelSet : public detail::NameList {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names) : NameList(std::move(names), 1, "label") {}
  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

/// Demographic groups of interest. At least two; names are opaque.
class GroupSet : public detail::NameList {
 public:
  GroupSet() = default;
  explicit GroupSet(std::vector<std::string> names) : NameList(std::move(names), 2, "group") {}
  friend bool operator==(const GroupSet&, const GroupSet&) = default;
};

struct SampleRecord {
  std::string sample_id;
  std::string source_ref;  // opaque, never interpreted
  std::string label;
  std::string group;
  Split split = Split::train;
  std::vector<double> features;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Explicit label/group vocabulary for load_manifest.
struct Schema {
  LabelSet labels;
  GroupSet groups;
};

/// Immutable, validated collection of records.
///
/// Records are held in canonical order (sorted by sample_id); every cell
/// view inherits that order, so seeded sampling does not depend on the row
/// order of the source file.
class Manifest {
 public:
  Manifest(LabelSet labels, GroupSet groups, std::vector<SampleRecord> records,
           std::vector<std::string> comments = {});

  const LabelSet& labels() const { return labels_; }
  const GroupSet& groups() const { return groups_; }
  std::span<const SampleRecord> records() const { return records_; }
  const std::vector<std::string>& comments() const { return comments_; }

  /// Feature dimension, or 0 when no record carries features.
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t size() const { return records_.size(); }
  std::size_t split_size(Split split) const;

  /// Indices into records() for one (label, group, split) cell, sorted by sample_id.
  std::span<const std::size_t> cell_indices(std::size_t label, std::size_t group,
                                            Split split) const;
  std::size_t cell_count(std::size_t label, std::size_t group, Split split) const {
    return cell_indices(label, group, split).size();
  }

  /// Records of one cell; throws ManifestError for unknown label or group.
  std::vector<SampleRecord> cell(std::string_view label, std::string_view group,
                                 Split split) const;

  /// Records of one split, in canonical order.
  std::vector<SampleRecord> split_records(Split split) const;

  /// Same vocabulary and comments, different records.
  Manifest with_records(std::vector<SampleRecord> records) const;

  const SampleRecord* find(std::string_view sample_id) const;

  /// Metadata equal exactly, records equal as sets.
  friend bool operator==(const Manifest& a, const Manifest& b);

 private:
  std::size_t cell_slot(std::size_t label, std::size_t group, Split split) const;

  LabelSet labels_;
  GroupSet groups_;
  std::vector<SampleRecord> records_;
  std::vector<std::string> comments_;
  std::size_t feature_dim_ = 0;
  std::vector<std::vector<std::size_t>> cells_;  // [split][label][group] flattened
};

/// Loads a manifest CSV. With no schema the label and group sets are
/// inferred in first-appearance order.
Manifest load_manifest(const std::filesystem::path& path,
                       const std::optional<Schema>& schema = std::nullopt);
Manifest parse_manifest(std::string_view csv_text, std::string_view source_name,
                        const std::optional<Schema>& schema = std::nullopt);

std::string serialize_manifest(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Stable content hash of the serialized manifest, 16 hex digits.
std::string fingerprint(const Manifest& manifest);

}  // namespace stereolab
