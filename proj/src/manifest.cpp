#include "stereolab/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "stereolab/csv.hpp"
#include "stereolab/rng.hpp"

namespace stereolab {

namespace {

constexpr std::string_view kLabelsDirective = "labels: ";
constexpr std::string_view kGroupsDirective = "groups: ";

constexpr std::size_t kSplitCount = 2;

std::size_t split_index(Split s) { return s == Split::train ? 0 : 1; }

std::string join(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  return std::nullopt;
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.' || c == '/';
  });
}

namespace detail {

NameList::NameList(std::vector<std::string> names, std::size_t min_size, std::string_view what)
    : names_(std::move(names)) {
  if (names_.size() < min_size) {
    throw ManifestError(std::string(what) + " set needs at least " + std::to_string(min_size) +
                        " entries, got " + std::to_string(names_.size()));
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& n : names_) {
    if (!is_identifier(n)) {
      throw ManifestError("invalid " + std::string(what) + " name '" + n + "'");
    }
    if (!seen.insert(n).second) {
      throw ManifestError("duplicate " + std::string(what) + " '" + n + "'");
    }
  }
}

std::optional<std::size_t> NameList::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

}  // namespace detail

Manifest::Manifest(LabelSet labels, GroupSet groups, std::vector<SampleRecord> records,
                   std::vector<std::string> comments)
    : labels_(std::move(labels)),
      groups_(std::move(groups)),
      records_(std::move(records)),
      comments_(std::move(comments)) {
  std::sort(records_.begin(), records_.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.sample_id < b.sample_id; });

  cells_.assign(kSplitCount * labels_.size() * groups_.size(), {});
  feature_dim_ = records_.empty() ? 0 : records_.front().features.size();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!is_identifier(r.sample_id)) {
      throw ManifestError("invalid sample_id '" + r.sample_id + "'");
    }
    if (r.source_ref.find_first_of(",\r\n") != std::string::npos) {
      throw ManifestError("record '" + r.sample_id + "': source_ref contains a separator");
    }
    if (i > 0 && records_[i - 1].sample_id == r.sample_id) {
      throw ManifestError("duplicate sample_id '" + r.sample_id + "'");
    }
    const auto l = labels_.index_of(r.label);
    if (!l) throw ManifestError("record '" + r.sample_id + "': unknown label '" + r.label + "'");
    const auto g = groups_.index_of(r.group);
    if (!g) throw ManifestError("record '" + r.sample_id + "': unknown group '" + r.group + "'");
    if (r.features.size() != feature_dim_) {
      throw ManifestError("record '" + r.sample_id + "': feature dimension " +
                          std::to_string(r.features.size()) + " differs from " +
                          std::to_string(feature_dim_));
    }
    for (double f : r.features) {
      if (!std::isfinite(f)) {
        throw ManifestError("record '" + r.sample_id + "': non-finite feature value");
      }
    }
    cells_[cell_slot(*l, *g, r.split)].push_back(i);
  }
}

std::size_t Manifest::cell_slot(std::size_t label, std::size_t group, Split split) const {
  return (split_index(split) * labels_.size() + label) * groups_.size() + group;
}

std::size_t Manifest::split_size(Split split) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [split](const SampleRecord& r) { return r.split == split; }));
}

std::span<const std::size_t> Manifest::cell_indices(std::size_t label, std::size_t group,
                                                    Split split) const {
  if (label >= labels_.size() || group >= groups_.size()) {
    throw ManifestError("cell index out of range");
  }
  return cells_[cell_slot(label, group, split)];
}

std::vector<SampleRecord> Manifest::cell(std::string_view label, std::string_view group,
                                         Split split) const {
  const auto l = labels_.index_of(label);
  if (!l) throw ManifestError("unknown label '" + std::string(label) + "'");
  const auto g = groups_.index_of(group);
  if (!g) throw ManifestError("unknown group '" + std::string(group) + "'");
  std::vector<SampleRecord> out;
  for (std::size_t i : cell_indices(*l, *g, split)) out.push_back(records_[i]);
  return out;
}

std::vector<SampleRecord> Manifest::split_records(Split split) const {
  std::vector<SampleRecord> out;
  for (const auto& r : records_) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

Manifest Manifest::with_records(std::vector<SampleRecord> records) const {
  return Manifest(labels_, groups_, std::move(records), comments_);
}

const SampleRecord* Manifest::find(std::string_view sample_id) const {
  auto it = std::lower_bound(
      records_.begin(), records_.end(), sample_id,
      [](const SampleRecord& r, std::string_view id) { return r.sample_id < id; });
  if (it == records_.end() || it->sample_id != sample_id) return nullptr;
  return &*it;
}

bool operator==(const Manifest& a, const Manifest& b) {
  // Canonical ordering makes vector equality a set comparison.
  return a.labels_ == b.labels_ && a.groups_ == b.groups_ && a.comments_ == b.comments_ &&
         a.records_ == b.records_;
}

Manifest parse_manifest(std::string_view csv_text, std::string_view source_name,
                        const std::optional<Schema>& schema) {
  const CsvTable table = parse_csv(csv_text, source_name);
  const std::string src(source_name);

  constexpr std::string_view kRequired[] = {"sample_id", "source_ref", "label", "group", "split"};
  std::size_t col[5];
  for (std::size_t i = 0; i < 5; ++i) {
    col[i] = table.column(kRequired[i]);
    if (col[i] == CsvTable::npos) {
      throw ManifestError(src + ": missing required column '" + std::string(kRequired[i]) + "'");
    }
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t k = 0;; ++k) {
    const std::size_t c = table.column("f" + std::to_string(k));
    if (c == CsvTable::npos) break;
    feature_cols.push_back(c);
  }
  if (feature_cols.size() + 5 != table.header.size()) {
    throw ManifestError(src + ": unexpected columns in header (features must be f0..fK)");
  }
  if (table.rows.empty()) throw ManifestError(src + ": empty manifest");

  std::vector<std::string> comments;
  std::optional<std::vector<std::string>> declared_labels;
  std::optional<std::vector<std::string>> declared_groups;
  for (const auto& c : table.comments) {
    std::string_view cv = c;
    if (cv.starts_with(kLabelsDirective)) {
      declared_labels = split_fields(cv.substr(kLabelsDirective.size()));
    } else if (cv.starts_with(kGroupsDirective)) {
      declared_groups = split_fields(cv.substr(kGroupsDirective.size()));
    } else {
      comments.push_back(c);
    }
  }

  auto row_error = [&](const CsvRow& row, const std::string& what) {
    return ManifestError(src + ":" + std::to_string(row.line) + ": " + what);
  };

  std::vector<std::string> seen_labels;
  std::vector<std::string> seen_groups;
  std::unordered_set<std::string> label_index;
  std::unordered_set<std::string> group_index;
  std::unordered_map<std::string, std::size_t> ids;
  std::vector<SampleRecord> records;
  records.reserve(table.rows.size());

  for (const auto& row : table.rows) {
    SampleRecord r;
    r.sample_id = row.fields[col[0]];
    r.source_ref = row.fields[col[1]];
    r.label = row.fields[col[2]];
    r.group = row.fields[col[3]];
    const auto& split_text = row.fields[col[4]];

    if (!is_identifier(r.sample_id)) {
      throw row_error(row, "invalid sample_id '" + r.sample_id + "'");
    }
    if (auto [it, fresh] = ids.emplace(r.sample_id, row.line); !fresh) {
      throw row_error(row, "duplicate sample_id '" + r.sample_id + "' (first seen on line " +
                               std::to_string(it->second) + ")");
    }
    if (!is_identifier(r.label)) throw row_error(row, "invalid label '" + r.label + "'");
    if (!is_identifier(r.group)) throw row_error(row, "invalid group '" + r.group + "'");
    const auto split = parse_split(split_text);
    if (!split) throw row_error(row, "invalid split '" + split_text + "' (sample '" + r.sample_id + "')");
    r.split = *split;

    if (schema) {
      if (!schema->labels.contains(r.label)) {
        throw row_error(row, "unknown label '" + r.label + "' (sample '" + r.sample_id + "')");
      }
      if (!schema->groups.contains(r.group)) {
        throw row_error(row, "unknown group '" + r.group + "' (sample '" + r.sample_id + "')");
      }
    }
    if (label_index.insert(r.label).second) seen_labels.push_back(r.label);
    if (group_index.insert(r.group).second) seen_groups.push_back(r.group);

    r.features.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      try {
        r.features.push_back(parse_real(row.fields[c]));
      } catch (const FormatError& e) {
        throw row_error(row, "sample '" + r.sample_id + "': " + e.what());
      }
    }
    records.push_back(std::move(r));
  }

  LabelSet labels;
  GroupSet groups;
  try {
    if (schema) {
      labels = schema->labels;
      groups = schema->groups;
    } else {
      labels = LabelSet(declared_labels ? *declared_labels : seen_labels);
      groups = GroupSet(declared_groups ? *declared_groups : seen_groups);
    }
  } catch (const ManifestError& e) {
    throw ManifestError(src + ": " + e.what());
  }
  try {
    return Manifest(std::move(labels), std::move(groups), std::move(records), std::move(comments));
  } catch (const ManifestError& e) {
    // Row-level checks above cover the common cases; this reports whatever remains.
    throw ManifestError(src + ": " + e.what());
  }
}

Manifest load_manifest(const std::filesystem::path& path, const std::optional<Schema>& schema) {
  return parse_manifest(read_file(path), path.string(), schema);
}

std::string serialize_manifest(const Manifest& manifest) {
  std::string out;
  for (const auto& c : manifest.comments()) out += "# " + c + "\n";
  out += "# ";
  out += kLabelsDirective;
  out += join(manifest.labels().names()) + "\n";
  out += "# ";
  out += kGroupsDirective;
  out += join(manifest.groups().names()) + "\n";
  out += "sample_id,source_ref,label,group,split";
  for (std::size_t k = 0; k < manifest.feature_dim(); ++k) out += ",f" + std::to_string(k);
  out += '\n';
  for (const auto& r : manifest.records()) {
    out += r.sample_id;
    out += ',';
    out += r.source_ref;
    out += ',';
    out += r.label;
    out += ',';
    out += r.group;
    out += ',';
    out += to_string(r.split);
    for (double f : r.features) {
      out += ',';
      out += format_real(f);
    }
    out += '\n';
  }
  return out;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_file(path, serialize_manifest(manifest));
}

std::string fingerprint(const Manifest& manifest) {
  return hex64(fnv1a(serialize_manifest(manifest)));
}

}  // namespace stereolab
