#include "stereolab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stereolab/csv.hpp"

namespace stereolab {

namespace {

constexpr std::size_t kMaxListedIds = 10;

std::string list_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < kMaxListedIds; ++i) out += " " + ids[i];
  if (ids.size() > kMaxListedIds) out += " ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

std::size_t group_index(const GroupSet& groups, std::string_view name) {
  auto g = groups.index_of(name);
  if (!g) throw EvaluationError("unknown group '" + std::string(name) + "'");
  return *g;
}

std::string stat_mean(const std::optional<Stat>& s) {
  return s ? format_fixed2(100.0 * s->mean) : std::string(kUndefinedCell);
}

std::string stat_std(const std::optional<Stat>& s) {
  if (!s) return std::string(kUndefinedCell);
  return s->std ? format_fixed2(100.0 * *s->std) : std::string(kNotApplicable);
}

std::string stat_cell(const std::optional<Stat>& s) {
  if (!s) return std::string(kUndefinedCell);
  return stat_mean(s) + " ± " + stat_std(s);
}

std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](unsigned char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  const std::size_t w = display_width(s);
  if (w >= width) return s;
  const std::string fill(width - w, ' ');
  return left ? fill + s : s + fill;
}

std::optional<double> parse_optional(const std::string& field) {
  if (field == kUndefinedCell || field == kNotApplicable) return std::nullopt;
  return parse_real(field);
}

void require_columns(const CsvTable& t, std::span<const std::string_view> names,
                     const std::filesystem::path& path) {
  if (t.header.size() != names.size() ||
      !std::equal(names.begin(), names.end(), t.header.begin())) {
    throw FormatError(path.string() + ": unexpected report header");
  }
}

}  // namespace

void PredictionSet::add(std::string sample_id, std::string predicted_label) {
  auto [it, fresh] = entries_.emplace(std::move(sample_id), std::move(predicted_label));
  if (!fresh) throw EvaluationError("duplicate prediction for sample '" + it->first + "'");
}

PredictionSet parse_predictions(std::string_view csv_text, std::string_view source_name) {
  const CsvTable t = parse_csv(csv_text, source_name);
  const std::size_t id = t.column("sample_id");
  const std::size_t pred = t.column("predicted_label");
  if (id == CsvTable::npos || pred == CsvTable::npos || t.header.size() != 2) {
    throw FormatError(std::string(source_name) + ": expected header sample_id,predicted_label");
  }
  PredictionSet out;
  for (const auto& row : t.rows) {
    try {
      out.add(row.fields[id], row.fields[pred]);
    } catch (const EvaluationError& e) {
      throw FormatError(std::string(source_name) + ":" + std::to_string(row.line) + ": " + e.what());
    }
  }
  return out;
}

PredictionSet load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_file(path), path.string());
}

std::string serialize_predictions(const PredictionSet& predictions) {
  std::string out = "sample_id,predicted_label\n";
  for (const auto& [id, label] : predictions.entries()) out += id + "," + label + "\n";
  return out;
}

void save_predictions(const PredictionSet& predictions, const std::filesystem::path& path) {
  write_file(path, serialize_predictions(predictions));
}

RecallMatrix::RecallMatrix(LabelSet labels, GroupSet groups,
                           std::vector<std::vector<std::size_t>> correct,
                           std::vector<std::vector<std::size_t>> support)
    : labels_(std::move(labels)),
      groups_(std::move(groups)),
      correct_(std::move(correct)),
      support_(std::move(support)) {
  if (correct_.size() != labels_.size() || support_.size() != labels_.size()) {
    throw EvaluationError("recall matrix shape does not match label set");
  }
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    if (correct_[l].size() != groups_.size() || support_[l].size() != groups_.size()) {
      throw EvaluationError("recall matrix shape does not match group set");
    }
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (correct_[l][g] > support_[l][g]) throw EvaluationError("correct count exceeds support");
    }
  }
}

std::optional<double> RecallMatrix::recall(std::size_t label, std::size_t group) const {
  const std::size_t s = support_[label][group];
  if (s == 0) return std::nullopt;
  return static_cast<double>(correct_[label][group]) / static_cast<double>(s);
}

Confusion tally(const Manifest& manifest, const PredictionSet& predictions) {
  const auto& labels = manifest.labels();
  const auto& groups = manifest.groups();
  Confusion c{labels, groups,
              std::vector<std::vector<std::vector<std::size_t>>>(
                  labels.size(), std::vector<std::vector<std::size_t>>(
                                     groups.size(), std::vector<std::size_t>(labels.size())))};

  std::vector<std::string> unknown;
  std::vector<std::string> not_test;
  std::vector<std::string> bad_label;
  for (const auto& [id, pred] : predictions.entries()) {
    const SampleRecord* r = manifest.find(id);
    if (!r) {
      unknown.push_back(id);
    } else if (r->split != Split::test) {
      not_test.push_back(id);
    } else if (!labels.contains(pred)) {
      bad_label.push_back(id + "=" + pred);
    }
  }
  if (!unknown.empty()) throw EvaluationError("predictions for unknown sample ids:" + list_ids(unknown));
  if (!not_test.empty()) {
    throw EvaluationError("predictions for samples outside the test split:" + list_ids(not_test));
  }
  if (!bad_label.empty()) {
    throw EvaluationError("predicted labels outside the label set:" + list_ids(bad_label));
  }

  std::vector<std::string> missing;
  for (const auto& r : manifest.records()) {
    if (r.split != Split::test) continue;
    auto it = predictions.entries().find(r.sample_id);
    if (it == predictions.entries().end()) {
      missing.push_back(r.sample_id);
      continue;
    }
    const std::size_t t = *labels.index_of(r.label);
    const std::size_t g = *groups.index_of(r.group);
    const std::size_t p = *labels.index_of(it->second);
    ++c.counts[t][g][p];
  }
  if (!missing.empty()) throw EvaluationError("missing predictions for test samples:" + list_ids(missing));
  return c;
}

RecallMatrix evaluate(const Manifest& manifest, const PredictionSet& predictions) {
  const Confusion c = tally(manifest, predictions);
  const std::size_t nl = c.labels.size();
  const std::size_t ng = c.groups.size();
  std::vector<std::vector<std::size_t>> correct(nl, std::vector<std::size_t>(ng));
  std::vector<std::vector<std::size_t>> support(nl, std::vector<std::size_t>(ng));
  for (std::size_t l = 0; l < nl; ++l) {
    for (std::size_t g = 0; g < ng; ++g) {
      correct[l][g] = c.counts[l][g][l];
      support[l][g] = std::accumulate(c.counts[l][g].begin(), c.counts[l][g].end(), std::size_t{0});
    }
  }
  return RecallMatrix(c.labels, c.groups, std::move(correct), std::move(support));
}

DiffReport diff(const RecallMatrix& matrix, std::string_view target_group,
                std::string_view reference_group) {
  const std::size_t t = group_index(matrix.groups(), target_group);
  const std::size_t r = group_index(matrix.groups(), reference_group);
  DiffReport out{matrix.labels(), std::string(target_group), std::string(reference_group), {}};
  for (std::size_t l = 0; l < matrix.labels().size(); ++l) {
    const auto a = matrix.recall(l, t);
    const auto b = matrix.recall(l, r);
    out.diff.push_back(a && b ? std::optional<double>(*a - *b) : std::nullopt);
  }
  return out;
}

std::optional<Stat> summarize(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  Stat s{mean, std::nullopt, values.size()};
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

AggregateReport aggregate(std::span<const RecallMatrix> matrices, std::string_view target_group,
                          std::string_view reference_group, std::span<const double> train_sizes) {
  if (matrices.empty()) throw EvaluationError("aggregate needs at least one recall matrix");
  const auto& labels = matrices.front().labels();
  const auto& groups = matrices.front().groups();
  for (const auto& m : matrices) {
    if (m.labels() != labels || m.groups() != groups) {
      throw EvaluationError("inconsistent label or group sets across runs");
    }
  }
  group_index(groups, target_group);
  group_index(groups, reference_group);

  AggregateReport out{labels, groups, std::string(target_group), std::string(reference_group),
                      std::vector<std::vector<std::optional<Stat>>>(
                          labels.size(), std::vector<std::optional<Stat>>(groups.size())),
                      std::vector<std::optional<Stat>>(labels.size()), std::nullopt};

  std::vector<DiffReport> diffs;
  for (const auto& m : matrices) diffs.push_back(diff(m, target_group, reference_group));

  for (std::size_t l = 0; l < labels.size(); ++l) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::vector<double> v;
      for (const auto& m : matrices) {
        if (auto r = m.recall(l, g)) v.push_back(*r);
      }
      out.recall[l][g] = summarize(v);
    }
    std::vector<double> d;
    for (const auto& dr : diffs) {
      if (dr.diff[l]) d.push_back(*dr.diff[l]);
    }
    out.diff[l] = summarize(d);
  }
  if (!train_sizes.empty()) out.train_size = summarize(train_sizes);
  return out;
}

std::string format_percent(const std::optional<double>& fraction) {
  return fraction ? format_fixed2(100.0 * *fraction) : std::string(kUndefinedCell);
}

std::vector<std::filesystem::path> emit_reports(const std::map<BiasLevel, AggregateReport>& aggregates,
                                                const std::filesystem::path& out_dir,
                                                std::string_view stem) {
  if (aggregates.empty()) throw EvaluationError("emit_reports needs at least one aggregate");
  const AggregateReport& first = aggregates.begin()->second;
  for (const auto& [level, agg] : aggregates) {
    if (agg.labels != first.labels || agg.groups != first.groups ||
        agg.target_group != first.target_group || agg.reference_group != first.reference_group) {
      throw EvaluationError("aggregates disagree on labels, groups or compared groups");
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string());

  const std::string note = "# std is the sample standard deviation (n-1) across runs; values in percent";
  const std::string s(stem);

  std::string diff_csv = "# recall difference " + first.target_group + " - " + first.reference_group +
                         "\n" + note + "\nbias_level,label,mean_diff_pct,std_diff_pct,n_runs\n";
  std::string recall_csv = note + "\nbias_level,label,group,mean_recall_pct,std_recall_pct,n_runs\n";
  for (const auto& [level, agg] : aggregates) {
    for (std::size_t l = 0; l < agg.labels.size(); ++l) {
      const auto& d = agg.diff[l];
      diff_csv += level.str() + "," + agg.labels[l] + "," + stat_mean(d) + "," + stat_std(d) + "," +
                  std::to_string(d ? d->n : 0) + "\n";
      for (std::size_t g = 0; g < agg.groups.size(); ++g) {
        const auto& r = agg.recall[l][g];
        recall_csv += level.str() + "," + agg.labels[l] + "," + agg.groups[g] + "," + stat_mean(r) +
                      "," + stat_std(r) + "," + std::to_string(r ? r->n : 0) + "\n";
      }
    }
  }

  // Aligned table: two leading columns (label, row kind), one per bias level.
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"", ""};
  for (const auto& [level, agg] : aggregates) head.push_back(first.target_group + " " + level.str());
  rows.push_back(head);
  const bool any_size = std::any_of(aggregates.begin(), aggregates.end(),
                                    [](const auto& kv) { return kv.second.train_size.has_value(); });
  if (any_size) {
    std::vector<std::string> size_row{"", "Size"};
    for (const auto& [level, agg] : aggregates) {
      size_row.push_back(agg.train_size ? format_fixed2(agg.train_size->mean)
                                        : std::string(kUndefinedCell));
    }
    rows.push_back(size_row);
  }
  std::vector<std::size_t> separators;
  for (std::size_t l = 0; l < first.labels.size(); ++l) {
    separators.push_back(rows.size());
    for (std::size_t g = 0; g < first.groups.size(); ++g) {
      std::vector<std::string> row{g == 0 ? first.labels[l] : "", first.groups[g]};
      for (const auto& [level, agg] : aggregates) row.push_back(stat_cell(agg.recall[l][g]));
      rows.push_back(std::move(row));
    }
    std::vector<std::string> row{"", "Diff"};
    for (const auto& [level, agg] : aggregates) row.push_back(stat_cell(agg.diff[l]));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> widths(head.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], display_width(row[i]));
  }
  std::size_t total_width = 0;
  for (std::size_t w : widths) total_width += w + 2;
  std::string table = "Recall by label and group (percent, mean ± sample std (n-1) over runs)\n";
  table += "Diff = " + first.target_group + " - " + first.reference_group + "; " +
           std::string(kUndefinedCell) + " marks cells without test support\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (std::find(separators.begin(), separators.end(), r) != separators.end()) {
      table += std::string(total_width - 2, '-') + "\n";
    }
    std::string line;
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i) line += "  ";
      line += pad(rows[r][i], widths[i], i >= 2);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    table += line + "\n";
  }

  const std::vector<std::filesystem::path> paths{out_dir / (s + "_diff.csv"),
                                                 out_dir / (s + "_recall.csv"),
                                                 out_dir / (s + "_table.txt")};
  write_file(paths[0], diff_csv);
  write_file(paths[1], recall_csv);
  write_file(paths[2], table);
  return paths;
}

std::vector<DiffRow> read_diff_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  constexpr std::string_view cols[] = {"bias_level", "label", "mean_diff_pct", "std_diff_pct", "n_runs"};
  require_columns(t, cols, path);
  std::vector<DiffRow> out;
  for (const auto& row : t.rows) {
    const auto& f = row.fields;
    out.push_back({BiasLevel::parse(f[0]), f[1], parse_optional(f[2]), parse_optional(f[3]),
                   static_cast<std::size_t>(parse_u64(f[4]))});
  }
  return out;
}

std::vector<RecallRow> read_recall_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  constexpr std::string_view cols[] = {"bias_level", "label", "group", "mean_recall_pct",
                                       "std_recall_pct", "n_runs"};
  require_columns(t, cols, path);
  std::vector<RecallRow> out;
  for (const auto& row : t.rows) {
    const auto& f = row.fields;
    out.push_back({BiasLevel::parse(f[0]), f[1], f[2], parse_optional(f[3]), parse_optional(f[4]),
                   static_cast<std::size_t>(parse_u64(f[5]))});
  }
  return out;
}

}  // namespace stereolab
