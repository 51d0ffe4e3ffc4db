#include "stereolab/profiler.hpp"

#include <algorithm>
#include <numeric>

#include "stereolab/csv.hpp"

namespace stereolab {

namespace {

constexpr std::string_view kUndefined = "—";

std::string percent(std::size_t count, std::size_t support) {
  if (support == 0) return std::string(kUndefined);
  return format_fixed2(100.0 * static_cast<double>(count) / static_cast<double>(support));
}

// Pads by code points so the multi-byte dash aligns with ASCII cells.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](unsigned char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad_left(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : std::string(width - w, ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

}  // namespace

DemographicProfile::DemographicProfile(LabelSet labels, GroupSet groups, Split split,
                                       std::vector<std::vector<std::size_t>> counts)
    : labels_(std::move(labels)), groups_(std::move(groups)), split_(split), counts_(std::move(counts)) {
  if (counts_.size() != labels_.size()) throw ManifestError("profile: label count mismatch");
  for (const auto& row : counts_) {
    if (row.size() != groups_.size()) throw ManifestError("profile: group count mismatch");
  }
}

std::size_t DemographicProfile::support(std::size_t label) const {
  return std::accumulate(counts_[label].begin(), counts_[label].end(), std::size_t{0});
}

std::size_t DemographicProfile::total() const {
  std::size_t t = 0;
  for (std::size_t l = 0; l < labels_.size(); ++l) t += support(l);
  return t;
}

std::size_t DemographicProfile::group_total(std::size_t group) const {
  std::size_t t = 0;
  for (const auto& row : counts_) t += row[group];
  return t;
}

std::optional<Ratio> DemographicProfile::imbalance_ratio(std::size_t label, std::size_t group) const {
  const std::size_t s = support(label);
  if (s == 0) return std::nullopt;
  return Ratio{counts_[label][group], s};
}

std::optional<double> DemographicProfile::imbalance(std::size_t label, std::size_t group) const {
  auto r = imbalance_ratio(label, group);
  if (!r) return std::nullopt;
  return r->value();
}

double DemographicProfile::global_proportion(std::size_t group) const {
  const std::size_t t = total();
  return t == 0 ? 0.0 : static_cast<double>(group_total(group)) / static_cast<double>(t);
}

MinCell DemographicProfile::min_cell() const {
  std::optional<MinCell> best;
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      auto r = imbalance_ratio(l, g);
      if (!r) continue;
      if (!best || *r < best->imbalance) best = MinCell{l, g, *r};
    }
  }
  if (!best) throw ManifestError("profile has no labelled records");
  return *best;
}

std::vector<std::string> DemographicProfile::zero_support_labels() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    if (support(l) == 0) out.push_back(labels_[l]);
  }
  return out;
}

DemographicProfile profile(const Manifest& manifest, Split split) {
  if (manifest.split_size(split) == 0) {
    throw ManifestError("cannot profile empty " + std::string(to_string(split)) + " split");
  }
  std::vector<std::vector<std::size_t>> counts(manifest.labels().size(),
                                               std::vector<std::size_t>(manifest.groups().size()));
  for (std::size_t l = 0; l < manifest.labels().size(); ++l) {
    for (std::size_t g = 0; g < manifest.groups().size(); ++g) {
      counts[l][g] = manifest.cell_count(l, g, split);
    }
  }
  return DemographicProfile(manifest.labels(), manifest.groups(), split, std::move(counts));
}

ProfileReport profile_report(const DemographicProfile& p) {
  const auto& labels = p.labels();
  const auto& groups = p.groups();

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"label", "support"};
  for (const auto& g : groups) {
    header.push_back(g + "_count");
    header.push_back(g + "_pct");
  }
  table.push_back(header);
  for (std::size_t l = 0; l < labels.size(); ++l) {
    std::vector<std::string> row{labels[l], std::to_string(p.support(l))};
    for (std::size_t g = 0; g < groups.size(); ++g) {
      row.push_back(std::to_string(p.count(l, g)));
      row.push_back(percent(p.count(l, g), p.support(l)));
    }
    table.push_back(std::move(row));
  }
  std::vector<std::string> global{std::string(kGlobalRow), std::to_string(p.total())};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    global.push_back(std::to_string(p.group_total(g)));
    global.push_back(percent(p.group_total(g), p.total()));
  }
  table.push_back(std::move(global));

  ProfileReport report;
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) report.csv += ',';
      report.csv += row[i];
    }
    report.csv += '\n';
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], display_width(row[i]));
  }
  report.text = "Demographic profile (" + std::string(to_string(p.split())) + " split)\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < table[r].size(); ++i) {
      if (i) line += "  ";
      line += i == 0 ? pad_right(table[r][i], widths[i]) : pad_left(table[r][i], widths[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    report.text += line + '\n';
  }
  const auto zero = p.zero_support_labels();
  if (!zero.empty()) {
    report.text += "zero-support labels (imbalance undefined):";
    for (const auto& z : zero) report.text += " " + z;
    report.text += '\n';
  }
  if (p.total() > 0) {
    const MinCell m = p.min_cell();
    report.text += "most underrepresented cell: " + labels[m.label] + "/" + groups[m.group] + " at " +
                   percent(m.imbalance.count, m.imbalance.support) + "%\n";
  }
  return report;
}

}  // namespace stereolab
