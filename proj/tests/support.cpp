#include "support.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef STEREOLAB_FIXTURE_DIR
#error "STEREOLAB_FIXTURE_DIR must be defined"
#endif

namespace stereolab::testing {

namespace fs = std::filesystem;

namespace {

std::string numbered(const std::string& prefix, std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return prefix + buf;
}

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

fs::path fixture_dir() { return fs::path(STEREOLAB_FIXTURE_DIR); }

Manifest expand(const CellCounts& cells, std::size_t test_per_cell) {
  std::vector<SampleRecord> records;
  for (std::size_t l = 0; l < cells.labels.size(); ++l) {
    for (std::size_t g = 0; g < cells.groups.size(); ++g) {
      const std::string stem = cells.labels[l] + "-" + cells.groups[g] + "-";
      for (std::size_t i = 0; i < cells.counts[l][g]; ++i) {
        records.push_back({numbered(stem, i), "img/" + numbered(stem, i) + ".png", cells.labels[l],
                           cells.groups[g], Split::train, {}});
      }
      for (std::size_t i = 0; i < test_per_cell; ++i) {
        records.push_back({"t-" + numbered(stem, i), "", cells.labels[l], cells.groups[g], Split::test, {}});
      }
    }
  }
  return Manifest(LabelSet(cells.labels), GroupSet(cells.groups), std::move(records));
}

CellCounts ferplus_cells() {
  std::ifstream in(fixture_dir() / "ferplus_train_cells.csv");
  if (!in) throw std::runtime_error("missing ferplus fixture");
  CellCounts out;
  std::map<std::pair<std::string, std::string>, std::size_t> raw;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string label, group, count;
    std::getline(ss, label, ',');
    std::getline(ss, group, ',');
    std::getline(ss, count, ',');
    if (std::find(out.labels.begin(), out.labels.end(), label) == out.labels.end()) out.labels.push_back(label);
    if (std::find(out.groups.begin(), out.groups.end(), group) == out.groups.end()) out.groups.push_back(group);
    raw[{label, group}] = std::stoul(count);
  }
  out.counts.assign(out.labels.size(), std::vector<std::size_t>(out.groups.size()));
  for (std::size_t l = 0; l < out.labels.size(); ++l) {
    for (std::size_t g = 0; g < out.groups.size(); ++g) out.counts[l][g] = raw.at({out.labels[l], out.groups[g]});
  }
  return out;
}

namespace {

Manifest build_random(std::mt19937_64& rng, const std::vector<std::vector<std::size_t>>& train,
                      const std::vector<std::vector<std::size_t>>& test) {
  const std::size_t nl = train.size();
  const std::size_t ng = train.front().size();
  std::vector<std::string> labels;
  std::vector<std::string> groups;
  for (std::size_t l = 0; l < nl; ++l) labels.push_back("L" + std::to_string(l));
  for (std::size_t g = 0; g < ng; ++g) groups.push_back("G" + std::to_string(g));
  std::shuffle(labels.begin(), labels.end(), rng);

  // Ids are a random permutation so canonical order is unrelated to generation order.
  std::size_t total = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    for (std::size_t g = 0; g < ng; ++g) total += train[l][g] + test[l][g];
  }
  std::vector<std::size_t> ids(total);
  for (std::size_t i = 0; i < total; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);

  std::vector<SampleRecord> records;
  std::size_t next = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    for (std::size_t g = 0; g < ng; ++g) {
      for (int s = 0; s < 2; ++s) {
        const std::size_t n = s == 0 ? train[l][g] : test[l][g];
        for (std::size_t i = 0; i < n; ++i) {
          records.push_back({numbered("r", ids[next++]), "", labels[l], groups[g],
                             s == 0 ? Split::train : Split::test, {}});
        }
      }
    }
  }
  std::shuffle(records.begin(), records.end(), rng);
  return Manifest(LabelSet(labels), GroupSet(groups), std::move(records));
}

}  // namespace

Manifest random_manifest(std::mt19937_64& rng, std::size_t max_labels, std::size_t max_groups,
                         std::size_t min_cell, std::size_t max_cell, std::size_t max_test) {
  const std::size_t nl = draw(rng, 1, max_labels);
  const std::size_t ng = draw(rng, 2, max_groups);
  std::vector<std::vector<std::size_t>> train(nl, std::vector<std::size_t>(ng));
  std::vector<std::vector<std::size_t>> test(nl, std::vector<std::size_t>(ng));
  for (std::size_t l = 0; l < nl; ++l) {
    for (std::size_t g = 0; g < ng; ++g) {
      train[l][g] = draw(rng, min_cell, max_cell);
      test[l][g] = max_test ? draw(rng, 0, max_test) : 0;
    }
  }
  return build_random(rng, train, test);
}

Manifest random_balanced_manifest(std::mt19937_64& rng, std::size_t max_labels, std::size_t max_groups,
                                  std::size_t min_cell, std::size_t max_cell) {
  const std::size_t nl = draw(rng, 1, max_labels);
  const std::size_t ng = draw(rng, 2, max_groups);
  std::vector<std::vector<std::size_t>> train(nl, std::vector<std::size_t>(ng));
  std::vector<std::vector<std::size_t>> test(nl, std::vector<std::size_t>(ng, 0));
  for (std::size_t l = 0; l < nl; ++l) {
    const std::size_t base = draw(rng, min_cell, max_cell);
    for (std::size_t g = 0; g < ng; ++g) {
      // One label in three carries a +1 rounding residue on some cells.
      const bool residue = l % 3 == 2 && base < max_cell && draw(rng, 0, 1) == 1;
      train[l][g] = base + (residue ? 1 : 0);
    }
  }
  return build_random(rng, train, test);
}

std::map<std::pair<std::string, std::string>, std::size_t> brute_counts(const Manifest& m, Split split) {
  std::map<std::pair<std::string, std::string>, std::size_t> out;
  for (const auto& l : m.labels()) {
    for (const auto& g : m.groups()) out[{l, g}] = 0;
  }
  for (const auto& r : m.records()) {
    if (r.split == split) ++out[{r.label, r.group}];
  }
  return out;
}

std::map<std::pair<std::string, std::string>, double> brute_imbalance(const Manifest& m) {
  const auto counts = brute_counts(m, Split::train);
  std::map<std::string, std::size_t> support;
  for (const auto& [k, v] : counts) support[k.first] += v;
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [k, v] : counts) {
    if (support[k.first] > 0) out[k] = static_cast<double>(v) / static_cast<double>(support[k.first]);
  }
  return out;
}

std::map<std::pair<std::string, std::string>, std::size_t> brute_balanced_targets(const Manifest& m) {
  const auto counts = brute_counts(m, Split::train);
  std::map<std::string, std::size_t> support;
  for (const auto& [k, v] : counts) support[k.first] += v;

  std::size_t min_c = 0;
  std::size_t min_s = 0;
  for (const auto& [k, v] : counts) {
    const std::size_t s = support[k.first];
    if (s == 0) continue;
    if (min_s == 0 || v * min_s < min_c * s) {
      min_c = v;
      min_s = s;
    }
  }
  std::map<std::pair<std::string, std::string>, std::size_t> out;
  for (const auto& [k, v] : counts) {
    const std::size_t s = support[k.first];
    // Minimize |k * min_s - s * min_c|; on an exact tie the larger k wins.
    std::size_t best = 0;
    long long best_err = -1;
    for (std::size_t cand = 0; cand <= s; ++cand) {
      const long long err = std::llabs(static_cast<long long>(cand * min_s) - static_cast<long long>(s * min_c));
      if (best_err < 0 || err <= best_err) {
        best = cand;
        best_err = err;
      }
    }
    out[k] = std::min(best, v);
  }
  return out;
}

std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> brute_recall(
    const Manifest& m, const PredictionSet& p) {
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> out;
  for (const auto& l : m.labels()) {
    for (const auto& g : m.groups()) out[{l, g}] = {0, 0};
  }
  for (const auto& [id, pred] : p.entries()) {
    for (const auto& r : m.records()) {
      if (r.sample_id != id) continue;
      auto& cell = out[{r.label, r.group}];
      ++cell.second;
      if (pred == r.label) ++cell.first;
    }
  }
  return out;
}

TempDir::TempDir(const std::string& prefix) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() / (prefix + "-" + std::to_string(rd()));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace stereolab::testing
