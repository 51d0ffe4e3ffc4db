#include "stereolab/synthbench.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"
#include "stereolab/csv.hpp"
#include "stereolab/rng.hpp"

namespace stereolab {

namespace {

constexpr const char* kFerLabels[] = {"angry", "disgust", "fear", "happy", "sad", "surprise", "neutral"};

std::vector<std::string> label_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(i < std::size(kFerLabels) ? kFerLabels[i] : "label" + std::to_string(i));
  }
  return out;
}

std::vector<std::string> group_names(std::size_t n) {
  if (n == 2) return {"female", "male"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("group" + std::to_string(i));
  return out;
}

std::string sample_id(Split split, const std::string& label, const std::string& group, std::size_t i) {
  char num[24];
  std::snprintf(num, sizeof num, "%06zu", i);
  return std::string(to_string(split)) + "-" + label + "-" + group + "-" + num;
}

}  // namespace

void validate(const SynthConfig& c) {
  if (c.n_labels < 1) throw SynthError("synth: need at least one label");
  if (c.n_groups < 2) throw SynthError("synth: need at least two groups");
  if (c.samples_per_cell < 1) throw SynthError("synth: samples_per_cell must be >= 1");
  if (c.test_per_cell < 1) throw SynthError("synth: test_per_cell must be >= 1");
  if (!(c.class_sep > 0.0)) throw SynthError("synth: class_sep must be > 0");
  if (!(c.group_shift >= 0.0)) throw SynthError("synth: group_shift must be >= 0");
  if (!(c.group_shift < c.class_sep)) throw SynthError("synth: group_shift must be < class_sep");
  if (!(c.noise_sigma > 0.0)) throw SynthError("synth: noise_sigma must be > 0");
  if (c.dim < c.n_labels) {
    throw SynthError("synth: dim " + std::to_string(c.dim) + " is too small to place " +
                     std::to_string(c.n_labels) + " label prototypes (need dim >= labels)");
  }
}

std::vector<double> SynthLayout::center(std::size_t label, std::size_t group, double group_shift) const {
  std::vector<double> out = prototypes[label];
  for (std::size_t d = 0; d < out.size(); ++d) out[d] += group_shift * coefficients[group] * direction[d];
  return out;
}

SynthLayout layout(const SynthConfig& c) {
  validate(c);
  SynthLayout out{LabelSet(label_names(c.n_labels)), GroupSet(group_names(c.n_groups)), {}, {}, {}};
  const double corner = c.class_sep / std::sqrt(2.0);
  for (std::size_t l = 0; l < c.n_labels; ++l) {
    std::vector<double> p(c.dim, 0.0);
    p[l] = corner;
    out.prototypes.push_back(std::move(p));
  }
  Engine engine(SeedHasher(c.seed).add("group-direction").value());
  double norm = 0.0;
  do {
    out.direction.assign(c.dim, 0.0);
    norm = 0.0;
    for (auto& v : out.direction) {
      v = standard_normal(engine);
      norm += v * v;
    }
    norm = std::sqrt(norm);
  } while (norm == 0.0);
  for (auto& v : out.direction) v /= norm;
  for (std::size_t g = 0; g < c.n_groups; ++g) {
    out.coefficients.push_back(1.0 - 2.0 * static_cast<double>(g) / static_cast<double>(c.n_groups - 1));
  }
  return out;
}

Manifest generate(const SynthConfig& c) {
  const SynthLayout lay = layout(c);
  std::vector<SampleRecord> records;
  records.reserve(c.n_labels * c.n_groups * (c.samples_per_cell + c.test_per_cell));
  for (std::size_t l = 0; l < c.n_labels; ++l) {
    for (std::size_t g = 0; g < c.n_groups; ++g) {
      const auto center = lay.center(l, g, c.group_shift);
      for (Split split : {Split::train, Split::test}) {
        const std::size_t n = split == Split::train ? c.samples_per_cell : c.test_per_cell;
        Engine engine(SeedHasher(c.seed)
                          .add("cell")
                          .add(lay.labels[l])
                          .add(lay.groups[g])
                          .add(to_string(split))
                          .value());
        for (std::size_t i = 0; i < n; ++i) {
          SampleRecord r;
          r.sample_id = sample_id(split, lay.labels[l], lay.groups[g], i);
          r.source_ref = "synth";
          r.label = lay.labels[l];
          r.group = lay.groups[g];
          r.split = split;
          r.features.resize(c.dim);
          for (std::size_t d = 0; d < c.dim; ++d) {
            r.features[d] = center[d] + c.noise_sigma * standard_normal(engine);
          }
          records.push_back(std::move(r));
        }
      }
    }
  }

  std::vector<std::string> comments;
  comments.push_back("synth: labels=" + std::to_string(c.n_labels) + " groups=" +
                     std::to_string(c.n_groups) + " dim=" + std::to_string(c.dim) + " per_cell=" +
                     std::to_string(c.samples_per_cell) + " test_per_cell=" +
                     std::to_string(c.test_per_cell) + " class_sep=" + format_real(c.class_sep) +
                     " group_shift=" + format_real(c.group_shift) + " sigma=" +
                     format_real(c.noise_sigma) + " seed=" + std::to_string(c.seed));
  std::string dir = "synth: group_direction=";
  for (std::size_t d = 0; d < lay.direction.size(); ++d) {
    if (d) dir += ' ';
    dir += format_real(lay.direction[d]);
  }
  comments.push_back(dir);
  std::string coef = "synth: group_offset=group_shift*c*direction with c:";
  for (std::size_t g = 0; g < lay.coefficients.size(); ++g) {
    coef += " " + lay.groups[g] + "=" + format_real(lay.coefficients[g]);
  }
  comments.push_back(coef);
  return Manifest(lay.labels, lay.groups, std::move(records), std::move(comments));
}

CentroidModel fit_centroid(const Manifest& train) {
  if (train.feature_dim() == 0) throw SynthError("centroid training needs feature vectors");
  const auto& labels = train.labels();
  CentroidModel model{labels, train.feature_dim(), {}, {}, fingerprint(train)};
  const auto records = train.records();
  for (std::size_t l = 0; l < labels.size(); ++l) {
    std::vector<double> sum(model.dim, 0.0);
    std::size_t n = 0;
    for (std::size_t g = 0; g < train.groups().size(); ++g) {
      for (std::size_t i : train.cell_indices(l, g, Split::train)) {
        const auto& f = records[i].features;
        for (std::size_t d = 0; d < model.dim; ++d) sum[d] += f[d];
        ++n;
      }
    }
    if (n == 0) {
      model.centroids.emplace_back();
      model.missing.push_back(labels[l]);
      continue;
    }
    for (auto& v : sum) v /= static_cast<double>(n);
    model.centroids.emplace_back(std::move(sum));
  }
  if (model.missing.size() == labels.size()) throw SynthError("centroid training: no training records");
  return model;
}

std::size_t nearest_label(const CentroidModel& model, std::span<const double> point) {
  if (point.size() != model.dim) {
    throw SynthError("feature dimension " + std::to_string(point.size()) + " does not match model dimension " +
                     std::to_string(model.dim));
  }
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t l = 0; l < model.centroids.size(); ++l) {
    if (!model.centroids[l]) continue;
    const auto& c = *model.centroids[l];
    double dist = 0.0;
    for (std::size_t d = 0; d < model.dim; ++d) {
      const double diff = point[d] - c[d];
      dist += diff * diff;
    }
    if (!found || dist < best_dist) {
      best = l;
      best_dist = dist;
      found = true;
    }
  }
  if (!found) throw SynthError("model has no centroids");
  return best;
}

PredictionSet predict(const CentroidModel& model, const Manifest& manifest) {
  if (manifest.labels() != model.labels) throw SynthError("manifest label set differs from model");
  if (manifest.feature_dim() != model.dim) {
    throw SynthError("manifest feature dimension " + std::to_string(manifest.feature_dim()) +
                     " does not match model dimension " + std::to_string(model.dim));
  }
  PredictionSet out;
  for (const auto& r : manifest.records()) {
    if (r.split != Split::test) continue;
    out.add(r.sample_id, model.labels[nearest_label(model, r.features)]);
  }
  return out;
}

void save_model(const CentroidModel& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["labels"] = std::vector<std::string>(model.labels.begin(), model.labels.end());
  j["dim"] = model.dim;
  j["trained_on"] = model.trained_on;
  j["missing"] = model.missing;
  nlohmann::json cents = nlohmann::json::array();
  for (const auto& c : model.centroids) cents.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
  j["centroids"] = cents;
  write_file(path, j.dump(2) + "\n");
}

CentroidModel load_model(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    CentroidModel m;
    m.labels = LabelSet(j.at("labels").get<std::vector<std::string>>());
    m.dim = j.at("dim").get<std::size_t>();
    m.trained_on = j.at("trained_on").get<std::string>();
    m.missing = j.at("missing").get<std::vector<std::string>>();
    for (const auto& c : j.at("centroids")) {
      if (c.is_null()) {
        m.centroids.emplace_back();
      } else {
        auto v = c.get<std::vector<double>>();
        if (v.size() != m.dim) throw SynthError("centroid dimension mismatch");
        m.centroids.emplace_back(std::move(v));
      }
    }
    if (m.centroids.size() != m.labels.size()) throw SynthError("centroid count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace stereolab
