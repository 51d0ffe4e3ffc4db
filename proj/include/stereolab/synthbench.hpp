#pragma once

// Synthetic group-conditioned Gaussian data and a nearest-centroid
// classifier, so that training-mix bias can be pushed end to end through
// recall evaluation without an ML stack.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stereolab/manifest.hpp"
#include "stereolab/metrics.hpp"

namespace stereolab {

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthConfig {
  std::size_t n_labels = 7;
  std::size_t n_groups = 2;
  std::size_t dim = 16;
  std::size_t samples_per_cell = 200;
  std::size_t test_per_cell = 200;
  double class_sep = 4.0;
  double group_shift = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 7;
};

/// Throws SynthError when the configuration is invalid.
void validate(const SynthConfig& config);

/// Geometry of a synthetic dataset.
///
/// Label prototypes are scaled one-hot corners, class_sep / sqrt(2) along
/// axis l, so every pair sits exactly class_sep apart. Groups are displaced
/// along one seeded random unit direction u: group k sits at
/// group_shift * c_k * u with c_k evenly spaced from +1 to -1 (so +u and -u
/// for two groups).
struct SynthLayout {
  LabelSet labels;
  GroupSet groups;
  std::vector<std::vector<double>> prototypes;  // [label][dim]
  std::vector<double> direction;                // unit vector u
  std::vector<double> coefficients;             // c_k per group
  std::vector<double> center(std::size_t label, std::size_t group, double group_shift) const;
};

SynthLayout layout(const SynthConfig& config);

/// Train split: samples_per_cell per (label, group); test split:
/// test_per_cell per cell, so evaluation is always cell-balanced.
Manifest generate(const SynthConfig& config);

struct CentroidModel {
  LabelSet labels;
  std::size_t dim = 0;
  std::vector<std::optional<std::vector<double>>> centroids;  // [label]; empty when untrained
  std::vector<std::string> missing;                           // labels without training data
  std::string trained_on;                                     // manifest fingerprint
};

/// Centroid of each label over the train split, groups pooled. Labels with
/// no training records are omitted and listed in `missing`.
CentroidModel fit_centroid(const Manifest& train);

/// Index of the closest centroid; ties resolve to the earlier label.
std::size_t nearest_label(const CentroidModel& model, std::span<const double> point);

/// Predicts every test-split record of `manifest`.
PredictionSet predict(const CentroidModel& model, const Manifest& manifest);

void save_model(const CentroidModel& model, const std::filesystem::path& path);
CentroidModel load_model(const std::filesystem::path& path);

}  // namespace stereolab
