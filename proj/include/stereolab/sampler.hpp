#pragma once

// Derivative training sets built by per-cell sampling without replacement.
//
// Every sampler first computes a SamplePlan (target count per train cell) and
// then materializes it: each cell, in canonical sample_id order, is shuffled
// with its own stream seeded from (seed, label, group) and the plan's prefix
// is kept. The test split always passes through unchanged.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stereolab/manifest.hpp"

namespace stereolab {

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Stratified {
  double ratio = 1.0;
};
struct Balanced {};
struct Biased {
  std::string target_label;
  std::string target_group;
  double bias = 0.0;  // in [-1, 1]
};

struct SubsetSpec {
  std::variant<Stratified, Balanced, Biased> variant;
  std::uint64_t seed = 0;
};

struct SamplePlan {
  std::vector<std::vector<std::size_t>> keep;  // [label][group] target train count
  std::vector<std::string> provenance;         // one line per applied ratio

  friend bool operator==(const SamplePlan&, const SamplePlan&) = default;
};

/// floor(x + 1/2), tolerant to binary representation error of decimal
/// inputs: 0.35 * 10 rounds to 4, as it would in exact arithmetic.
std::size_t round_half_up(double x);

/// round_half_up(ratio * n) clamped to [0, n].
std::size_t scaled_count(std::size_t n, double ratio);

SamplePlan plan(const Manifest& manifest, const SubsetSpec& spec);

/// Materializes a plan produced for `manifest`.
Manifest execute(const Manifest& manifest, const SamplePlan& plan, std::uint64_t seed);

Manifest stratified_subsample(const Manifest& manifest, double ratio, std::uint64_t seed);
Manifest balanced_subsample(const Manifest& manifest, std::uint64_t seed);
Manifest biased_subsample(const Manifest& balanced, std::string_view target_label,
                          std::string_view target_group, double bias, std::uint64_t seed);
Manifest subsample(const Manifest& manifest, const SubsetSpec& spec);

/// True when, for every label, train cell counts differ by at most one.
bool is_balanced(const Manifest& manifest);

/// Parses "stratified:r=0.5", "balanced" or
/// "biased:label=angry,group=female,b=-0.8".
SubsetSpec parse_subset_spec(std::string_view text, std::uint64_t seed);

/// Human-readable plan with per-cell current and target counts.
std::string describe_plan(const Manifest& manifest, const SamplePlan& plan);

}  // namespace stereolab
