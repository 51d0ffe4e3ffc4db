#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "stereolab/sampler.hpp"
#include "stereolab/synthbench.hpp"
#include "support.hpp"

namespace stereolab {
namespace {

using testing::TempDir;

SynthConfig small(std::uint64_t seed = 1) {
  SynthConfig c;
  c.n_labels = 3;
  c.dim = 4;
  c.samples_per_cell = 20;
  c.test_per_cell = 10;
  c.seed = seed;
  return c;
}

TEST(Synth, DefaultShape) {
  const Manifest m = generate(SynthConfig{});
  EXPECT_EQ(m.labels().size(), 7u);
  EXPECT_EQ(m.labels()[0], "angry");
  EXPECT_EQ(m.groups(), GroupSet({"female", "male"}));
  EXPECT_EQ(m.split_size(Split::train), 7u * 2 * 200);
  EXPECT_EQ(m.split_size(Split::test), 7u * 2 * 200);
  EXPECT_EQ(m.feature_dim(), 16u);
  for (std::size_t l = 0; l < 7; ++l) {
    for (std::size_t g = 0; g < 2; ++g) EXPECT_EQ(m.cell_count(l, g, Split::train), 200u);
  }
}

TEST(Synth, SameSeedSameData) {
  EXPECT_EQ(generate(small(3)), generate(small(3)));
  EXPECT_NE(generate(small(3)), generate(small(4)));
}

TEST(Synth, LayoutGeometry) {
  SynthConfig c;
  c.n_groups = 3;
  const SynthLayout lay = layout(c);
  double norm = 0.0;
  for (double v : lay.direction) norm += v * v;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_EQ(lay.coefficients, (std::vector<double>{1.0, 0.0, -1.0}));
  for (std::size_t a = 0; a < c.n_labels; ++a) {
    for (std::size_t b = a + 1; b < c.n_labels; ++b) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < c.dim; ++d) d2 += std::pow(lay.prototypes[a][d] - lay.prototypes[b][d], 2);
      EXPECT_NEAR(std::sqrt(d2), c.class_sep, 1e-12);
    }
  }
}

TEST(Synth, CellMeansSitOnTheirCenters) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig c;
    c.seed = seed;
    const Manifest m = generate(c);
    const SynthLayout lay = layout(c);
    const auto records = m.records();
    for (std::size_t l = 0; l < c.n_labels; ++l) {
      for (std::size_t g = 0; g < c.n_groups; ++g) {
        const auto idx = m.cell_indices(l, g, Split::train);
        const auto center = lay.center(l, g, c.group_shift);
        double ss = 0.0;
        for (std::size_t d = 0; d < c.dim; ++d) {
          double mean = 0.0;
          for (std::size_t i : idx) mean += records[i].features[d];
          mean /= static_cast<double>(idx.size());
          ss += std::pow(mean - center[d], 2);
        }
        const double rms = std::sqrt(ss / static_cast<double>(c.dim));
        EXPECT_LE(rms, 3.0 * c.noise_sigma / std::sqrt(static_cast<double>(idx.size())))
            << "seed " << seed << " cell " << l << "/" << g;
      }
    }
  }
}

TEST(Synth, InvalidConfigurations) {
  SynthConfig c;
  c.dim = 5;
  EXPECT_THROW(generate(c), SynthError);
  c = SynthConfig{};
  c.group_shift = c.class_sep;
  EXPECT_THROW(generate(c), SynthError);
  c = SynthConfig{};
  c.noise_sigma = 0.0;
  EXPECT_THROW(generate(c), SynthError);
  c = SynthConfig{};
  c.n_groups = 1;
  EXPECT_THROW(generate(c), SynthError);
}

TEST(Centroid, NoiselessUnshiftedDataIsPerfectlySeparable) {
  SynthConfig c;
  c.noise_sigma = 1e-9;
  c.group_shift = 0.0;
  c.samples_per_cell = 5;
  c.test_per_cell = 5;
  const Manifest m = generate(c);
  const RecallMatrix r = evaluate(m, predict(fit_centroid(m), m));
  for (std::size_t l = 0; l < c.n_labels; ++l) {
    for (std::size_t g = 0; g < c.n_groups; ++g) EXPECT_DOUBLE_EQ(*r.recall(l, g), 1.0);
  }
}

TEST(Centroid, SingleSampleCentroidIsThatSample) {
  const Manifest m(LabelSet({"a"}), GroupSet({"x", "y"}), {{"s", "", "a", "x", Split::train, {1.5, -2.0, 0.25}}});
  const CentroidModel model = fit_centroid(m);
  EXPECT_EQ(*model.centroids[0], (std::vector<double>{1.5, -2.0, 0.25}));
}

TEST(Centroid, OpposedPairAveragesToOrigin) {
  const double u[] = {0.6, 0.0, -0.8};
  const Manifest m(LabelSet({"a"}), GroupSet({"x", "y"}),
                   {{"p", "", "a", "x", Split::train, {u[0], u[1], u[2]}},
                    {"q", "", "a", "y", Split::train, {-u[0], -u[1], -u[2]}}});
  const CentroidModel model = fit_centroid(m);
  for (double v : *model.centroids[0]) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Centroid, FullPositiveBiasLeavesOnlyTheTargetGroupMean) {
  const Manifest source = generate(small(5));
  const Manifest biased = biased_subsample(source, "angry", "female", 1.0, 11);
  ASSERT_EQ(biased.cell_count(0, 1, Split::train), 0u);
  const auto records = biased.records();
  std::vector<double> mean(4, 0.0);
  const auto idx = biased.cell_indices(0, 0, Split::train);
  for (std::size_t i : idx) {
    for (std::size_t d = 0; d < 4; ++d) mean[d] += records[i].features[d];
  }
  const CentroidModel model = fit_centroid(biased);
  for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR((*model.centroids[0])[d], mean[d] / idx.size(), 1e-12);
}

TEST(Centroid, MissingLabelsAreNeverPredicted) {
  const Manifest m(LabelSet({"a", "b", "c"}), GroupSet({"x", "y"}),
                   {{"p", "", "a", "x", Split::train, {0.0}},
                    {"q", "", "c", "x", Split::train, {10.0}},
                    {"t", "", "b", "x", Split::test, {5.1}}});
  const CentroidModel model = fit_centroid(m);
  EXPECT_EQ(model.missing, std::vector<std::string>{"b"});
  EXPECT_EQ(predict(model, m).entries().at("t"), "c");
}

TEST(Centroid, TiesGoToTheEarlierLabel) {
  const Manifest m(LabelSet({"a", "b"}), GroupSet({"x", "y"}),
                   {{"p", "", "a", "x", Split::train, {-1.0, 0.0}}, {"q", "", "b", "x", Split::train, {1.0, 0.0}}});
  const double mid[] = {0.0, 3.0};
  EXPECT_EQ(nearest_label(fit_centroid(m), mid), 0u);
}

TEST(Centroid, NearestMatchesBruteForceScan) {
  std::mt19937_64 rng(100);
  std::normal_distribution<double> n01;
  CentroidModel model{LabelSet({"a", "b", "c", "d", "e"}), 3, {}, {}, ""};
  for (int l = 0; l < 5; ++l) model.centroids.emplace_back(std::vector<double>{n01(rng), n01(rng), n01(rng)});
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{n01(rng), n01(rng), n01(rng)};
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < 5; ++l) {
      double d = 0.0;
      for (std::size_t k = 0; k < 3; ++k) d += std::pow(x[k] - (*model.centroids[l])[k], 2);
      if (d < best_d) {
        best_d = d;
        best = l;
      }
    }
    EXPECT_EQ(nearest_label(model, x), best);
  }
}

TEST(Centroid, DimensionMismatchIsAnError) {
  const CentroidModel model = fit_centroid(generate(small()));
  const double x[] = {1.0, 2.0};
  EXPECT_THROW(nearest_label(model, x), SynthError);
  SynthConfig other = small();
  other.dim = 5;
  EXPECT_THROW(predict(model, generate(other)), SynthError);
}

TEST(Centroid, ModelRoundTripsThroughJson) {
  TempDir dir("synth");
  const Manifest m(LabelSet({"a", "b"}), GroupSet({"x", "y"}),
                   {{"p", "", "a", "x", Split::train, {0.1, 1e-300}}, {"t", "", "a", "y", Split::test, {0.0, 0.0}}});
  const CentroidModel model = fit_centroid(m);
  save_model(model, dir / "model.json");
  const CentroidModel back = load_model(dir / "model.json");
  EXPECT_EQ(back.labels, model.labels);
  EXPECT_EQ(back.centroids, model.centroids);
  EXPECT_EQ(back.missing, model.missing);
  EXPECT_EQ(back.trained_on, model.trained_on);
  EXPECT_EQ(predict(back, m), predict(model, m));
}

}  // namespace
}  // namespace stereolab
