#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "stereolab/csv.hpp"
#include "stereolab/metrics.hpp"
#include "support.hpp"

namespace stereolab {
namespace {

using testing::TempDir;

const LabelSet kLabels({"angry", "happy"});
const GroupSet kGroups({"male", "female"});

SampleRecord test_record(std::string id, std::string label, std::string group) {
  return {std::move(id), "", std::move(label), std::move(group), Split::test, {}};
}

// Two angry/male, one angry/female, one happy/male test records plus a train row.
Manifest toy() {
  return Manifest(kLabels, kGroups,
                  {test_record("t1", "angry", "male"), test_record("t2", "angry", "male"),
                   test_record("t3", "angry", "female"), test_record("t4", "happy", "male"),
                   {"tr", "", "happy", "female", Split::train, {}}});
}

RecallMatrix matrix(std::vector<std::vector<std::size_t>> correct, std::vector<std::vector<std::size_t>> support) {
  return RecallMatrix(kLabels, kGroups, std::move(correct), std::move(support));
}

TEST(Evaluate, ToyRecallPerCell) {
  const PredictionSet p({{"t1", "angry"}, {"t2", "happy"}, {"t3", "angry"}, {"t4", "happy"}});
  const RecallMatrix r = evaluate(toy(), p);
  EXPECT_DOUBLE_EQ(*r.recall(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(*r.recall(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(*r.recall(1, 0), 1.0);
  EXPECT_FALSE(r.recall(1, 1));
}

TEST(Evaluate, PerfectPredictionsGiveFullRecall) {
  const Manifest m = testing::expand({{"angry", "happy"}, {"male", "female"}, {{1, 1}, {1, 1}}}, 5);
  PredictionSet p;
  for (const auto& r : m.records()) {
    if (r.split == Split::test) p.add(r.sample_id, r.label);
  }
  const RecallMatrix rm = evaluate(m, p);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t g = 0; g < 2; ++g) EXPECT_DOUBLE_EQ(*rm.recall(l, g), 1.0);
  }
}

TEST(Evaluate, MatchesBruteForceOnRandomFixtures) {
  std::mt19937_64 rng(500);
  for (int trial = 0; trial < 20; ++trial) {
    const Manifest m = testing::random_manifest(rng, 7, 3, 0, 3, 25);
    if (m.split_size(Split::test) == 0) continue;
    PredictionSet p;
    for (const auto& r : m.records()) {
      if (r.split == Split::test) p.add(r.sample_id, m.labels()[rng() % m.labels().size()]);
    }
    const RecallMatrix rm = evaluate(m, p);
    const auto brute = testing::brute_recall(m, p);
    for (std::size_t l = 0; l < m.labels().size(); ++l) {
      for (std::size_t g = 0; g < m.groups().size(); ++g) {
        const auto [c, s] = brute.at({m.labels()[l], m.groups()[g]});
        EXPECT_EQ(rm.correct(l, g), c);
        EXPECT_EQ(rm.support(l, g), s);
        if (s == 0) {
          EXPECT_FALSE(rm.recall(l, g));
        } else {
          EXPECT_DOUBLE_EQ(*rm.recall(l, g), static_cast<double>(c) / static_cast<double>(s));
        }
      }
    }
  }
}

TEST(Evaluate, ConfusionConservesTestMass) {
  std::mt19937_64 rng(4);
  const Manifest m = testing::random_manifest(rng, 6, 3, 0, 2, 30);
  PredictionSet p;
  for (const auto& r : m.records()) {
    if (r.split == Split::test) p.add(r.sample_id, m.labels()[rng() % m.labels().size()]);
  }
  const Confusion c = tally(m, p);
  std::size_t total = 0;
  for (const auto& by_group : c.counts) {
    for (const auto& row : by_group) {
      for (std::size_t v : row) total += v;
    }
  }
  EXPECT_EQ(total, m.split_size(Split::test));
}

TEST(Evaluate, PermutingPredictionInsertionOrderChangesNothing) {
  std::mt19937_64 rng(12);
  const Manifest m = testing::random_manifest(rng, 5, 2, 0, 2, 20);
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& r : m.records()) {
    if (r.split == Split::test) entries.emplace_back(r.sample_id, m.labels()[rng() % m.labels().size()]);
  }
  PredictionSet a;
  for (const auto& [id, l] : entries) a.add(id, l);
  std::shuffle(entries.begin(), entries.end(), rng);
  PredictionSet b;
  for (const auto& [id, l] : entries) b.add(id, l);
  EXPECT_EQ(evaluate(m, a), evaluate(m, b));
}

std::string eval_error(const PredictionSet& p) {
  try {
    evaluate(toy(), p);
  } catch (const EvaluationError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected EvaluationError";
  return {};
}

TEST(Evaluate, ErrorsListOffendingIds) {
  EXPECT_NE(eval_error(PredictionSet({{"t1", "angry"}, {"t2", "angry"}, {"t3", "angry"}})).find("t4"),
            std::string::npos);
  EXPECT_NE(eval_error(PredictionSet({{"t1", "angry"}, {"t2", "angry"}, {"t3", "angry"}, {"t4", "angry"},
                                      {"zz", "angry"}}))
                .find("zz"),
            std::string::npos);
  EXPECT_NE(eval_error(PredictionSet({{"t1", "angry"}, {"t2", "angry"}, {"t3", "angry"}, {"t4", "angry"},
                                      {"tr", "angry"}}))
                .find("tr"),
            std::string::npos);
  EXPECT_NE(eval_error(PredictionSet({{"t1", "fear"}, {"t2", "angry"}, {"t3", "angry"}, {"t4", "angry"}}))
                .find("t1"),
            std::string::npos);
  PredictionSet p;
  p.add("a", "x");
  EXPECT_THROW(p.add("a", "y"), EvaluationError);
}

TEST(Predictions, ParseAndRoundTrip) {
  TempDir dir("metrics");
  const PredictionSet p({{"b", "happy"}, {"a", "angry"}});
  save_predictions(p, dir / "p.csv");
  EXPECT_EQ(load_predictions(dir / "p.csv"), p);
  EXPECT_THROW(parse_predictions("sample_id,predicted_label\na,x\na,y\n", "p.csv"), FormatError);
  EXPECT_THROW(parse_predictions("id,label\na,x\n", "p.csv"), FormatError);
}

TEST(Diff, TargetMinusReference) {
  // female recall 5189/10000, male 8125/10000 on angry; happy 8794 vs 7291.
  const RecallMatrix r = matrix({{8125, 5189}, {7291, 8794}}, {{10000, 10000}, {10000, 10000}});
  const DiffReport d = diff(r, "female", "male");
  EXPECT_NEAR(*d.diff[0], -0.2936, 1e-12);
  EXPECT_NEAR(*d.diff[1], 0.1503, 1e-12);
  const DiffReport back = diff(r, "male", "female");
  for (std::size_t l = 0; l < 2; ++l) EXPECT_DOUBLE_EQ(*back.diff[l], -*d.diff[l]);
  EXPECT_THROW(diff(r, "female", "other"), EvaluationError);
}

TEST(Diff, UndefinedWhenEitherGroupLacksSupport) {
  const RecallMatrix r = matrix({{1, 0}, {1, 1}}, {{2, 0}, {1, 1}});
  const DiffReport d = diff(r, "female", "male");
  EXPECT_FALSE(d.diff[0]);
  EXPECT_DOUBLE_EQ(*d.diff[1], 0.0);
}

TEST(Diff, AntiSymmetricOnRandomMatrices) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<std::size_t>> c(2, std::vector<std::size_t>(2));
    std::vector<std::vector<std::size_t>> s(2, std::vector<std::size_t>(2));
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t g = 0; g < 2; ++g) {
        s[l][g] = rng() % 50;
        c[l][g] = s[l][g] ? rng() % (s[l][g] + 1) : 0;
      }
    }
    const RecallMatrix r = matrix(c, s);
    const auto a = diff(r, "female", "male");
    const auto b = diff(r, "male", "female");
    for (std::size_t l = 0; l < 2; ++l) {
      ASSERT_EQ(a.diff[l].has_value(), b.diff[l].has_value());
      if (a.diff[l]) EXPECT_EQ(*a.diff[l], -*b.diff[l]);
    }
  }
}

TEST(Summarize, SampleStandardDeviation) {
  EXPECT_FALSE(summarize({}));
  const double one[] = {0.8};
  EXPECT_FALSE(summarize(one)->std);
  const double two[] = {0.8, 0.9};
  const Stat s = *summarize(two);
  EXPECT_NEAR(s.mean, 0.85, 1e-12);
  EXPECT_NEAR(*s.std, 0.0707106781, 1e-9);
  EXPECT_EQ(s.n, 2u);
}

TEST(Aggregate, IdenticalRunsHaveZeroSpread) {
  const RecallMatrix r = matrix({{3, 2}, {5, 4}}, {{4, 4}, {5, 5}});
  const std::vector<RecallMatrix> runs(10, r);
  const AggregateReport a = aggregate(runs, "female", "male");
  EXPECT_DOUBLE_EQ(a.recall[0][0]->mean, 0.75);
  EXPECT_DOUBLE_EQ(*a.recall[0][0]->std, 0.0);
  EXPECT_DOUBLE_EQ(a.diff[0]->mean, -0.25);
  EXPECT_DOUBLE_EQ(*a.diff[0]->std, 0.0);
  EXPECT_EQ(a.diff[1]->n, 10u);
  EXPECT_FALSE(a.train_size);
}

TEST(Aggregate, SingleRunReportsNotApplicableSpread) {
  TempDir dir("metrics");
  const std::vector<RecallMatrix> runs{matrix({{3, 2}, {5, 4}}, {{4, 4}, {5, 5}})};
  std::map<BiasLevel, AggregateReport> by_level;
  by_level.emplace(BiasLevel(), aggregate(runs, "female", "male"));
  emit_reports(by_level, dir.path(), "baseline");
  const std::string diff_csv = read_file(dir / "baseline_diff.csv");
  EXPECT_NE(diff_csv.find("0.0,angry,-25.00,n/a,1"), std::string::npos) << diff_csv;
  const std::string table = read_file(dir / "baseline_table.txt");
  EXPECT_NE(table.find("female 0.0"), std::string::npos) << table;
  EXPECT_EQ(table.find("female -0."), std::string::npos);
}

TEST(Aggregate, RejectsInconsistentRuns) {
  const RecallMatrix a = matrix({{1, 1}, {1, 1}}, {{1, 1}, {1, 1}});
  const RecallMatrix b(LabelSet({"angry", "sad"}), kGroups, {{1, 1}, {1, 1}}, {{1, 1}, {1, 1}});
  const std::vector<RecallMatrix> runs{a, b};
  EXPECT_THROW(aggregate(runs, "female", "male"), EvaluationError);
  EXPECT_THROW(aggregate(std::span<const RecallMatrix>(), "female", "male"), EvaluationError);
}

TEST(Reports, GridOfElevenLevelsRoundTrips) {
  TempDir dir("metrics");
  const LabelSet labels({"angry", "disgust", "fear", "happy", "sad", "surprise", "neutral"});
  std::mt19937_64 rng(6);
  std::map<BiasLevel, AggregateReport> by_level;
  std::map<BiasLevel, std::vector<RecallMatrix>> raw;
  for (BiasLevel level : default_bias_grid()) {
    std::vector<RecallMatrix> runs;
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<std::vector<std::size_t>> c(7, std::vector<std::size_t>(2));
      std::vector<std::vector<std::size_t>> s(7, std::vector<std::size_t>(2, 200));
      for (auto& row : c) {
        for (auto& v : row) v = rng() % 201;
      }
      runs.emplace_back(labels, kGroups, c, s);
    }
    const std::vector<double> sizes{100.0, 102.0, 104.0};
    by_level.emplace(level, aggregate(runs, "female", "male", sizes));
    raw.emplace(level, runs);
  }
  emit_reports(by_level, dir.path(), "biased");
  const auto rows = read_diff_csv(dir / "biased_diff.csv");
  ASSERT_EQ(rows.size(), 77u);
  for (const auto& row : rows) {
    const auto& runs = raw.at(row.bias);
    const std::size_t l = *labels.index_of(row.label);
    std::vector<double> d;
    for (const auto& r : runs) d.push_back(*r.recall(l, 1) - *r.recall(l, 0));
    const Stat s = *summarize(d);
    EXPECT_NEAR(*row.mean_pct, 100.0 * s.mean, 0.005 + 1e-9);
    EXPECT_NEAR(*row.std_pct, 100.0 * *s.std, 0.005 + 1e-9);
    EXPECT_EQ(row.n_runs, 3u);
  }
  const auto recall_rows = read_recall_csv(dir / "biased_recall.csv");
  EXPECT_EQ(recall_rows.size(), 154u);
  const std::string table = read_file(dir / "biased_table.txt");
  EXPECT_NE(table.find("Size"), std::string::npos);
  EXPECT_NE(table.find("102.00"), std::string::npos);
  EXPECT_NE(table.find("female -1.0"), std::string::npos);
  EXPECT_NE(table.find("female 1.0"), std::string::npos);
}

TEST(Reports, UndefinedCellsUseTheMarker) {
  TempDir dir("metrics");
  const std::vector<RecallMatrix> runs{matrix({{1, 0}, {1, 1}}, {{2, 0}, {1, 1}})};
  std::map<BiasLevel, AggregateReport> by_level;
  by_level.emplace(BiasLevel::parse("-0.4"), aggregate(runs, "female", "male"));
  emit_reports(by_level, dir.path());
  const auto rows = read_diff_csv(dir / "report_diff.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].mean_pct);
  EXPECT_EQ(rows[0].n_runs, 0u);
  EXPECT_NE(read_file(dir / "report_table.txt").find(std::string(kUndefinedCell)), std::string::npos);
  EXPECT_EQ(format_percent(std::nullopt), kUndefinedCell);
  EXPECT_EQ(format_percent(0.36274), "36.27");
}

}  // namespace
}  // namespace stereolab
