#include <random>

#include <gtest/gtest.h>

#include "fairfl/error.hpp"
#include "fairfl/metrics.hpp"
#include "fairfl/postprocess.hpp"
#include "oracles.hpp"

using namespace fairfl;

namespace {

struct Triples {
  std::vector<int> pred, label, attr;

  void add(int yhat, int a, int y, int times) {
    for (int i = 0; i < times; ++i) {
      pred.push_back(yhat);
      attr.push_back(a);
      label.push_back(y);
    }
  }
  JointStats stats() const { return estimate_joint(pred, label, attr); }
};

/// Counts [yhat][a][y]: 4 1 3 2 / 1 3 2 4, 20 samples.
Triples hand_fixture() {
  Triples t;
  t.add(0, 0, 0, 4);
  t.add(0, 0, 1, 1);
  t.add(0, 1, 0, 3);
  t.add(0, 1, 1, 2);
  t.add(1, 0, 0, 1);
  t.add(1, 0, 1, 3);
  t.add(1, 1, 0, 2);
  t.add(1, 1, 1, 4);
  return t;
}

/// TPR 0.8 and FPR 0.2 in both groups, with different group sizes.
Triples fair_fixture() {
  Triples t;
  t.add(1, 1, 1, 16);
  t.add(0, 1, 1, 4);
  t.add(1, 1, 0, 2);
  t.add(0, 1, 0, 8);
  t.add(1, 0, 1, 4);
  t.add(0, 0, 1, 1);
  t.add(1, 0, 0, 3);
  t.add(0, 0, 0, 12);
  return t;
}

/// Both groups: 10 positives (8 predicted 1), 10 negatives (2 predicted 1).
Triples symmetric_fixture() {
  Triples t;
  for (int a : {0, 1}) {
    t.add(1, a, 1, 8);
    t.add(0, a, 1, 2);
    t.add(1, a, 0, 2);
    t.add(0, a, 0, 8);
  }
  return t;
}

JointStats to_stats(const oracle::Cells& c) {
  std::array<double, 8> cells{};
  double sum = 0;
  for (int yh = 0; yh < 2; ++yh)
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y) sum += cells[JointStats::index(yh, a, y)] = c[yh][a][y];
  for (auto& v : cells) v /= sum;
  return JointStats::from_cells(cells);
}

oracle::Cells from_stats(const JointStats& s) {
  oracle::Cells c{};
  for (int yh = 0; yh < 2; ++yh)
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y) c[yh][a][y] = s.pr(yh, a, y);
  return c;
}

}  // namespace

TEST(EstimateJoint, OnePerTripleIsUniform) {
  Triples t;
  for (int yh : {0, 1})
    for (int a : {0, 1})
      for (int y : {0, 1}) t.add(yh, a, y, 1);
  const auto s = t.stats();
  for (int yh : {0, 1})
    for (int a : {0, 1})
      for (int y : {0, 1}) EXPECT_EQ(s.pr(yh, a, y), 0.125);
}

TEST(EstimateJoint, PerfectPredictions) {
  Triples t;
  for (int a : {0, 1}) {
    t.add(1, a, 1, 3);
    t.add(0, a, 0, 2);
  }
  const auto s = t.stats();
  for (int a : {0, 1}) {
    EXPECT_EQ(s.positive_rate(a, 1), 1.0);
    EXPECT_EQ(s.positive_rate(a, 0), 0.0);
  }
}

TEST(EstimateJoint, HandFixture) {
  const auto s = hand_fixture().stats();
  const double expected[2][2][2] = {{{0.20, 0.05}, {0.15, 0.10}}, {{0.05, 0.15}, {0.10, 0.20}}};
  for (int yh : {0, 1})
    for (int a : {0, 1})
      for (int y : {0, 1}) EXPECT_DOUBLE_EQ(s.pr(yh, a, y), expected[yh][a][y]);
}

TEST(EstimateJoint, EmptyCellIsUnmeasurable) {
  Triples t;
  t.add(1, 1, 1, 2);
  t.add(0, 1, 0, 2);
  t.add(1, 0, 1, 2);
  try {
    t.stats();
    FAIL() << "expected UnmeasurableError";
  } catch (const UnmeasurableError& e) {
    EXPECT_EQ(e.group(), 0);
    EXPECT_EQ(e.label(), 0);
  }
}

TEST(JointStats, FromCellsValidates) {
  EXPECT_THROW(JointStats::from_cells({0.5, 0.5, 0, 0, 0, 0, 0, 0.1}), Error);
  EXPECT_THROW(JointStats::from_cells({0.5, 0.5, 0, 0, 0, 0, 0, 0}), Error);
  EXPECT_THROW(JointStats::from_cells({-0.1, 0.35, 0.25, 0.25, 0.25, 0, 0, 0}), Error);
  EXPECT_NO_THROW(JointStats::from_cells({0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0}));
}

TEST(DerivedRates, Examples) {
  const auto s = hand_fixture().stats();
  const auto base = derived_rates(DerivedPredictor::identity(), s);
  for (int a : {0, 1}) {
    EXPECT_DOUBLE_EQ(base.tpr[a], s.positive_rate(a, 1));
    EXPECT_DOUBLE_EQ(base.fpr[a], s.positive_rate(a, 0));
  }
  const auto flip = derived_rates({1, 1, 0, 0}, s);
  const auto coin = derived_rates({0.5, 0.5, 0.5, 0.5}, s);
  for (int a : {0, 1}) {
    EXPECT_DOUBLE_EQ(flip.tpr[a], 1 - base.tpr[a]);
    EXPECT_DOUBLE_EQ(flip.fpr[a], 1 - base.fpr[a]);
    EXPECT_DOUBLE_EQ(coin.tpr[a], 0.5);
    EXPECT_DOUBLE_EQ(coin.fpr[a], 0.5);
  }
}

TEST(ExpectedLoss, Examples) {
  Triples perfect;
  for (int a : {0, 1}) {
    perfect.add(1, a, 1, 3);
    perfect.add(0, a, 0, 4);
  }
  EXPECT_EQ(expected_loss(DerivedPredictor::identity(), perfect.stats()), 0.0);
  EXPECT_DOUBLE_EQ(expected_loss({0.5, 0.5, 0.5, 0.5}, hand_fixture().stats()), 0.5);
  // (1 + 2 + 1 + 2) misclassified of 20
  EXPECT_DOUBLE_EQ(expected_loss(DerivedPredictor::identity(), hand_fixture().stats()), 0.3);
}

TEST(ExpectedLoss, IsLinear) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = to_stats(oracle::random_cells(rng));
    const DerivedPredictor p{u(rng), u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng), u(rng)};
    const double t = u(rng);
    const auto mix = DerivedPredictor::from_vector(t * p.as_vector() + (1 - t) * q.as_vector());
    EXPECT_NEAR(expected_loss(mix, s), t * expected_loss(p, s) + (1 - t) * expected_loss(q, s), 1e-14);
  }
}

TEST(FitDerivedPredictor, AlreadyFairKeepsIdentityLoss) {
  const auto s = fair_fixture().stats();
  const auto p = fit_derived_predictor(s);
  EXPECT_NEAR(expected_loss(p, s), expected_loss(DerivedPredictor::identity(), s), 1e-9);
}

TEST(FitDerivedPredictor, SymmetricGroupsKeepBaseRates) {
  const auto s = symmetric_fixture().stats();
  const auto p = fit_derived_predictor(s);
  const auto r = derived_rates(p, s);
  for (int a : {0, 1}) {
    EXPECT_NEAR(r.tpr[a], s.positive_rate(a, 1), 1e-9);
    EXPECT_NEAR(r.fpr[a], s.positive_rate(a, 0), 1e-9);
  }
}

TEST(FitDerivedPredictor, MatchesExactGridOracle) {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cells = oracle::random_cells(rng);
    const auto s = to_stats(cells);
    const auto p = fit_derived_predictor(s);
    ASSERT_TRUE(p.valid());
    const auto r = derived_rates(p, s);
    EXPECT_LE(std::abs(r.tpr_gap()), 1e-9);
    EXPECT_LE(std::abs(r.fpr_gap()), 1e-9);

    const double obj = expected_loss(p, s);
    const auto exact = oracle::exact_grid_oracle(from_stats(s));
    EXPECT_NEAR(obj, exact.objective, 1e-9) << "trial " << trial;
    // The tolerance-relaxed grid can only do better than the exact optimum.
    EXPECT_LE(oracle::grid_oracle(from_stats(s)).objective, obj + 1e-12);
  }
}

TEST(FitDerivedPredictor, TiesGoToLexicographicallySmallest) {
  // Y_hat carries no information, so every feasible constant-rate p with the
  // same positive mass is optimal; the smallest is predicting 0 throughout.
  Triples t;
  for (int a : {0, 1})
    for (int yh : {0, 1})
      for (int y : {0, 1}) t.add(yh, a, y, 5);
  const auto p = fit_derived_predictor(t.stats());
  EXPECT_EQ(p, (DerivedPredictor{0, 0, 0, 0}));
}

TEST(FitDerivedPredictor, RejectsBadTolerance) {
  EXPECT_THROW(fit_derived_predictor(hand_fixture().stats(), 0.0), Error);
}

TEST(ApplyDerived, Examples) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const int yh = i % 2, a = (i / 2) % 2;
    EXPECT_EQ(apply_derived(DerivedPredictor::identity(), yh, a, rng), yh);
    EXPECT_EQ(apply_derived({1, 1, 1, 1}, yh, a, rng), 1);
  }
  const DerivedPredictor p{0, 0, 0, 0.3};
  long ones = 0;
  for (int i = 0; i < 100000; ++i) ones += apply_derived(p, 1, 1, rng);
  EXPECT_NEAR(ones / 100000.0, 0.3, 0.006);
}

TEST(ApplyDerived, DeterministicForFixedSeed) {
  const DerivedPredictor p{0.2, 0.4, 0.6, 0.8};
  auto draw = [&](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> out;
    for (int i = 0; i < 200; ++i) out.push_back(apply_derived(p, i % 2, (i / 2) % 2, rng));
    return out;
  };
  EXPECT_EQ(draw(9), draw(9));
}

TEST(EvaluateDerivedExact, IdentityEqualsRawMetrics) {
  const auto t = hand_fixture();
  const auto ev = evaluate_derived_exact(DerivedPredictor::identity(), t.pred, t.label, t.attr);
  const auto raw = confusion_by_group(t.pred, t.label, t.attr);
  for (int a : {0, 1}) {
    EXPECT_EQ(ev.rates.tpr(a), raw.tpr(a));
    EXPECT_EQ(ev.rates.fpr(a), raw.fpr(a));
  }
  EXPECT_EQ(eod(ev.rates), eod(raw));
  EXPECT_DOUBLE_EQ(ev.expected_accuracy, accuracy(t.pred, t.label));
}

TEST(EvaluateDerivedExact, CoinFlip) {
  const auto t = hand_fixture();
  const auto ev = evaluate_derived_exact({0.5, 0.5, 0.5, 0.5}, t.pred, t.label, t.attr);
  EXPECT_EQ(eod(ev.rates), 0.0);
  EXPECT_EQ(ev.expected_accuracy, 0.5);
}

TEST(EvaluateDerivedExact, MatchesMonteCarloMean) {
  std::mt19937_64 rng(31);
  Triples t;
  for (int i = 0; i < 400; ++i) t.add(rng() % 2, rng() % 2, rng() % 2, 1);
  const DerivedPredictor p{0.15, 0.35, 0.7, 0.9};
  const auto ev = evaluate_derived_exact(p, t.pred, t.label, t.attr);

  double tpr[2] = {0, 0}, fpr[2] = {0, 0}, acc = 0;
  const int runs = 10000;
  std::vector<int> flipped(t.pred.size());
  for (int r = 0; r < runs; ++r) {
    for (std::size_t i = 0; i < flipped.size(); ++i) flipped[i] = apply_derived(p, t.pred[i], t.attr[i], rng);
    const auto g = confusion_by_group(flipped, t.label, t.attr);
    for (int a : {0, 1}) {
      tpr[a] += g.tpr(a);
      fpr[a] += g.fpr(a);
    }
    acc += accuracy(flipped, t.label);
  }
  for (int a : {0, 1}) {
    EXPECT_NEAR(tpr[a] / runs, ev.rates.tpr(a), 0.01);
    EXPECT_NEAR(fpr[a] / runs, ev.rates.fpr(a), 0.01);
  }
  EXPECT_NEAR(acc / runs, ev.expected_accuracy, 0.01);
}

TEST(EvaluateDerivedExact, EmptyCellIsUnmeasurable) {
  Triples t;
  t.add(1, 1, 1, 2);
  t.add(0, 1, 0, 2);
  EXPECT_THROW(evaluate_derived_exact(DerivedPredictor::identity(), t.pred, t.label, t.attr),
               UnmeasurableError);
}

TEST(DerivedPredictorJson, RoundTrip) {
  const DerivedPredictor p{0.125, 0.0, 1.0, 0.3};
  const auto j = to_json(p);
  EXPECT_EQ(j.at("p00").get<double>(), 0.125);
  EXPECT_EQ(j.at("p11").get<double>(), 0.3);
  EXPECT_EQ(derived_predictor_from_json(nlohmann::json::parse(j.dump())), p);
  auto bad = j;
  bad["p10"] = 1.5;
  EXPECT_THROW(derived_predictor_from_json(bad), Error);
}
