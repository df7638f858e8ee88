#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "fairfl/data.hpp"
#include "fairfl/error.hpp"
#include "fairfl/partition.hpp"
#include "test_util.hpp"

using namespace fairfl;

namespace {

Dataset synthetic(std::size_t n, std::uint64_t seed = 11) {
  SynthSpec spec;
  spec.n = n;
  spec.dim = 3;
  return synth_generate(spec, seed);
}

std::vector<std::size_t> sorted_ids(const std::vector<Dataset>& shards) {
  std::vector<std::size_t> ids;
  for (const auto& s : shards) ids.insert(ids.end(), s.ids.begin(), s.ids.end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

double mean_heterogeneity(const Dataset& d, double alpha, int seeds) {
  double sum = 0;
  for (int s = 0; s < seeds; ++s)
    sum += heterogeneity_stat(dirichlet_partition(d, HeterogeneityLevel(alpha), 4, 1000 + s));
  return sum / seeds;
}

}  // namespace

TEST(Heterogeneity, RejectsNonPositiveAlpha) {
  EXPECT_THROW(HeterogeneityLevel(0.0), Error);
  EXPECT_THROW(HeterogeneityLevel(-1.0), Error);
  EXPECT_NO_THROW(HeterogeneityLevel(0.5));
}

TEST(DirichletPartition, SingleClientIsIdentity) {
  const auto d = synthetic(50);
  const auto shards = dirichlet_partition(d, HeterogeneityLevel(0.5), 1, 3);
  ASSERT_EQ(shards.size(), 1u);
  EXPECT_EQ(shards[0], d);
}

TEST(DirichletPartition, Errors) {
  const auto d = synthetic(3);
  EXPECT_THROW(dirichlet_partition(d, HeterogeneityLevel(1.0), 4, 0), Error);
  EXPECT_THROW(dirichlet_partition(Dataset{}, HeterogeneityLevel(1.0), 2, 0), Error);
}

TEST(DirichletPartition, ConservesTheMultisetOfSamples) {
  const auto d = synthetic(997);
  for (double alpha : {0.1, 0.5, 5.0, 500.0}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto shards = dirichlet_partition(d, HeterogeneityLevel(alpha), 4, seed);
      ASSERT_EQ(shards.size(), 4u);
      std::size_t total = 0;
      for (const auto& s : shards) {
        total += s.size();
        for (std::size_t i = 0; i < s.size(); ++i) {
          const auto id = s.ids[i];
          ASSERT_EQ(s.labels[i], d.labels[id]);
          ASSERT_EQ(s.sensitive[i], d.sensitive[id]);
          ASSERT_EQ(s.features.row(static_cast<Eigen::Index>(i)),
                    d.features.row(static_cast<Eigen::Index>(id)));
        }
      }
      EXPECT_EQ(total, d.size());
      EXPECT_EQ(sorted_ids(shards), d.ids);
    }
  }
}

TEST(DirichletPartition, Deterministic) {
  const auto d = synthetic(500);
  const auto a = dirichlet_partition(d, HeterogeneityLevel(0.5), 4, 77);
  const auto b = dirichlet_partition(d, HeterogeneityLevel(0.5), 4, 77);
  EXPECT_EQ(a, b);
  const auto c = dirichlet_partition(d, HeterogeneityLevel(0.5), 4, 78);
  EXPECT_NE(a, c);
}

TEST(DirichletPartition, LargeAlphaIsNearlyUniformPerCell) {
  const auto d = synthetic(10000);
  const auto totals = d.cell_counts();
  // A 0.05 band is about 3.9 standard deviations here; roughly one seed in a
  // thousand has some cell outside it.
  for (std::uint64_t seed = 1000; seed < 1020; ++seed) {
    const auto shards = dirichlet_partition(d, HeterogeneityLevel(500.0), 4, seed);
    for (const auto& s : shards) {
      const auto c = s.cell_counts();
      for (std::size_t k = 0; k < 4; ++k)
        EXPECT_NEAR(double(c[k]) / double(totals[k]), 0.25, 0.05) << "seed " << seed;
    }
  }
}

TEST(HeterogeneityStat, Examples) {
  const auto d = testutil::make_dataset({1, 0, 1, 0}, {1, 1, 0, 0});
  EXPECT_EQ(heterogeneity_stat({d, d, d}), 0.0);

  const auto a = testutil::make_dataset({1, 1}, {1, 1});
  const auto b = testutil::make_dataset({1, 1, 1}, {0, 0, 0});
  EXPECT_DOUBLE_EQ(heterogeneity_stat({a, b}), 1.0);

  // (1/2,1/2,0,0) vs (1/2,0,1/2,0): TV = 1/2
  const auto c = testutil::make_dataset({1, 1}, {1, 0});
  const auto e = testutil::make_dataset({1, 0}, {1, 1});
  EXPECT_DOUBLE_EQ(heterogeneity_stat({c, e}), 0.5);

  EXPECT_THROW(heterogeneity_stat({d}), Error);
  EXPECT_THROW(heterogeneity_stat({d, Dataset{}}), Error);
}

TEST(HeterogeneityStat, DecreasesWithAlpha) {
  const auto d = synthetic(4000);
  const double h05 = mean_heterogeneity(d, 0.5, 20);
  const double h5 = mean_heterogeneity(d, 5.0, 20);
  const double h500 = mean_heterogeneity(d, 500.0, 20);
  EXPECT_GT(h05, h5);
  EXPECT_GT(h5, h500);
  for (double h : {h05, h5, h500}) {
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
  }
}

TEST(TrainTestSplit, Sizes) {
  const auto d = synthetic(10);
  const auto p = train_test_split(d, 0.8, 5, 2);
  EXPECT_EQ(p.client_id, 2);
  EXPECT_EQ(p.train.size(), 8u);
  EXPECT_EQ(p.test.size(), 2u);

  const auto big = synthetic(5278);
  const auto q = train_test_split(big, 0.8, 5);
  EXPECT_EQ(q.train.size(), 4222u);
  EXPECT_EQ(q.test.size(), 1056u);
}

TEST(TrainTestSplit, DisjointCoveringAndDeterministic) {
  const auto d = synthetic(333);
  const auto p = train_test_split(d, 0.8, 9);
  std::vector<std::size_t> all = p.train.ids;
  all.insert(all.end(), p.test.ids.begin(), p.test.ids.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, d.ids);
  EXPECT_TRUE(std::is_sorted(p.train.ids.begin(), p.train.ids.end()));
  EXPECT_TRUE(std::is_sorted(p.test.ids.begin(), p.test.ids.end()));

  const auto again = train_test_split(d, 0.8, 9);
  EXPECT_EQ(again.train.ids, p.train.ids);
  EXPECT_EQ(again.test.ids, p.test.ids);
  EXPECT_NE(train_test_split(d, 0.8, 10).train.ids, p.train.ids);
}

TEST(TrainTestSplit, Errors) {
  EXPECT_THROW(train_test_split(synthetic(1), 0.8, 0), Error);
  EXPECT_THROW(train_test_split(synthetic(10), 0.0, 0), Error);
  EXPECT_THROW(train_test_split(synthetic(10), 1.0, 0), Error);
  // floor(0.8 * 2) = 1 train, 1 test
  EXPECT_NO_THROW(train_test_split(synthetic(2), 0.8, 0));
}

TEST(Degeneracy, FlagsEmptyCellsInEitherSplit) {
  ClientPartition ok{1, testutil::make_dataset({1, 1, 0, 0}, {1, 0, 1, 0}),
                     testutil::make_dataset({1, 1, 0, 0}, {1, 0, 1, 0})};
  EXPECT_FALSE(is_degenerate({ok}));
  auto bad_train = ok;
  bad_train.train = testutil::make_dataset({1, 1, 0}, {1, 0, 1});
  EXPECT_TRUE(is_degenerate({ok, bad_train}));
  auto bad_test = ok;
  bad_test.test = testutil::make_dataset({1, 0, 0}, {1, 1, 0});
  EXPECT_TRUE(is_degenerate({bad_test}));
}

TEST(Degeneracy, SmallAlphaOnCompasProducesNearEmptyCells) {
  if (!testutil::has_data_file("compas-scores-two-years.csv"))
    GTEST_SKIP() << "COMPAS file not fetched";
  const auto d = load_compas(testutil::data_file("compas-scores-two-years.csv"));
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto shards = dirichlet_partition(d, HeterogeneityLevel(0.1), 4, seed);
    bool tiny = false;
    for (const auto& s : shards)
      for (auto c : s.cell_counts()) tiny = tiny || c <= 1;
    hits += tiny;
  }
  EXPECT_GT(hits, 0);
}

TEST(Manifest, ListsSampleIdsPerClient) {
  const auto d = synthetic(40);
  std::vector<ClientPartition> parts;
  const auto shards = dirichlet_partition(d, HeterogeneityLevel(5.0), 2, 1);
  for (std::size_t i = 0; i < shards.size(); ++i)
    parts.push_back(train_test_split(shards[i], 0.8, i, static_cast<int>(i + 1)));
  const auto m = partition_manifest(parts);
  ASSERT_EQ(m.at("clients").size(), 2u);
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& c = m["clients"][i];
    EXPECT_EQ(c.at("client").get<int>(), static_cast<int>(i + 1));
    EXPECT_EQ(c.at("train").get<std::vector<std::size_t>>(), parts[i].train.ids);
    EXPECT_EQ(c.at("test").get<std::vector<std::size_t>>(), parts[i].test.ids);
    for (const auto& key : {"train", "test"})
      for (auto id : c.at(key)) ids.push_back(id.get<std::size_t>());
  }
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, d.ids);
}
