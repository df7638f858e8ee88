#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fairfl/error.hpp"
#include "fairfl/federation.hpp"
#include "test_util.hpp"

using namespace fairfl;

namespace {

ModelWeights scalar_model(double w) {
  ModelWeights m;
  m.layers.push_back({MatrixX<double>::Constant(1, 1, w), VectorX<double>::Constant(1, w)});
  return m;
}

ModelWeights random_model(const std::vector<std::size_t>& dims, std::mt19937_64& rng) {
  auto m = init_model(std::span<const std::size_t>(dims), rng());
  std::normal_distribution<double> n(0.0, 3.0);
  for (auto& l : m.layers) {
    l.weight = l.weight.unaryExpr([&](double) { return n(rng); });
    l.bias = l.bias.unaryExpr([&](double) { return n(rng); });
  }
  return m;
}

std::vector<ClientPartition> synthetic_clients(std::size_t k, std::uint64_t seed) {
  SynthSpec spec;
  spec.n = 600;
  spec.dim = 3;
  const auto d = synth_generate(spec, seed);
  const auto shards = dirichlet_partition(d, HeterogeneityLevel(5.0), k, seed);
  std::vector<ClientPartition> parts;
  for (std::size_t i = 0; i < k; ++i)
    parts.push_back(train_test_split(shards[i], 0.8, seed + i, static_cast<int>(i + 1)));
  return parts;
}

}  // namespace

TEST(ClientLocalUpdate, IdentityCases) {
  SynthSpec spec;
  spec.n = 50;
  const auto d = synth_generate(spec, 1);
  const auto w = init_model({2, 3, 1}, 1);
  TrainConfig c;
  c.local_epochs = 0;
  EXPECT_EQ(client_local_update(w, d, c), w);
  c.local_epochs = 3;
  c.learning_rate = 0.0;
  EXPECT_EQ(client_local_update(w, d, c), w);
  EXPECT_THROW(client_local_update(w, Dataset{}, c), Error);
}

TEST(ClientLocalUpdate, ReproducesHandComputedStep) {
  auto d = testutil::make_dataset({1}, {0}, 1);
  d.features(0, 0) = 1.0;
  ModelWeights w;
  w.layers.push_back({MatrixX<double>::Zero(1, 1), VectorX<double>::Zero(1)});
  TrainConfig c;
  c.learning_rate = 1.0;
  c.batch_size = 1;
  const auto out = client_local_update(w, d, c);
  EXPECT_DOUBLE_EQ(out.layers[0].weight(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out.layers[0].bias(0), 0.5);
  EXPECT_EQ(w.layers[0].weight(0, 0), 0.0);
}

TEST(Aggregate, Examples) {
  std::vector<ClientUpdate> even{{scalar_model(0), 5}, {scalar_model(1), 5}};
  EXPECT_EQ(aggregate(even).layers[0].weight(0, 0), 0.5);

  std::vector<ClientUpdate> skew{{scalar_model(0), 1}, {scalar_model(1), 3}};
  EXPECT_EQ(aggregate(skew).layers[0].weight(0, 0), 0.75);
  EXPECT_EQ(aggregate(skew).layers[0].bias(0), 0.75);

  std::mt19937_64 rng(5);
  const auto m = random_model({6, 4, 1}, rng);
  std::vector<ClientUpdate> same{{m, 3}, {m, 17}, {m, 101}, {m, 9}};
  const auto agg = aggregate(same);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    EXPECT_LE((agg.layers[l].weight - m.layers[l].weight).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((agg.layers[l].bias - m.layers[l].bias).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate(std::span<const ClientUpdate>()), Error);
  std::vector<ClientUpdate> zero{{scalar_model(0), 0}};
  EXPECT_THROW(aggregate(zero), Error);
  std::vector<ClientUpdate> mismatch{{scalar_model(0), 1}, {init_model({2, 1}, 0), 1}};
  EXPECT_THROW(aggregate(mismatch), Error);
}

TEST(Aggregate, PermutationAndScalingInvariantBitExact) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> clients(1, 8), count(1, 5000), scale(2, 1000);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<std::size_t> dims{1 + rng() % 10, 1 + rng() % 6, 1};
    std::vector<ClientUpdate> updates;
    for (auto k = clients(rng); k > 0; --k) updates.push_back({random_model(dims, rng), count(rng)});
    // Duplicate counts exercise the tie-break.
    if (updates.size() > 1) updates[1].sample_count = updates[0].sample_count;
    const auto base = aggregate(updates);

    auto shuffled = updates;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ASSERT_EQ(aggregate(shuffled), base) << "trial " << trial;

    auto scaled = updates;
    const auto c = scale(rng);
    for (auto& u : scaled) u.sample_count *= c;
    ASSERT_EQ(aggregate(scaled), base) << "trial " << trial;
  }
}

TEST(CountCommunication, Totals) {
  EXPECT_EQ(count_communication(40, 4), 324u);
  EXPECT_EQ(count_communication(20, 4), 164u);
  EXPECT_EQ(count_communication(0, 4), 4u);
  EXPECT_THROW(count_communication(1, 0), Error);
}

TEST(FedavgTrain, SingleClientEqualsCentralizedTraining) {
  const auto parts = synthetic_clients(1, 3);
  FedConfig config;
  config.clients = 1;
  config.global_rounds = 6;
  config.train.local_epochs = 2;
  config.train.batch_size = 16;
  config.train.rng_seed = 123;
  const auto initial = init_model({3, 5, 1}, 4);
  const auto fed = fedavg_train(initial, parts, config);

  auto w = initial;
  for (std::size_t t = 1; t <= config.global_rounds; ++t) {
    const auto update = local_update_seed(config.train.rng_seed, 1, t);
    for (std::size_t e = 0; e < config.train.local_epochs; ++e) {
      auto c = config.train;
      c.rng_seed = epoch_seed(update, e);
      w = sgd_epoch(w, parts[0].train, c);
    }
  }
  EXPECT_EQ(fed.weights, w);
}

TEST(FedavgTrain, ZeroRoundsReturnsInitial) {
  const auto parts = synthetic_clients(4, 1);
  FedConfig config;
  config.global_rounds = 0;
  const auto initial = init_model({3, 1}, 2);
  const auto fed = fedavg_train(initial, parts, config);
  EXPECT_EQ(fed.weights, initial);
  EXPECT_TRUE(fed.rounds.empty());
}

TEST(FedavgTrain, RoundLogsCountTwoMessagesPerClient) {
  const auto parts = synthetic_clients(4, 2);
  FedConfig config;
  config.global_rounds = 5;
  const auto fed = fedavg_train(init_model({3, 1}, 2), parts, config);
  ASSERT_EQ(fed.rounds.size(), 5u);
  std::size_t messages = 4;  // initial broadcast
  for (std::size_t i = 0; i < fed.rounds.size(); ++i) {
    EXPECT_EQ(fed.rounds[i].round, i + 1);
    EXPECT_EQ(fed.rounds[i].messages_sent, 8u);
    EXPECT_GE(fed.rounds[i].elapsed_seconds, 0.0);
    messages += fed.rounds[i].messages_sent;
  }
  EXPECT_EQ(messages, count_communication(5, 4));

  std::ostringstream csv;
  write_round_log_csv(csv, fed.rounds);
  const auto text = csv.str();
  EXPECT_EQ(text.rfind("round,messages,elapsed_seconds\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST(FedavgTrain, ParallelMatchesSerial) {
  const auto parts = synthetic_clients(4, 8);
  FedConfig config;
  config.global_rounds = 4;
  config.train.rng_seed = 77;
  const auto initial = init_model({3, 4, 1}, 8);
  const auto serial = fedavg_train(initial, parts, config);
  config.parallel_clients = true;
  EXPECT_EQ(fedavg_train(initial, parts, config).weights, serial.weights);
}

TEST(FedavgTrain, Errors) {
  auto parts = synthetic_clients(2, 4);
  FedConfig config;
  config.clients = 3;
  EXPECT_THROW(fedavg_train(init_model({3, 1}, 0), parts, config), Error);
  config.clients = 2;
  parts[1].train = Dataset{};
  EXPECT_THROW(fedavg_train(init_model({3, 1}, 0), parts, config), Error);
}

TEST(Seeds, ScheduleIndependentAndDistinct) {
  EXPECT_EQ(local_update_seed(5, 2, 3), local_update_seed(5, 2, 3));
  EXPECT_NE(local_update_seed(5, 2, 3), local_update_seed(5, 3, 2));
  EXPECT_NE(local_update_seed(5, 1, 1), local_update_seed(6, 1, 1));
  EXPECT_NE(epoch_seed(1, 0), epoch_seed(1, 1));
}
