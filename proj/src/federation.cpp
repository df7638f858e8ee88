#include "fairfl/federation.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <numeric>

namespace fairfl {

std::uint64_t local_update_seed(std::uint64_t experiment_seed, int client_id, std::size_t round) {
  return derive_seed(experiment_seed,
                     {stream::local, static_cast<std::uint64_t>(client_id), round});
}

std::uint64_t epoch_seed(std::uint64_t update_seed, std::size_t epoch) {
  return derive_seed(update_seed, {stream::epoch, epoch});
}

ModelWeights client_local_update(const ModelWeights& global_weights, const Dataset& train,
                                 const TrainConfig& config) {
  require(!train.empty(), "client_local_update: empty training set");
  ModelWeights w = global_weights;
  for (std::size_t e = 0; e < config.local_epochs; ++e) {
    TrainConfig epoch_config = config;
    epoch_config.rng_seed = epoch_seed(config.rng_seed, e);
    w = sgd_epoch(std::move(w), train, epoch_config);
  }
  return w;
}

namespace {

bool coefficients_less(const ModelWeights& a, const ModelWeights& b) {
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto& wa = a.layers[l].weight.reshaped();
    const auto& wb = b.layers[l].weight.reshaped();
    for (Eigen::Index i = 0; i < wa.size(); ++i)
      if (wa(i) != wb(i)) return wa(i) < wb(i);
    for (Eigen::Index i = 0; i < a.layers[l].bias.size(); ++i)
      if (a.layers[l].bias(i) != b.layers[l].bias(i)) return a.layers[l].bias(i) < b.layers[l].bias(i);
  }
  return false;
}

}  // namespace

ModelWeights aggregate(std::span<const ClientUpdate> updates) {
  require(!updates.empty(), "aggregate: no updates");
  const auto& first = updates.front().weights;
  first.validate();
  std::size_t total = 0;
  for (const auto& u : updates) {
    require(u.sample_count >= 1, "aggregate: sample counts must be >= 1");
    if (!u.weights.same_shape(first)) fail(ErrorKind::invalid_argument, "aggregate: shape mismatch");
    total += u.sample_count;
  }

  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (updates[i].sample_count != updates[j].sample_count)
      return updates[i].sample_count < updates[j].sample_count;
    return coefficients_less(updates[i].weights, updates[j].weights);
  });

  ModelWeights out = first;
  for (auto& l : out.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  for (auto i : order) {
    const double w = static_cast<double>(updates[i].sample_count) / static_cast<double>(total);
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
      out.layers[l].weight += w * updates[i].weights.layers[l].weight;
      out.layers[l].bias += w * updates[i].weights.layers[l].bias;
    }
  }
  return out;
}

std::size_t count_communication(std::size_t rounds, std::size_t clients) {
  require(clients >= 1, "count_communication: clients must be >= 1");
  return clients * (2 * rounds + 1);
}

FedResult fedavg_train(const ModelWeights& initial, std::span<const ClientPartition> partitions,
                       const FedConfig& config) {
  require(partitions.size() == config.clients, "fedavg_train: partition count != K");
  require(config.clients >= 1, "fedavg_train: K must be >= 1");
  for (const auto& p : partitions)
    if (p.train.empty())
      fail(ErrorKind::partition,
           "fedavg_train: client " + std::to_string(p.client_id) + " has an empty train set");

  using Clock = std::chrono::steady_clock;
  FedResult result{initial, {}};
  const auto k = partitions.size();
  for (std::size_t t = 1; t <= config.global_rounds; ++t) {
    const auto start = Clock::now();
    std::vector<ClientUpdate> updates(k);
    auto run_client = [&](std::size_t i) {
      TrainConfig local = config.train;
      local.rng_seed = local_update_seed(config.train.rng_seed, partitions[i].client_id, t);
      updates[i] = {client_local_update(result.weights, partitions[i].train, local),
                    partitions[i].train.size()};
    };
    if (config.parallel_clients && k > 1) {
      std::vector<std::future<void>> jobs;
      for (std::size_t i = 0; i < k; ++i) jobs.push_back(std::async(std::launch::async, run_client, i));
      for (auto& j : jobs) j.get();
    } else {
      for (std::size_t i = 0; i < k; ++i) run_client(i);
    }
    result.weights = aggregate(updates);
    const std::chrono::duration<double> dt = Clock::now() - start;
    result.rounds.push_back({t, 2 * k, dt.count()});
  }
  return result;
}

void write_round_log_csv(std::ostream& out, std::span<const RoundLog> rounds) {
  out << "round,messages,elapsed_seconds\n";
  for (const auto& r : rounds) out << r.round << ',' << r.messages_sent << ',' << r.elapsed_seconds << '\n';
}

}  // namespace fairfl
