#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "fairfl/model.hpp"
#include "fairfl/partition.hpp"

namespace fairfl {

struct FedConfig {
  std::size_t global_rounds = 40;
  std::size_t clients = 4;
  /// Per-client local update settings. train.rng_seed is the experiment seed
  /// from which every (client, round) stream is derived.
  TrainConfig train;
  /// Run client updates of a round on separate threads. Results are
  /// identical to the serial schedule.
  bool parallel_clients = false;
};

struct RoundLog {
  std::size_t round = 0;
  std::size_t messages_sent = 0;
  double elapsed_seconds = 0.0;
};

struct FedResult {
  ModelWeights weights;
  std::vector<RoundLog> rounds;
};

/// Seed used by `client_id` (1-based) for its local update in `round`.
std::uint64_t local_update_seed(std::uint64_t experiment_seed, int client_id, std::size_t round);

/// Seed of local epoch `epoch` inside a local update seeded with `update_seed`.
std::uint64_t epoch_seed(std::uint64_t update_seed, std::size_t epoch);

/// Copies `global_weights` and runs config.local_epochs sgd_epoch passes,
/// epoch e shuffled with epoch_seed(config.rng_seed, e).
ModelWeights client_local_update(const ModelWeights& global_weights, const Dataset& train,
                                 const TrainConfig& config);

struct ClientUpdate {
  ModelWeights weights;
  std::size_t sample_count = 0;
};

/// Coefficient-wise mean weighted by n_k / sum_j n_j. The summation order is
/// canonical (sorted by sample count, then coefficients), so the result is
/// bit-identical under any permutation of `updates`.
ModelWeights aggregate(std::span<const ClientUpdate> updates);

/// Total messages: one initial broadcast per client plus an upload and a
/// download per client per round, K * (2T + 1).
std::size_t count_communication(std::size_t rounds, std::size_t clients);

/// FedAvg: T rounds of {local update on every client; aggregate; broadcast}.
FedResult fedavg_train(const ModelWeights& initial, std::span<const ClientPartition> partitions,
                       const FedConfig& config);

void write_round_log_csv(std::ostream& out, std::span<const RoundLog> rounds);

}  // namespace fairfl
