#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairfl/data.hpp"

namespace fairfl {

/// Dirichlet concentration. Smaller is more heterogeneous.
class HeterogeneityLevel {
 public:
  explicit HeterogeneityLevel(double alpha);
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

struct ClientPartition {
  int client_id = 1;  // 1-based
  Dataset train;
  Dataset test;
};

/// For each (Y,A) cell a proportion vector over the k clients is drawn from
/// Dir(alpha), and every sample of the cell goes to a client drawn from that
/// categorical. Shards keep the input row order. Clients may end up empty.
std::vector<Dataset> dirichlet_partition(const Dataset& dataset, HeterogeneityLevel alpha,
                                         std::size_t k, std::uint64_t rng_seed);

/// Uniform split without replacement: floor(train_fraction * n) rows train,
/// the rest test. Both sides keep the shard's row order.
ClientPartition train_test_split(const Dataset& shard, double train_fraction,
                                 std::uint64_t rng_seed, int client_id = 1);

/// Max over client pairs of the total-variation distance between their
/// (Y,A) cell distributions.
double heterogeneity_stat(const std::vector<Dataset>& shards);

/// True if any client's train or test split lacks a (Y,A) cell, which makes
/// EOD unmeasurable or the derived predictor unfittable on that client.
bool is_degenerate(const std::vector<ClientPartition>& partitions);

/// {"clients": [{"client": k, "train": [ids...], "test": [ids...]}, ...]}
nlohmann::json partition_manifest(const std::vector<ClientPartition>& partitions);

}  // namespace fairfl
