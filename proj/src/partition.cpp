#include "fairfl/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairfl/error.hpp"
#include "fairfl/rng.hpp"

namespace fairfl {

HeterogeneityLevel::HeterogeneityLevel(double alpha) : alpha_(alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), "Dirichlet alpha must be positive");
}

namespace {

std::vector<double> sample_dirichlet(double alpha, std::size_t k, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(k);
  for (auto& x : p) x = gamma(rng);
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (sum > 0.0) {
    for (auto& x : p) x /= sum;
  } else {
    // Every gamma draw underflowed (tiny alpha): the limit is a point mass.
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    p[pick(rng)] = 1.0;
  }
  return p;
}

}  // namespace

std::vector<Dataset> dirichlet_partition(const Dataset& dataset, HeterogeneityLevel alpha,
                                         std::size_t k, std::uint64_t rng_seed) {
  require(k >= 1, "dirichlet_partition: k must be >= 1");
  if (dataset.empty()) fail(ErrorKind::partition, "dirichlet_partition: empty dataset");
  if (k > dataset.size())
    fail(ErrorKind::partition, "dirichlet_partition: k exceeds dataset size");
  if (k == 1) return {dataset};

  Rng rng(rng_seed);
  std::vector<int> owner(dataset.size(), 0);
  for (int y : {1, 0}) {
    for (int a : {1, 0}) {
      const auto p = sample_dirichlet(alpha.alpha(), k, rng);
      std::discrete_distribution<int> client(p.begin(), p.end());
      for (std::size_t i = 0; i < dataset.size(); ++i)
        if (dataset.labels[i] == y && dataset.sensitive[i] == a) owner[i] = client(rng);
    }
  }

  std::vector<std::vector<std::size_t>> rows(k);
  for (std::size_t i = 0; i < dataset.size(); ++i)
    rows[static_cast<std::size_t>(owner[i])].push_back(i);
  std::vector<Dataset> shards;
  shards.reserve(k);
  for (const auto& r : rows) shards.push_back(dataset.subset(r));
  return shards;
}

ClientPartition train_test_split(const Dataset& shard, double train_fraction,
                                 std::uint64_t rng_seed, int client_id) {
  require(train_fraction > 0.0 && train_fraction < 1.0,
          "train_test_split: train_fraction must lie in (0, 1)");
  const auto n = shard.size();
  if (n < 2)
    fail(ErrorKind::partition, "client " + std::to_string(client_id) +
                                   ": shard has fewer than 2 samples");
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n)
    fail(ErrorKind::partition, "client " + std::to_string(client_id) +
                                   ": split leaves an empty train or test set");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(rng_seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {client_id, shard.subset(train), shard.subset(test)};
}

double heterogeneity_stat(const std::vector<Dataset>& shards) {
  require(shards.size() >= 2, "heterogeneity_stat: need at least 2 shards");
  std::vector<std::array<double, 4>> dist;
  for (const auto& s : shards) {
    if (s.empty()) fail(ErrorKind::partition, "heterogeneity_stat: empty shard");
    const auto c = s.cell_counts();
    std::array<double, 4> d{};
    for (std::size_t j = 0; j < 4; ++j)
      d[j] = static_cast<double>(c[j]) / static_cast<double>(s.size());
    dist.push_back(d);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    for (std::size_t j = i + 1; j < dist.size(); ++j) {
      double tv = 0.0;
      for (std::size_t c = 0; c < 4; ++c) tv += std::abs(dist[i][c] - dist[j][c]);
      worst = std::max(worst, 0.5 * tv);
    }
  }
  return std::min(worst, 1.0);
}

bool is_degenerate(const std::vector<ClientPartition>& partitions) {
  return std::any_of(partitions.begin(), partitions.end(), [](const ClientPartition& p) {
    return p.train.has_empty_cell() || p.test.has_empty_cell();
  });
}

nlohmann::json partition_manifest(const std::vector<ClientPartition>& partitions) {
  nlohmann::json clients = nlohmann::json::array();
  for (const auto& p : partitions)
    clients.push_back({{"client", p.client_id}, {"train", p.train.ids}, {"test", p.test.ids}});
  return {{"clients", clients}};
}

}  // namespace fairfl
