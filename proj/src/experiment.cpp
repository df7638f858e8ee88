#include "fairfl/experiment.hpp"

#include <chrono>
#include <cmath>

#include "fairfl/error.hpp"
#include "fairfl/metrics.hpp"
#include "fairfl/rng.hpp"

namespace fairfl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Fills accuracy / balanced accuracy / EOD from (possibly expected)
/// confusion counts on the client's test set.
void fill_metrics(ClientResult& row, const GroupRates& rates) {
  const auto pooled = rates.pooled();
  row.accuracy = accuracy(pooled);
  if (pooled.positives() > 0 && pooled.negatives() > 0) row.balanced_accuracy = balanced_accuracy(pooled);
  if (rates.measurable()) {
    row.eod = eod(rates);
  } else if (row.status == "ok") {
    row.status = "fairness_unmeasurable";
  }
}

std::optional<double> weighted(const std::vector<ClientResult>& rows,
                               std::optional<double> ClientResult::*field) {
  std::vector<double> values;
  std::vector<std::size_t> sizes;
  for (const auto& r : rows) {
    if (!(r.*field) || r.n_test == 0) continue;
    values.push_back(*(r.*field));
    sizes.push_back(r.n_test);
  }
  if (values.empty()) return std::nullopt;
  return weighted_average(values, sizes);
}

}  // namespace

Dataset load_dataset(const ExperimentConfig& config) {
  switch (config.dataset) {
    case DataSource::adult: return load_adult(config.csv_path.value());
    case DataSource::compas: return load_compas(config.csv_path.value());
    case DataSource::synthetic: return synth_generate(config.synthetic, config.synthetic_seed);
  }
  fail(ErrorKind::invalid_argument, "unknown dataset");
}

std::vector<ClientPartition> make_partitions(const Dataset& data, const ExperimentConfig& config,
                                             std::uint64_t seed, std::size_t* attempts) {
  const auto k = config.fed.clients;
  const HeterogeneityLevel alpha(config.alpha);
  for (std::size_t attempt = 0; attempt < config.max_partition_attempts; ++attempt) {
    if (attempts) *attempts = attempt + 1;
    const auto shards =
        dirichlet_partition(data, alpha, k, derive_seed(seed, {stream::partition, attempt}));
    const bool tiny = std::any_of(shards.begin(), shards.end(),
                                  [](const Dataset& s) { return s.size() < 2; });
    if (tiny) {
      if (config.degenerate_policy == DegeneratePolicy::keep)
        fail(ErrorKind::partition, "a client received fewer than 2 samples");
      continue;
    }
    std::vector<ClientPartition> parts;
    parts.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      const int id = static_cast<int>(i + 1);
      parts.push_back(train_test_split(shards[i], config.train_fraction,
                                       derive_seed(seed, {stream::split, i + 1}), id));
    }
    if (config.degenerate_policy == DegeneratePolicy::keep || !is_degenerate(parts)) return parts;
  }
  fail(ErrorKind::partition, "no non-degenerate partition found in " +
                                 std::to_string(config.max_partition_attempts) + " attempts");
}

SeedResult run_seed(const Dataset& data, const ExperimentConfig& config, std::uint64_t seed,
                    const RunHooks& hooks) {
  SeedResult result;
  result.seed = seed;
  auto partitions = make_partitions(data, config, seed, &result.partition_attempts);
  if (hooks.after_split) hooks.after_split(seed, partitions);

  std::vector<std::size_t> dims{data.dim()};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(1);
  const auto initial = init_model(std::span<const std::size_t>(dims), seed);

  FedConfig fed = config.fed;
  fed.train.rng_seed = seed;
  const auto train_start = Clock::now();
  const auto trained = fedavg_train(initial, partitions, fed);
  result.train_seconds = seconds_since(train_start);
  if (hooks.after_training) hooks.after_training(seed, trained);
  const auto& global = trained.weights;

  for (const auto& part : partitions) {
    ClientResult row;
    row.client = part.client_id;
    row.n_train = part.train.size();
    row.n_test = part.test.size();
    const auto client = static_cast<std::uint64_t>(part.client_id);

    const auto debias_start = Clock::now();
    GroupRates rates;
    switch (config.method) {
      case Method::fedavg: {
        const auto yhat = predict_labels(global, part.test);
        rates = count_by_group(yhat, part.test.labels, part.test.sensitive);
        break;
      }
      case Method::pp: {
        const auto fit_yhat = predict_labels(global, part.train);
        auto predictor = DerivedPredictor::identity();
        try {
          predictor = fit_derived_predictor(
              estimate_joint(fit_yhat, part.train.labels, part.train.sensitive));
          row.predictor = predictor;
        } catch (const UnmeasurableError&) {
          row.status = "pp_unfittable";
        }
        if (hooks.after_debias) hooks.after_debias(seed, part.client_id, to_json(predictor));
        const auto yhat = predict_labels(global, part.test);
        if (config.pp_evaluation == PpEvaluation::expected) {
          rates = expected_confusion(predictor, yhat, part.test.labels, part.test.sensitive);
        } else {
          Rng rng(derive_seed(seed, {stream::flip, client}));
          std::vector<int> flipped(yhat.size());
          for (std::size_t i = 0; i < yhat.size(); ++i)
            flipped[i] = apply_derived(predictor, yhat[i], part.test.sensitive[i], rng);
          rates = count_by_group(flipped, part.test.labels, part.test.sensitive);
        }
        break;
      }
      case Method::ft: {
        auto model = global;
        try {
          FtConfig ft = config.ft;
          ft.rng_seed = derive_seed(seed, {stream::finetune, client});
          model = finetune_last_layer(global, part.train, ft);
        } catch (const UnmeasurableError&) {
          row.status = "ft_unfittable";
        }
        if (hooks.after_debias) hooks.after_debias(seed, part.client_id, to_json(model));
        const auto yhat = predict_labels(model, part.test);
        rates = count_by_group(yhat, part.test.labels, part.test.sensitive);
        break;
      }
    }
    result.debias_seconds += seconds_since(debias_start);
    fill_metrics(row, rates);
    result.clients.push_back(std::move(row));
  }
  // The base-model evaluation is counted with debiasing; for fedavg that is
  // the whole "debias" time.
  result.elapsed_seconds = result.train_seconds + result.debias_seconds;
  result.comm_rounds = count_communication(config.fed.global_rounds, config.fed.clients);

  auto& avg = result.average;
  avg.client = 0;
  for (const auto& r : result.clients) {
    avg.n_train += r.n_train;
    avg.n_test += r.n_test;
  }
  avg.accuracy = weighted(result.clients, &ClientResult::accuracy);
  avg.balanced_accuracy = weighted(result.clients, &ClientResult::balanced_accuracy);
  avg.eod = weighted(result.clients, &ClientResult::eod);
  return result;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RunHooks& hooks) {
  config.validate();
  const auto data = load_dataset(config);

  ExperimentReport report;
  report.dataset = to_string(config.dataset);
  report.method = to_string(config.method);
  report.alpha = config.alpha;
  report.clients = config.fed.clients;
  report.global_rounds = config.fed.global_rounds;
  for (auto seed : config.seeds) report.seeds.push_back(run_seed(data, config, seed, hooks));
  report.summary = summarize(report.seeds);
  return report;
}

namespace {

MetricSummary summarize_values(const std::vector<double>& v) {
  MetricSummary s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

SummaryRow summarize_row(int client, const std::vector<const ClientResult*>& rows) {
  std::vector<double> acc, ba, e;
  for (const auto* r : rows) {
    if (r->accuracy) acc.push_back(*r->accuracy);
    if (r->balanced_accuracy) ba.push_back(*r->balanced_accuracy);
    if (r->eod) e.push_back(*r->eod);
  }
  return {client, summarize_values(acc), summarize_values(ba), summarize_values(e)};
}

}  // namespace

Summary summarize(std::span<const SeedResult> seeds) {
  require(!seeds.empty(), "summarize: no seeds");
  Summary s;
  std::vector<const ClientResult*> avg;
  std::vector<double> elapsed;
  for (const auto& sr : seeds) {
    avg.push_back(&sr.average);
    elapsed.push_back(sr.elapsed_seconds);
  }
  s.rows.push_back(summarize_row(0, avg));
  const auto k = seeds.front().clients.size();
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<const ClientResult*> rows;
    for (const auto& sr : seeds)
      if (c < sr.clients.size()) rows.push_back(&sr.clients[c]);
    s.rows.push_back(summarize_row(static_cast<int>(c + 1), rows));
  }
  s.elapsed_seconds = summarize_values(elapsed);
  return s;
}

}  // namespace fairfl
