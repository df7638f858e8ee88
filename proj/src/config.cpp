#include <fstream>
#include <set>

#include "fairfl/error.hpp"
#include "fairfl/experiment.hpp"

namespace fairfl {

std::string to_string(Method m) {
  switch (m) {
    case Method::fedavg: return "fedavg";
    case Method::pp: return "pp";
    case Method::ft: return "ft";
  }
  return "unknown";
}

Method parse_method(const std::string& s) {
  if (s == "fedavg") return Method::fedavg;
  if (s == "pp") return Method::pp;
  if (s == "ft") return Method::ft;
  fail(ErrorKind::invalid_argument, "unknown method '" + s + "' (expected fedavg|pp|ft)");
}

namespace {

DataSource parse_source(const std::string& s) {
  if (s == "adult") return DataSource::adult;
  if (s == "compas") return DataSource::compas;
  if (s == "synthetic") return DataSource::synthetic;
  fail(ErrorKind::invalid_argument, "unknown dataset '" + s + "' (expected adult|compas|synthetic)");
}

std::string to_string(DegeneratePolicy p) {
  return p == DegeneratePolicy::keep ? "keep" : "reject_and_redraw";
}

DegeneratePolicy parse_policy(const std::string& s) {
  if (s == "keep") return DegeneratePolicy::keep;
  if (s == "reject_and_redraw") return DegeneratePolicy::reject_and_redraw;
  fail(ErrorKind::invalid_argument, "unknown degenerate_partition_policy '" + s + "'");
}

std::string to_string(PpEvaluation e) { return e == PpEvaluation::sampled ? "sampled" : "expected"; }

PpEvaluation parse_pp_evaluation(const std::string& s) {
  if (s == "expected") return PpEvaluation::expected;
  if (s == "sampled") return PpEvaluation::sampled;
  fail(ErrorKind::invalid_argument, "unknown pp_evaluation '" + s + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  require(alpha > 0.0, "alpha must be positive");
  require(fed.clients >= 1, "clients must be >= 1");
  require(!seeds.empty(), "seeds must be nonempty");
  require(fed.train.learning_rate > 0.0, "learning_rate must be positive");
  require(fed.train.batch_size >= 1, "batch_size must be >= 1");
  require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must lie in (0, 1)");
  require(max_partition_attempts >= 1, "max_partition_attempts must be >= 1");
  for (auto h : hidden_dims) require(h >= 1, "hidden_dims entries must be >= 1");
  if (method == Method::ft) {
    require(!hidden_dims.empty(), "method ft requires a model with at least 2 layers (hidden_dims)");
    require(ft.eta > 0.0, "ft_eta must be positive");
    require(ft.alpha_ft >= 0.0, "ft_alpha must be >= 0");
  }
  if (dataset != DataSource::synthetic)
    require(csv_path.has_value(), "csv_path is required for dataset " + to_string(dataset));
}

ExperimentConfig default_config(DataSource dataset) {
  ExperimentConfig c;
  c.dataset = dataset;
  c.fed.clients = 4;
  c.fed.train.learning_rate = 0.01;
  c.fed.train.batch_size = 32;
  c.fed.train.local_epochs = 1;
  c.fed.global_rounds = dataset == DataSource::compas ? 40 : 20;
  c.ft.eta = 5e-3;
  c.ft.batch_size = 256;
  c.ft.alpha_ft = dataset == DataSource::adult ? 1.0 : 2.0;
  c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  return c;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{
      "dataset",        "csv_path",      "synthetic",         "alpha",
      "clients",        "seeds",         "method",            "global_rounds",
      "local_epochs",   "learning_rate", "batch_size",        "parallel_clients",
      "hidden_dims",    "ft_alpha",      "ft_eta",            "ft_rounds",
      "ft_batch_size",  "train_fraction", "degenerate_partition_policy",
      "max_partition_attempts", "pp_evaluation"};
  require(j.is_object(), "config must be a JSON object");
  for (const auto& [key, value] : j.items())
    require(known.count(key) == 1, "unknown config field '" + key + "'");

  const auto source = parse_source(j.value("dataset", std::string("synthetic")));
  auto c = default_config(source);
  try {
    if (j.contains("csv_path")) c.csv_path = j.at("csv_path").get<std::string>();
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      read(s, "n", c.synthetic.n);
      read(s, "dim", c.synthetic.dim);
      read(s, "group_rates", c.synthetic.group_rates);
      read(s, "separation", c.synthetic.separation);
      read(s, "seed", c.synthetic_seed);
    }
    read(j, "alpha", c.alpha);
    read(j, "clients", c.fed.clients);
    read(j, "seeds", c.seeds);
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    read(j, "global_rounds", c.fed.global_rounds);
    read(j, "local_epochs", c.fed.train.local_epochs);
    read(j, "learning_rate", c.fed.train.learning_rate);
    read(j, "batch_size", c.fed.train.batch_size);
    read(j, "parallel_clients", c.fed.parallel_clients);
    read(j, "hidden_dims", c.hidden_dims);
    read(j, "ft_alpha", c.ft.alpha_ft);
    read(j, "ft_eta", c.ft.eta);
    read(j, "ft_rounds", c.ft.rounds);
    read(j, "ft_batch_size", c.ft.batch_size);
    read(j, "train_fraction", c.train_fraction);
    if (j.contains("degenerate_partition_policy"))
      c.degenerate_policy = parse_policy(j.at("degenerate_partition_policy").get<std::string>());
    read(j, "max_partition_attempts", c.max_partition_attempts);
    if (j.contains("pp_evaluation"))
      c.pp_evaluation = parse_pp_evaluation(j.at("pp_evaluation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j{
      {"dataset", to_string(c.dataset)},
      {"alpha", c.alpha},
      {"clients", c.fed.clients},
      {"seeds", c.seeds},
      {"method", to_string(c.method)},
      {"global_rounds", c.fed.global_rounds},
      {"local_epochs", c.fed.train.local_epochs},
      {"learning_rate", c.fed.train.learning_rate},
      {"batch_size", c.fed.train.batch_size},
      {"parallel_clients", c.fed.parallel_clients},
      {"hidden_dims", c.hidden_dims},
      {"ft_alpha", c.ft.alpha_ft},
      {"ft_eta", c.ft.eta},
      {"ft_rounds", c.ft.rounds},
      {"ft_batch_size", c.ft.batch_size},
      {"train_fraction", c.train_fraction},
      {"degenerate_partition_policy", to_string(c.degenerate_policy)},
      {"max_partition_attempts", c.max_partition_attempts},
      {"pp_evaluation", to_string(c.pp_evaluation)},
      {"synthetic",
       {{"n", c.synthetic.n},
        {"dim", c.synthetic.dim},
        {"group_rates", c.synthetic.group_rates},
        {"separation", c.synthetic.separation},
        {"seed", c.synthetic_seed}}}};
  if (c.csv_path) j["csv_path"] = c.csv_path->string();
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_argument, "config " + path.string() + ": " + e.what());
  }
  auto c = config_from_json(j);
  if (c.csv_path && c.csv_path->is_relative())
    c.csv_path = path.parent_path() / *c.csv_path;
  return c;
}

}  // namespace fairfl
