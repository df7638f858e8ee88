#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "fairfl/error.hpp"
#include "fairfl/experiment.hpp"

namespace fairfl {

namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json client_json(const ClientResult& r) {
  json j{{"client", r.client},
         {"n_train", r.n_train},
         {"n_test", r.n_test},
         {"accuracy", opt(r.accuracy)},
         {"balanced_accuracy", opt(r.balanced_accuracy)},
         {"eod", opt(r.eod)},
         {"status", r.status}};
  if (r.predictor) j["predictor"] = to_json(*r.predictor);
  return j;
}

ClientResult client_from(const json& j) {
  ClientResult r;
  r.client = j.at("client").get<int>();
  r.n_train = j.at("n_train").get<std::size_t>();
  r.n_test = j.at("n_test").get<std::size_t>();
  r.accuracy = opt_from(j, "accuracy");
  r.balanced_accuracy = opt_from(j, "balanced_accuracy");
  r.eod = opt_from(j, "eod");
  r.status = j.at("status").get<std::string>();
  if (j.contains("predictor")) r.predictor = derived_predictor_from_json(j.at("predictor"));
  return r;
}

json metric_json(const MetricSummary& m) {
  if (m.count == 0) return {{"mean", nullptr}, {"std", nullptr}, {"count", 0}};
  return {{"mean", m.mean}, {"std", m.std}, {"count", m.count}};
}

MetricSummary metric_from(const json& j) {
  MetricSummary m;
  m.count = j.at("count").get<std::size_t>();
  if (m.count > 0) {
    m.mean = j.at("mean").get<double>();
    m.std = j.at("std").get<double>();
  }
  return m;
}

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << *v;
}

std::string cell(const MetricSummary& m) {
  if (m.count == 0) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << m.mean << " +- " << m.std;
  return s.str();
}

}  // namespace

json to_json(const ExperimentReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    json clients = json::array();
    for (const auto& c : s.clients) clients.push_back(client_json(c));
    seeds.push_back({{"seed", s.seed},
                     {"clients", clients},
                     {"average", client_json(s.average)},
                     {"partition_attempts", s.partition_attempts},
                     {"train_seconds", s.train_seconds},
                     {"debias_seconds", s.debias_seconds},
                     {"elapsed_seconds", s.elapsed_seconds},
                     {"comm_rounds", s.comm_rounds}});
  }
  json rows = json::array();
  for (const auto& row : r.summary.rows)
    rows.push_back({{"client", row.client},
                    {"accuracy", metric_json(row.accuracy)},
                    {"balanced_accuracy", metric_json(row.balanced_accuracy)},
                    {"eod", metric_json(row.eod)}});
  return {{"dataset", r.dataset},
          {"method", r.method},
          {"alpha", r.alpha},
          {"clients", r.clients},
          {"global_rounds", r.global_rounds},
          {"seeds", seeds},
          {"summary", {{"rows", rows}, {"elapsed_seconds", metric_json(r.summary.elapsed_seconds)}}}};
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    r.clients = j.at("clients").get<std::size_t>();
    r.global_rounds = j.at("global_rounds").get<std::size_t>();
    for (const auto& s : j.at("seeds")) {
      SeedResult sr;
      sr.seed = s.at("seed").get<std::uint64_t>();
      for (const auto& c : s.at("clients")) sr.clients.push_back(client_from(c));
      sr.average = client_from(s.at("average"));
      sr.partition_attempts = s.at("partition_attempts").get<std::size_t>();
      sr.train_seconds = s.at("train_seconds").get<double>();
      sr.debias_seconds = s.at("debias_seconds").get<double>();
      sr.elapsed_seconds = s.at("elapsed_seconds").get<double>();
      sr.comm_rounds = s.at("comm_rounds").get<std::size_t>();
      r.seeds.push_back(std::move(sr));
    }
    const auto& summary = j.at("summary");
    for (const auto& row : summary.at("rows"))
      r.summary.rows.push_back({row.at("client").get<int>(), metric_from(row.at("accuracy")),
                                metric_from(row.at("balanced_accuracy")),
                                metric_from(row.at("eod"))});
    r.summary.elapsed_seconds = metric_from(summary.at("elapsed_seconds"));
  } catch (const json::exception& e) {
    fail(ErrorKind::io, std::string("malformed report: ") + e.what());
  }
  return r;
}

void write_report_csv(std::ostream& out, const ExperimentReport& r) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "seed,client,n_train,n_test,accuracy,balanced_accuracy,eod,method,alpha,comm_rounds,"
         "elapsed_s\n";
  for (const auto& s : r.seeds) {
    auto line = [&](const ClientResult& c, const std::string& id) {
      out << s.seed << ',' << id << ',' << c.n_train << ',' << c.n_test << ',';
      put(out, c.accuracy);
      out << ',';
      put(out, c.balanced_accuracy);
      out << ',';
      put(out, c.eod);
      out << ',' << r.method << ',' << r.alpha << ',' << s.comm_rounds << ',' << s.elapsed_seconds
          << '\n';
    };
    for (const auto& c : s.clients) line(c, std::to_string(c.client));
    line(s.average, "avg");
  }
}

void write_report(const ExperimentReport& r, const std::filesystem::path& path,
                  ReportFormat format) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  if (format == ReportFormat::csv) {
    write_report_csv(out, r);
  } else {
    out << to_json(r).dump(2) << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

ExperimentReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::io, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

std::string format_summary_table(const ExperimentReport& r) {
  std::ostringstream out;
  out << r.dataset << "  method=" << r.method << "  alpha=" << r.alpha << "  K=" << r.clients
      << "  T=" << r.global_rounds << "  seeds=" << r.seeds.size() << '\n';
  auto block = [&](const char* name, MetricSummary SummaryRow::*field) {
    for (const auto& row : r.summary.rows) {
      out << std::left << std::setw(6) << name << std::setw(5)
          << (row.client == 0 ? std::string("Avg") : "C" + std::to_string(row.client))
          << cell(row.*field) << '\n';
    }
  };
  block("Acc.", &SummaryRow::accuracy);
  block("BA", &SummaryRow::balanced_accuracy);
  block("EOD", &SummaryRow::eod);
  out << std::left << std::setw(11) << "Time" << cell(r.summary.elapsed_seconds) << " s\n";
  if (!r.seeds.empty())
    out << std::left << std::setw(11) << "Comm." << r.seeds.front().comm_rounds << '\n';
  return out.str();
}

}  // namespace fairfl
