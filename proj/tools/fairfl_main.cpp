// fairfl: run federated training + local debiasing experiments.
//
//   fairfl run --config <path> [--method fedavg|pp|ft] [--alpha <real>]
//              [--seeds a,b,c] [--out <path>] [--format csv|json]
//              [--manifest-out <path>] [--rounds-out <path>]
//
// Exit codes: 0 ok, 2 usage/config, 3 dataset, 4 partition, 5 I/O,
// 6 solver, 7 other. Failures print one JSON object on stderr:
//   {"error": "<class>", "message": "..."}

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairfl/error.hpp"
#include "fairfl/experiment.hpp"

namespace {

int exit_code(fairfl::ErrorKind kind) {
  using fairfl::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::dataset: return 3;
    case ErrorKind::partition:
    case ErrorKind::unmeasurable: return 4;
    case ErrorKind::io: return 5;
    case ErrorKind::solver: return 6;
  }
  return 7;
}

int report_error(std::string_view kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fairfl::fail(fairfl::ErrorKind::invalid_argument, "bad seed '" + item + "'");
    }
  }
  fairfl::require(!seeds.empty(), "--seeds is empty");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated training with local fairness post-processing"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  std::string config_path, method, seeds, out_path, format = "csv", manifest_out, rounds_out;
  double alpha = 0.0;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--method", method, "fedavg | pp | ft")
      ->check(CLI::IsMember({"fedavg", "pp", "ft"}));
  run->add_option("--alpha", alpha, "Dirichlet concentration")->check(CLI::PositiveNumber);
  run->add_option("--seeds", seeds, "Comma-separated seed list");
  run->add_option("--out", out_path, "Report output path");
  run->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--manifest-out", manifest_out, "Write partition manifests (JSON)");
  run->add_option("--rounds-out", rounds_out, "Write FedAvg round logs (CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), 2);
  }

  try {
    auto config = fairfl::load_config(config_path);
    if (!method.empty()) config.method = fairfl::parse_method(method);
    if (run->count("--alpha") > 0) config.alpha = alpha;
    if (!seeds.empty()) config.seeds = parse_seeds(seeds);

    nlohmann::json manifests = nlohmann::json::array();
    std::ostringstream round_csv;
    round_csv << "seed,round,messages,elapsed_seconds\n";
    fairfl::RunHooks hooks;
    if (!manifest_out.empty()) {
      hooks.after_split = [&](std::uint64_t seed, std::vector<fairfl::ClientPartition>& parts) {
        auto m = fairfl::partition_manifest(parts);
        m["seed"] = seed;
        m["alpha"] = config.alpha;
        manifests.push_back(std::move(m));
      };
    }
    if (!rounds_out.empty()) {
      hooks.after_training = [&](std::uint64_t seed, const fairfl::FedResult& fed) {
        for (const auto& r : fed.rounds)
          round_csv << seed << ',' << r.round << ',' << r.messages_sent << ',' << r.elapsed_seconds
                    << '\n';
      };
    }

    const auto report = fairfl::run_experiment(config, hooks);
    std::cout << fairfl::format_summary_table(report);

    const auto fmt = format == "json" ? fairfl::ReportFormat::json : fairfl::ReportFormat::csv;
    if (!out_path.empty()) {
      fairfl::write_report(report, out_path, fmt);
    } else if (fmt == fairfl::ReportFormat::json) {
      std::cout << fairfl::to_json(report).dump(2) << '\n';
    } else {
      fairfl::write_report_csv(std::cout, report);
    }
    if (!manifest_out.empty()) {
      std::ofstream m(manifest_out);
      if (!(m << manifests.dump(2) << '\n'))
        fairfl::fail(fairfl::ErrorKind::io, "cannot write " + manifest_out);
    }
    if (!rounds_out.empty()) {
      std::ofstream r(rounds_out);
      if (!(r << round_csv.str())) fairfl::fail(fairfl::ErrorKind::io, "cannot write " + rounds_out);
    }
  } catch (const fairfl::Error& e) {
    return report_error(fairfl::to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 7);
  }
  return 0;
}
