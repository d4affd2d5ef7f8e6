#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scope/harness.hpp"

namespace h = scope::harness;

namespace {

h::ExperimentConfig load(const std::string& path, const std::optional<std::string>& out,
                         const std::optional<int>& jobs, const std::optional<std::uint64_t>& seed) {
  auto cfg = h::load_config(path);
  if (out) cfg.output_dir = *out;
  if (jobs) cfg.jobs = *jobs;
  if (seed) cfg.master_seed = *seed;
  cfg.validate();
  return cfg;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe configuration exploration under a power cap: experiments and reporting"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run every policy on every workload, cap and start");
  run->add_option("config", config_path, "Experiment YAML file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed (overrides the config)");

  std::string sweep_kind;
  auto* sw = app.add_subcommand("sweep", "Vary one axis of the run matrix");
  sw->add_option("--kind", sweep_kind, "gamma | interval | model | offline-fraction")
      ->required()
      ->check(CLI::IsMember({"gamma", "interval", "model", "offline-fraction"}));
  sw->add_option("config", config_path, "Experiment YAML file")->required()->check(CLI::ExistingFile);
  sw->add_option("--out", out_dir, "Output directory (overrides the config)");
  sw->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sw->add_option("--seed", seed, "Master seed (overrides the config)");

  std::string group_by = "policy";
  std::string in_path = "results/results.csv";
  std::optional<std::string> report_out;
  bool best = false;
  auto* rd = app.add_subcommand("report-data", "Aggregate a results CSV into per-group means");
  rd->add_option("--group-by", group_by, "Comma-separated key columns")->capture_default_str();
  rd->add_option("--in", in_path, "results.csv to read")->capture_default_str();
  rd->add_option("--out", report_out, "Write the table here instead of stdout");
  rd->add_flag("--best-interval", best, "Per (policy, workload), the interval with the lowest violation rate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = load(config_path, out_dir, jobs, seed);
      const auto rows = h::execute(cfg, std::nullopt);
      std::cerr << rows.size() << " rows written to " << cfg.output_dir.string() << "\n";
    } else if (sw->parsed()) {
      const auto cfg = load(config_path, out_dir, jobs, seed);
      const auto rows = h::execute(cfg, h::parse_sweep_kind(sweep_kind));
      std::cerr << rows.size() << " rows written to " << cfg.output_dir.string() << "\n";
    } else if (rd->parsed()) {
      const auto rows = h::read_csv(in_path);
      h::Table table;
      std::vector<std::string> columns;
      if (best) {
        table = h::best_interval(rows);
        columns = {"policy", "workload", "interval_sec", "violation_rate"};
      } else {
        columns = split(group_by);
        if (columns.empty()) throw std::invalid_argument("--group-by needs at least one column");
        table = h::report_data(rows, columns);
        for (const char* c : {"n", "speedup", "violation_rate", "violation_magnitude", "violation_magnitude_all", "poc",
                              "coverage", "avm", "run_length_sec"})
          columns.emplace_back(c);
      }
      if (report_out) {
        std::ofstream f(*report_out);
        if (!f) throw std::runtime_error("cannot write " + *report_out);
        h::write_table(f, table, columns);
      } else {
        h::write_table(std::cout, table, columns);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
