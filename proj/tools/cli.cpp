#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpfusion/config.hpp"
#include "mpfusion/experiment.hpp"
#include "mpfusion/gaussian.hpp"
#include "mpfusion/io.hpp"
#include "mpfusion/version.hpp"

namespace mpfusion::cli {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ExperimentConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  ExperimentConfig config;
  if (path) {
    apply_settings(config, parse_key_values(read_text_file(*path)));
  }
  KeyValues sets;
  for (const auto& o : overrides) sets.push_back(split_override(o));
  apply_settings(config, sets);
  return config;
}

std::string path_label(FusionPath p) {
  switch (p) {
    case FusionPath::exact:
      return "exact";
    case FusionPath::clamped:
      return "clamped";
    case FusionPath::product_only:
      return "product_only";
  }
  return "unknown";
}

std::string vector_text(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(options.config_path, options.overrides);
    if (options.seed) config.master_seed = *options.seed;
    config.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  const std::string started = utc_now();
  ResultTable table;
  try {
    table = run_experiment(config, options.threads);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  const std::string finished = utc_now();

  nlohmann::ordered_json manifest;
  manifest["tool"] = "mpfusion";
  manifest["tool_version"] = kVersion;
  manifest["master_seed"] = config.master_seed;
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : describe(config)) cfg[k] = v;
  manifest["config"] = cfg;
  manifest["n_total"] = table.n_total;
  manifest["K"] = table.K;
  manifest["n_per_filter"] = table.n_per_filter;
  manifest["mse_state"] = "squared state error divided by d_x";
  manifest["mse_param"] = "squared error of the unknown parameters divided by d_theta_g";
  manifest["summary_excludes"] = "detail rows flagged failed";
  nlohmann::ordered_json diag;
  for (const auto& [alg, d] : table.diagnostics) {
    diag[std::string(to_string(alg))] = {{"failed_realizations", d.failed_realizations},
                                         {"fusion_clamped", d.fusion.clamped},
                                         {"fusion_product_only", d.fusion.product_only},
                                         {"fusion_failures", d.fusion.failures}};
  }
  manifest["diagnostics"] = diag;
  manifest["started_utc"] = started;
  manifest["finished_utc"] = finished;

  try {
    std::filesystem::create_directories(options.out_dir);
    const std::filesystem::path dir(options.out_dir);
    write_text_file((dir / "details.csv").string(), details_csv(table));
    write_text_file((dir / "summary.csv").string(), summary_csv(table));
    write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  out << "wrote " << table.details.size() << " detail rows and " << table.summary.size() << " summary rows to "
      << options.out_dir << '\n';
  return kExitOk;
}

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(options.config_path, options.overrides);
    if (options.seed) config.master_seed = *options.seed;
    config.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  const Trajectory traj = simulate_realization(config, realization_seed(config.master_seed, options.realization));
  try {
    write_text_file(options.out_path, trajectory_csv(traj));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  out << "wrote " << traj.steps() << " steps to " << options.out_path << '\n';
  return kExitOk;
}

int cmd_fuse_debug(const std::string& inputs_path, std::ostream& out, std::ostream& err) {
  FusionProblem problem;
  try {
    problem = parse_fusion_problem(read_text_file(inputs_path));
  } catch (const ConfigError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kExitUsage;
  }
  FusionResult result;
  try {
    result = fuse(problem.locals, problem.prior);
  } catch (const std::exception& e) {
    err << "fusion failed: " << e.what() << '\n';
    return kExitUsage;
  }
  out << "K = " << problem.locals.size() << '\n';
  out << "path = " << path_label(result.path) << '\n';
  if (result.path != FusionPath::exact) {
    out << "notice: fused precision was not positive definite; fallback '" << path_label(result.path)
        << "' applied\n";
  }
  out << "mean = " << vector_text(result.fused.mean()) << '\n';
  const Matrix& c = result.fused.cov();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    out << (i == 0 ? "cov = " : "      ") << vector_text(c.row(i).transpose()) << '\n';
  }
  return kExitOk;
}

int main(int argc, char** argv) {
  CLI::App app{"Multiple particle filtering with fused static-parameter posteriors"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunOptions run;
  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run the Monte Carlo comparison and write CSV results");
  run_cmd->add_option("--config", config_path, "Config file (key = value lines)");
  run_cmd->add_option("--set", run.overrides, "Override a setting, key=value (repeatable)");
  run_cmd->add_option("--out", run.out_dir, "Output directory");
  run_cmd->add_option("--seed", run.seed, "Master seed (overrides master_seed)");
  run.threads = std::max(1u, std::thread::hardware_concurrency());
  run_cmd->add_option("--threads", run.threads, "Worker threads")->check(CLI::PositiveNumber);

  SimulateOptions sim;
  std::string sim_config;
  auto* sim_cmd = app.add_subcommand("simulate", "Write one ground-truth trajectory as CSV");
  sim_cmd->add_option("--config", sim_config, "Config file (key = value lines)");
  sim_cmd->add_option("--set", sim.overrides, "Override a setting, key=value (repeatable)");
  sim_cmd->add_option("--seed", sim.seed, "Master seed");
  sim_cmd->add_option("--realization", sim.realization, "Realization index");
  sim_cmd->add_option("--out", sim.out_path, "Output CSV path");

  std::string fuse_input;
  auto* fuse_cmd = app.add_subcommand("fuse-debug", "Fuse Gaussians from a text file and print the result");
  fuse_cmd->add_option("input", fuse_input, "Input file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*run_cmd) {
    if (!config_path.empty()) run.config_path = config_path;
    return cmd_run(run, std::cout, std::cerr);
  }
  if (*sim_cmd) {
    if (!sim_config.empty()) sim.config_path = sim_config;
    return cmd_simulate(sim, std::cout, std::cerr);
  }
  return cmd_fuse_debug(fuse_input, std::cout, std::cerr);
}

}  // namespace mpfusion::cli
