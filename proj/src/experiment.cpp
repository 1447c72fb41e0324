#include "mpfusion/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

namespace mpfusion {

void ExperimentConfig::validate() {
  if (d_x == 0) throw ConfigError("d_x", "must be positive");
  if (d_theta_g < 1 || d_theta_g > 5) throw ConfigError("d_theta_g", "must be between 1 and 5");
  if (!(sigma_u2 > 0.0) || !std::isfinite(sigma_u2)) throw ConfigError("sigma_u2", "must be positive");
  if (!(sigma_v2 > 0.0) || !std::isfinite(sigma_v2)) throw ConfigError("sigma_v2", "must be positive");
  if (T == 0) throw ConfigError("T", "must be at least 1");
  if (particles_per_unit == 0) throw ConfigError("particles_per_unit", "must be positive");
  if (realizations == 0) throw ConfigError("realizations", "must be positive");
  if (algorithms.empty()) throw ConfigError("algorithms", "must list at least one algorithm");
  if (std::set<Algorithm>(algorithms.begin(), algorithms.end()).size() != algorithms.size()) {
    throw ConfigError("algorithms", "contains duplicates");
  }
  if (!(sigma_rw2 >= 0.0) || !std::isfinite(sigma_rw2)) throw ConfigError("sigma_rw2", "must be non-negative");
  if (!(pd_floor > 0.0) || !std::isfinite(pd_floor)) throw ConfigError("pd_floor", "must be positive");
  for (double v : theta_full) {
    if (!std::isfinite(v)) throw ConfigError("theta_full", "entries must be finite");
  }
  if (K == 0) {
    K = d_x % 2 == 0 ? d_x / 2 : d_x;
  }
  if (d_x % K != 0) {
    throw ConfigError("K", "d_x=" + std::to_string(d_x) + " is not divisible by K=" + std::to_string(K));
  }
  if (n_total() % K != 0) {
    throw ConfigError("K", "N_total=" + std::to_string(n_total()) + " is not divisible by K=" + std::to_string(K));
  }
}

std::size_t ExperimentConfig::resolved_K() const {
  if (K != 0) return K;
  return d_x % 2 == 0 ? d_x / 2 : d_x;
}

std::size_t ExperimentConfig::n_total() const { return particles_per_unit * d_theta_g * d_x; }

BenchmarkModel ExperimentConfig::model() const { return BenchmarkModel(d_x, d_theta_g, theta_full, sigma_u2, sigma_v2); }

std::uint64_t realization_seed(std::uint64_t master_seed, std::size_t realization) {
  return derive_seed(master_seed, realization, "realization");
}

std::uint64_t trajectory_seed(std::uint64_t rs) { return derive_seed(rs, 0, "trajectory"); }

std::uint64_t filter_seed(std::uint64_t rs, Algorithm algorithm) {
  return derive_seed(rs, 0, std::string("filter/") + std::string(to_string(algorithm)));
}

std::vector<ErrorRecord> score_estimates(const Trajectory& truth, const Vector& theta_truth,
                                         const std::vector<Estimates>& estimates, std::size_t failed_from) {
  std::vector<ErrorRecord> out;
  out.reserve(estimates.size());
  const auto d_x = static_cast<double>(truth.states.cols());
  const auto d_th = static_cast<double>(theta_truth.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const std::size_t t = i + 1;
    ErrorRecord r;
    r.t = t;
    r.mse_state = (estimates[i].state_mean - truth.states.row(static_cast<Eigen::Index>(i)).transpose()).squaredNorm() / d_x;
    r.mse_param = d_th > 0 ? (estimates[i].theta_mean - theta_truth).squaredNorm() / d_th : 0.0;
    r.failed = failed_from != 0 && t >= failed_from;
    out.push_back(r);
  }
  return out;
}

Trajectory simulate_realization(const ExperimentConfig& config, std::uint64_t seed) {
  Rng rng(trajectory_seed(seed));
  return simulate_trajectory(config.model(), config.T, rng);
}

RealizationOutcome run_filter_on(const ExperimentConfig& config, Algorithm algorithm, const Trajectory& truth,
                                 std::uint64_t seed) {
  const BenchmarkModel model = config.model();
  const Partitioning partitioning = make_partitioning(config.d_x, config.resolved_K());
  FilterState state =
      init_filter(algorithm, model, partitioning, config.n_total(), filter_seed(seed, algorithm), config.filter_options());
  std::vector<Estimates> estimates;
  estimates.reserve(truth.steps());
  std::size_t failed_from = 0;
  for (std::size_t i = 0; i < truth.steps(); ++i) {
    const auto row = truth.observations.row(static_cast<Eigen::Index>(i));
    estimates.push_back(filter_step(state, model, {row.data(), static_cast<std::size_t>(row.size())}));
    if (state.failed && failed_from == 0) {
      failed_from = i + 1;
    }
  }
  RealizationOutcome out;
  out.records = score_estimates(truth, model.unknown_truth(), estimates, failed_from);
  out.fusion = state.fusion_counters;
  out.failed = state.failed;
  return out;
}

RealizationOutcome run_realization(const ExperimentConfig& config, Algorithm algorithm, std::uint64_t seed) {
  return run_filter_on(config, algorithm, simulate_realization(config, seed), seed);
}

std::vector<SummaryRow> summarize(const std::vector<DetailRow>& details) {
  struct Acc {
    double state = 0.0;
    double param = 0.0;
    std::size_t count = 0;
    std::size_t failed = 0;
  };
  std::map<std::pair<Algorithm, std::size_t>, Acc> acc;
  for (const DetailRow& d : details) {
    Acc& a = acc[{d.algorithm, d.record.t}];
    if (d.record.failed) {
      ++a.failed;
    } else {
      a.state += d.record.mse_state;
      a.param += d.record.mse_param;
      ++a.count;
    }
  }
  std::vector<SummaryRow> out;
  out.reserve(acc.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [key, a] : acc) {
    const auto n = static_cast<double>(a.count);
    out.push_back({key.first, key.second, a.count ? a.state / n : nan, a.count ? a.param / n : nan, a.failed});
  }
  return out;
}

ResultTable run_experiment(ExperimentConfig config, std::size_t threads) {
  config.validate();
  std::vector<Algorithm> algorithms = config.algorithms;
  std::sort(algorithms.begin(), algorithms.end());

  const std::size_t reps = config.realizations;
  // outcomes[r][a] in sorted algorithm order
  std::vector<std::vector<RealizationOutcome>> outcomes(reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
      const std::uint64_t seed = realization_seed(config.master_seed, r);
      const Trajectory truth = simulate_realization(config, seed);
      std::vector<RealizationOutcome> row;
      row.reserve(algorithms.size());
      for (Algorithm a : algorithms) {
        row.push_back(run_filter_on(config, a, truth, seed));
      }
      outcomes[r] = std::move(row);
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(threads, 1, reps);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  ResultTable table;
  table.n_total = config.n_total();
  table.K = config.resolved_K();
  table.n_per_filter = config.n_per_filter();
  for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
    AlgorithmDiagnostics& diag = table.diagnostics[algorithms[ai]];
    for (std::size_t r = 0; r < reps; ++r) {
      const RealizationOutcome& o = outcomes[r][ai];
      for (const ErrorRecord& rec : o.records) {
        table.details.push_back({algorithms[ai], r, rec});
      }
      diag.failed_realizations += o.failed ? 1 : 0;
      diag.fusion.clamped += o.fusion.clamped;
      diag.fusion.product_only += o.fusion.product_only;
      diag.fusion.failures += o.fusion.failures;
    }
  }
  table.summary = summarize(table.details);
  return table;
}

}  // namespace mpfusion
