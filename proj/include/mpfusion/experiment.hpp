#ifndef MPFUSION_EXPERIMENT_HPP
#define MPFUSION_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpfusion/filters.hpp"
#include "mpfusion/model.hpp"

namespace mpfusion {

// Invalid experiment setting; `field` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  std::size_t d_x = 10;
  std::size_t d_theta_g = 2;
  Theta theta_full = BenchmarkModel::kDefaultTheta;
  double sigma_u2 = 2.0;
  double sigma_v2 = 1.0;
  std::size_t T = 50;
  std::size_t K = 0;  // 0 resolves to d_x / 2 (two state dimensions per filter)
  std::size_t particles_per_unit = 100;
  std::size_t realizations = 100;
  std::vector<Algorithm> algorithms{Algorithm::spf, Algorithm::dapf, Algorithm::mpf, Algorithm::mpf_fusion};
  std::uint64_t master_seed = 1;
  double sigma_rw2 = 0.01;
  double pd_floor = kDefaultPdFloor;

  // Throws ConfigError. Also resolves K.
  void validate();
  std::size_t resolved_K() const;
  // particles_per_unit * d_theta_g * d_x
  std::size_t n_total() const;
  std::size_t n_per_filter() const { return n_total() / resolved_K(); }

  BenchmarkModel model() const;
  FilterOptions filter_options() const { return {sigma_rw2, pd_floor}; }
};

struct ErrorRecord {
  std::size_t t = 0;
  double mse_state = 0.0;  // |x_hat - x|^2 / d_x
  double mse_param = 0.0;  // |theta_hat - theta|^2 / d_theta_g
  bool failed = false;
};

struct DetailRow {
  Algorithm algorithm;
  std::size_t realization;
  ErrorRecord record;
};

struct SummaryRow {
  Algorithm algorithm;
  std::size_t t;
  double avg_mse_state;
  double avg_mse_param;
  std::size_t n_failed;
};

struct AlgorithmDiagnostics {
  std::size_t failed_realizations = 0;
  FusionCounters fusion;
};

struct ResultTable {
  std::vector<DetailRow> details;  // canonical (algorithm, realization, t) order
  std::vector<SummaryRow> summary;
  std::map<Algorithm, AlgorithmDiagnostics> diagnostics;
  std::size_t n_total = 0;
  std::size_t K = 0;
  std::size_t n_per_filter = 0;
};

// Seed of realization i; both the trajectory and every filter derive from it.
std::uint64_t realization_seed(std::uint64_t master_seed, std::size_t realization);
std::uint64_t trajectory_seed(std::uint64_t realization_seed);
std::uint64_t filter_seed(std::uint64_t realization_seed, Algorithm algorithm);

// Per-step error of a sequence of estimates against the truth. `failed_from`
// is the first step (1-based) whose estimate is frozen by a filter failure.
std::vector<ErrorRecord> score_estimates(const Trajectory& truth, const Vector& theta_truth,
                                         const std::vector<Estimates>& estimates, std::size_t failed_from = 0);

struct RealizationOutcome {
  std::vector<ErrorRecord> records;
  FusionCounters fusion;
  bool failed = false;
};

RealizationOutcome run_filter_on(const ExperimentConfig& config, Algorithm algorithm, const Trajectory& truth,
                                 std::uint64_t seed);

// Simulates the realization's trajectory (shared by all algorithms) and runs one filter over it.
RealizationOutcome run_realization(const ExperimentConfig& config, Algorithm algorithm, std::uint64_t seed);

Trajectory simulate_realization(const ExperimentConfig& config, std::uint64_t seed);

// Runs every (algorithm, realization) cell on up to `threads` workers. The
// result does not depend on the thread count or on the order of
// config.algorithms.
ResultTable run_experiment(ExperimentConfig config, std::size_t threads = 1);

std::vector<SummaryRow> summarize(const std::vector<DetailRow>& details);

}  // namespace mpfusion

#endif  // MPFUSION_EXPERIMENT_HPP
