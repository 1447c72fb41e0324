#include "mpfusion/model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mpfusion {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

inline double logistic_step(double x_prev, const Theta& th) {
  return th[0] / (1.0 + std::exp(-x_prev + th[4])) + th[1];
}

}  // namespace

std::size_t ParamLayout::total() const {
  return dim_global + std::accumulate(dims_local.begin(), dims_local.end(), std::size_t{0});
}

IndexRange ParamLayout::global() const {
  const std::size_t t = total();
  return {t - dim_global, t};
}

IndexRange ParamLayout::local(std::size_t k) const {
  if (k >= dims_local.size()) {
    throw std::out_of_range("ParamLayout::local: subsystem index out of range");
  }
  const std::size_t begin =
      std::accumulate(dims_local.begin(), dims_local.begin() + static_cast<std::ptrdiff_t>(k), std::size_t{0});
  return {begin, begin + dims_local[k]};
}

Partitioning make_partitioning(std::size_t d_x, std::size_t K) {
  if (K == 0 || d_x == 0 || d_x % K != 0) {
    throw std::invalid_argument("make_partitioning: state dimension d_x=" + std::to_string(d_x) +
                                " is not divisible into K=" + std::to_string(K) + " equal blocks");
  }
  Partitioning p;
  p.K = K;
  const std::size_t width = d_x / K;
  for (std::size_t k = 0; k < K; ++k) {
    p.state_blocks.push_back({k * width, (k + 1) * width});
  }
  p.obs_blocks = p.state_blocks;
  return p;
}

BenchmarkModel::BenchmarkModel(std::size_t d_x, std::size_t unknown_count, Theta theta_true, double sigma_u2,
                               double sigma_v2)
    : d_x_(d_x), unknown_count_(unknown_count), theta_true_(theta_true), sigma_u2_(sigma_u2), sigma_v2_(sigma_v2) {
  if (d_x_ == 0) {
    throw std::invalid_argument("BenchmarkModel: d_x must be positive");
  }
  if (unknown_count_ > 5) {
    throw std::invalid_argument("BenchmarkModel: at most 5 unknown parameters");
  }
  if (!(sigma_u2_ > 0.0) || !(sigma_v2_ > 0.0)) {
    throw std::invalid_argument("BenchmarkModel: noise variances must be positive");
  }
}

Vector BenchmarkModel::unknown_truth() const {
  Vector v(static_cast<Eigen::Index>(unknown_count_));
  for (std::size_t i = 0; i < unknown_count_; ++i) {
    v[static_cast<Eigen::Index>(i)] = theta_true_[i];
  }
  return v;
}

Theta BenchmarkModel::full_theta(std::span<const double> unknown) const {
  require_same_length(unknown.size(), unknown_count_, "BenchmarkModel::full_theta");
  Theta th = theta_true_;
  for (std::size_t i = 0; i < unknown.size(); ++i) {
    th[i] = unknown[i];
  }
  return th;
}

Gaussian BenchmarkModel::global_prior() const {
  const auto n = static_cast<Eigen::Index>(unknown_count_);
  return {Vector::Constant(n, kPriorMean), kPriorVar * Matrix::Identity(n, n)};
}

void BenchmarkModel::sample_initial_state(IndexRange block, Rng& rng, std::span<double> x0) const {
  require_same_length(x0.size(), block.size(), "BenchmarkModel::sample_initial_state");
  const double sd = std::sqrt(sigma_u2_);
  for (double& v : x0) {
    v = sd * rng.normal();
  }
}

void BenchmarkModel::propagate(IndexRange block, std::span<const double> x_prev, std::span<const double> /*local*/,
                               std::span<const double> global, Rng& rng, std::span<double> x_next) const {
  require_same_length(x_prev.size(), block.size(), "BenchmarkModel::propagate");
  require_same_length(x_next.size(), block.size(), "BenchmarkModel::propagate");
  const Theta th = full_theta(global);
  const double sd = std::sqrt(sigma_u2_);
  for (std::size_t i = 0; i < x_prev.size(); ++i) {
    x_next[i] = logistic_step(x_prev[i], th) + sd * rng.normal();
  }
}

double BenchmarkModel::log_likelihood(IndexRange block, std::span<const double> y, std::span<const double> x,
                                      std::span<const double> /*local*/, std::span<const double> global) const {
  require_same_length(y.size(), block.size(), "BenchmarkModel::log_likelihood");
  return mpfusion::log_likelihood(*this, y, x, full_theta(global));
}

std::vector<double> transition(const BenchmarkModel& model, std::span<const double> x_prev, const Theta& theta,
                               std::span<const double> noise) {
  require_same_length(x_prev.size(), model.d_x(), "transition");
  require_same_length(noise.size(), model.d_x(), "transition");
  std::vector<double> out(x_prev.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = logistic_step(x_prev[i], theta) + noise[i];
  }
  return out;
}

std::vector<double> observe(const BenchmarkModel& model, std::span<const double> x, const Theta& theta,
                            std::span<const double> noise) {
  require_same_length(x.size(), model.d_x(), "observe");
  require_same_length(noise.size(), model.d_x(), "observe");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = theta[2] * x[i] + theta[3] + noise[i];
  }
  return out;
}

double log_likelihood(const BenchmarkModel& model, std::span<const double> y_block, std::span<const double> x_block,
                      const Theta& theta) {
  require_same_length(y_block.size(), x_block.size(), "log_likelihood");
  if (y_block.empty()) {
    throw std::invalid_argument("log_likelihood: empty block");
  }
  const double var = model.sigma_v2();
  const double norm = -0.5 * std::log(2.0 * std::numbers::pi * var);
  double sq = 0.0;
  for (std::size_t i = 0; i < y_block.size(); ++i) {
    const double r = y_block[i] - (theta[2] * x_block[i] + theta[3]);
    sq += r * r;
  }
  return static_cast<double>(y_block.size()) * norm - 0.5 * sq / var;
}

Trajectory simulate_trajectory(const BenchmarkModel& model, std::size_t steps, Rng& rng,
                               std::optional<Vector> initial_state) {
  if (steps == 0) {
    throw std::invalid_argument("simulate_trajectory: need at least one step");
  }
  const std::size_t d = model.d_x();
  const auto rows = static_cast<Eigen::Index>(steps);
  const auto cols = static_cast<Eigen::Index>(d);
  Trajectory traj;
  traj.states.resize(rows, cols);
  traj.observations.resize(rows, cols);
  if (initial_state) {
    require_same_length(static_cast<std::size_t>(initial_state->size()), d, "simulate_trajectory");
    traj.initial_state = *initial_state;
  } else {
    traj.initial_state.resize(cols);
    model.sample_initial_state({0, d}, rng, {traj.initial_state.data(), d});
  }

  const Theta& th = model.theta_true();
  const double su = std::sqrt(model.sigma_u2());
  const double sv = std::sqrt(model.sigma_v2());
  std::vector<double> x(traj.initial_state.data(), traj.initial_state.data() + d);
  std::vector<double> noise(d);
  for (std::size_t t = 0; t < steps; ++t) {
    for (double& n : noise) n = su * rng.normal();
    x = transition(model, x, th, noise);
    for (double& n : noise) n = sv * rng.normal();
    const std::vector<double> y = observe(model, x, th, noise);
    for (std::size_t i = 0; i < d; ++i) {
      traj.states(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = x[i];
      traj.observations(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = y[i];
    }
  }
  return traj;
}

}  // namespace mpfusion
