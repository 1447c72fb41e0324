#ifndef MPFUSION_MODEL_HPP
#define MPFUSION_MODEL_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mpfusion/gaussian.hpp"
#include "mpfusion/rng.hpp"
#include "mpfusion/types.hpp"

namespace mpfusion {

// theta = [theta_{1,l} | ... | theta_{K,l} | theta_g]
struct ParamLayout {
  std::size_t dim_global = 0;
  std::vector<std::size_t> dims_local;

  std::size_t total() const;
  IndexRange global() const;
  IndexRange local(std::size_t k) const;
};

struct Partitioning {
  std::size_t K = 0;
  std::vector<IndexRange> state_blocks;
  std::vector<IndexRange> obs_blocks;
};

// K contiguous equal blocks over 0..d_x; observation blocks mirror state blocks.
Partitioning make_partitioning(std::size_t d_x, std::size_t K);

struct Trajectory {
  RowMatrix states;        // T x d_x, row t-1 holds x_t
  RowMatrix observations;  // T x d_y, row t-1 holds y_t
  Vector initial_state;    // x_0

  std::size_t steps() const { return static_cast<std::size_t>(states.rows()); }
};

// A state-space model whose state splits into independent subsystems once the
// global parameters are fixed. Observation dimension equals state dimension
// and y block k is observed from x block k. Every block-level call receives the
// subvectors of one contiguous state block plus that block's local parameters.
class SeparableModel {
 public:
  virtual ~SeparableModel() = default;

  virtual std::size_t state_dim() const = 0;
  virtual std::size_t global_dim() const = 0;
  virtual std::size_t local_dim(IndexRange /*block*/) const { return 0; }

  // Throws std::invalid_argument if the model cannot be split at `block`.
  virtual void check_block(IndexRange /*block*/) const {}

  virtual Gaussian global_prior() const = 0;
  virtual void sample_initial_state(IndexRange block, Rng& rng, std::span<double> x0) const = 0;
  virtual void sample_initial_local(IndexRange /*block*/, Rng& /*rng*/, std::span<double> /*local*/) const {}

  // Draws x_t for `block` from the transition prior.
  virtual void propagate(IndexRange block, std::span<const double> x_prev, std::span<const double> local,
                         std::span<const double> global, Rng& rng, std::span<double> x_next) const = 0;

  virtual double log_likelihood(IndexRange block, std::span<const double> y, std::span<const double> x,
                                std::span<const double> local, std::span<const double> global) const = 0;
};

using Theta = std::array<double, 5>;

// x_{i,t} = th1 / (1 + exp(-x_{i,t-1} + th5)) + th2 + u_{i,t}
// y_{i,t} = th3 x_{i,t} + th4 + v_{i,t}
// The leading `unknown_count` entries of theta are estimated, the rest are
// fixed at their true values.
class BenchmarkModel final : public SeparableModel {
 public:
  static constexpr Theta kDefaultTheta{2.0, -2.0, 2.0, -2.0, 3.0};

  BenchmarkModel(std::size_t d_x, std::size_t unknown_count, Theta theta_true = kDefaultTheta,
                 double sigma_u2 = 2.0, double sigma_v2 = 1.0);

  std::size_t d_x() const { return d_x_; }
  std::size_t unknown_count() const { return unknown_count_; }
  const Theta& theta_true() const { return theta_true_; }
  double sigma_u2() const { return sigma_u2_; }
  double sigma_v2() const { return sigma_v2_; }

  // Leading unknown entries of theta_true.
  Vector unknown_truth() const;
  // theta_true with its leading entries replaced by `unknown`.
  Theta full_theta(std::span<const double> unknown) const;

  std::size_t state_dim() const override { return d_x_; }
  std::size_t global_dim() const override { return unknown_count_; }
  Gaussian global_prior() const override;
  void sample_initial_state(IndexRange block, Rng& rng, std::span<double> x0) const override;
  void propagate(IndexRange block, std::span<const double> x_prev, std::span<const double> local,
                 std::span<const double> global, Rng& rng, std::span<double> x_next) const override;
  double log_likelihood(IndexRange block, std::span<const double> y, std::span<const double> x,
                        std::span<const double> local, std::span<const double> global) const override;

  static constexpr double kPriorMean = 1.0;
  static constexpr double kPriorVar = 2.0;

 private:
  std::size_t d_x_;
  std::size_t unknown_count_;
  Theta theta_true_;
  double sigma_u2_;
  double sigma_v2_;
};

// Deterministic maps with caller-supplied noise; lengths must agree.
std::vector<double> transition(const BenchmarkModel& model, std::span<const double> x_prev, const Theta& theta,
                               std::span<const double> noise);
std::vector<double> observe(const BenchmarkModel& model, std::span<const double> x, const Theta& theta,
                            std::span<const double> noise);
// sum_i log N(y_i; th3 x_i + th4, sigma_v2)
double log_likelihood(const BenchmarkModel& model, std::span<const double> y_block, std::span<const double> x_block,
                      const Theta& theta);

// x_0 ~ N(0, sigma_u2 I) unless `initial_state` is given, then T transition /
// observation steps with fresh Gaussian noise at the true parameters.
Trajectory simulate_trajectory(const BenchmarkModel& model, std::size_t steps, Rng& rng,
                               std::optional<Vector> initial_state = std::nullopt);

}  // namespace mpfusion

#endif  // MPFUSION_MODEL_HPP
