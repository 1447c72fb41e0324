#ifndef MPFUSION_LINEAR_GAUSSIAN_HPP
#define MPFUSION_LINEAR_GAUSSIAN_HPP

#include <cstddef>
#include <vector>

#include "mpfusion/gaussian.hpp"
#include "mpfusion/model.hpp"

namespace mpfusion {

// Linear-Gaussian validation model with optional static global parameters:
//   x_t = A x_{t-1} + B theta + w_t,  w_t ~ N(0, Q)
//   y_t = C x_t     + D theta + v_t,  v_t ~ N(0, R)
//   x_0 ~ N(m0, P0),  theta ~ prior
// A, C, Q, R, P0 are d_x x d_x. Splitting into blocks requires them to have no
// entries coupling the block to the rest of the state.
struct LinearGaussianSpec {
  Matrix A, C, Q, R;
  Matrix B, D;  // d_x x d_theta, may have zero columns
  Vector m0;
  Matrix P0;
  Gaussian theta_prior;  // dimension d_theta
};

class LinearGaussianModel final : public SeparableModel {
 public:
  explicit LinearGaussianModel(LinearGaussianSpec spec);

  const LinearGaussianSpec& spec() const { return spec_; }

  std::size_t state_dim() const override { return static_cast<std::size_t>(spec_.A.rows()); }
  std::size_t global_dim() const override { return static_cast<std::size_t>(spec_.B.cols()); }
  void check_block(IndexRange block) const override;
  Gaussian global_prior() const override { return spec_.theta_prior; }
  void sample_initial_state(IndexRange block, Rng& rng, std::span<double> x0) const override;
  void propagate(IndexRange block, std::span<const double> x_prev, std::span<const double> local,
                 std::span<const double> global, Rng& rng, std::span<double> x_next) const override;
  double log_likelihood(IndexRange block, std::span<const double> y, std::span<const double> x,
                        std::span<const double> local, std::span<const double> global) const override;

  // True trajectory at fixed parameters `theta`.
  Trajectory simulate(std::size_t steps, const Vector& theta, Rng& rng) const;

 private:
  LinearGaussianSpec spec_;
  Matrix q_chol_;
  Matrix r_chol_;
  Matrix p0_chol_;
};

// Exact filter for LinearGaussianModel. Unknown theta is carried as a static
// augmented state, so the theta marginal is the exact parameter posterior.
class KalmanFilter {
 public:
  explicit KalmanFilter(const LinearGaussianModel& model);

  // Prediction followed by the measurement update for y_t.
  void step(const Vector& y);

  Vector state_mean() const;
  Matrix state_cov() const;
  Vector theta_mean() const;
  Matrix theta_cov() const;
  const Gaussian& joint() const { return posterior_; }

 private:
  Matrix transition_;   // augmented
  Matrix process_cov_;  // augmented
  Matrix observation_;  // augmented
  Matrix obs_cov_;
  std::size_t d_x_;
  Gaussian posterior_;
};

struct LinearGaussianOracle {
  LinearGaussianModel model;
  KalmanFilter kalman;
};

// Known-parameter oracle: theta dimension 0, x_0 ~ N(0, I).
LinearGaussianOracle make_linear_gaussian_oracle(std::size_t d_x, const Matrix& A, const Matrix& C, const Matrix& Q,
                                                 const Matrix& R);

}  // namespace mpfusion

#endif  // MPFUSION_LINEAR_GAUSSIAN_HPP
