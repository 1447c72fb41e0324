#ifndef MPFUSION_PARTICLES_HPP
#define MPFUSION_PARTICLES_HPP

#include <cstddef>
#include <vector>

#include "mpfusion/rng.hpp"
#include "mpfusion/types.hpp"

namespace mpfusion {

// Column layout of a particle: [substate | local params | global params].
struct CloudLayout {
  std::size_t state_dim = 0;
  std::size_t local_dim = 0;
  std::size_t global_dim = 0;

  std::size_t width() const { return state_dim + local_dim + global_dim; }
  IndexRange state() const { return {0, state_dim}; }
  IndexRange local() const { return {state_dim, state_dim + local_dim}; }
  IndexRange global() const { return {state_dim + local_dim, width()}; }
  // Everything except the global block; the target of fused resampling.
  IndexRange non_global() const { return {0, state_dim + local_dim}; }
};

struct ParticleCloud {
  RowMatrix samples;   // N x layout.width()
  Vector log_weights;  // length N, finite or -inf
  CloudLayout layout;

  ParticleCloud() = default;
  ParticleCloud(std::size_t n, CloudLayout l)
      : samples(RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l.width()))),
        log_weights(Vector::Zero(static_cast<Eigen::Index>(n))),
        layout(l) {}

  std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
};

struct WeightedMoments {
  Vector mean;
  Matrix cov;
};

// exp(lw - logsumexp(lw)). Throws DegenerateWeightsError when no entry is
// finite (or a NaN sneaks in), and std::invalid_argument on empty input.
Vector normalize(const Vector& log_weights);

// Population-weighted mean and covariance (no Bessel correction).
WeightedMoments weighted_mean_cov(const RowMatrix& samples, const Vector& weights);

// Systematic resampling: one uniform offset, M evenly spaced pointers.
std::vector<std::size_t> systematic_resample(const Vector& weights, std::size_t count, Rng& rng);

double effective_sample_size(const Vector& weights);

// Replaces the cloud by rows[indices] and resets the weights to uniform.
void apply_resample(ParticleCloud& cloud, const std::vector<std::size_t>& indices);

}  // namespace mpfusion

#endif  // MPFUSION_PARTICLES_HPP
