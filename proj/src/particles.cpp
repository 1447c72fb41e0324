#include "mpfusion/particles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpfusion {

Vector normalize(const Vector& log_weights) {
  if (log_weights.size() == 0) {
    throw std::invalid_argument("normalize: empty weight vector");
  }
  const double max_lw = log_weights.maxCoeff();
  if (!std::isfinite(max_lw) || log_weights.hasNaN()) {
    throw DegenerateWeightsError("normalize: no particle has a finite log-weight");
  }
  Vector w = log_weights.unaryExpr([max_lw](double lw) { return std::exp(lw - max_lw); });
  const double total = w.sum();
  w /= total;
  return w;
}

WeightedMoments weighted_mean_cov(const RowMatrix& samples, const Vector& weights) {
  if (samples.rows() != weights.size()) {
    throw std::invalid_argument("weighted_mean_cov: sample/weight count mismatch");
  }
  WeightedMoments m;
  m.mean = samples.transpose() * weights;
  const RowMatrix centered = samples.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * weights.asDiagonal() * centered;
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
  return m;
}

std::vector<std::size_t> systematic_resample(const Vector& weights, std::size_t count, Rng& rng) {
  const auto n = static_cast<std::size_t>(weights.size());
  if (n == 0 || count == 0) {
    throw std::invalid_argument("systematic_resample: need at least one weight and one draw");
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  const double step = 1.0 / static_cast<double>(count);
  const double offset = rng.uniform() * step;
  std::size_t j = 0;
  double cumulative = weights[0];
  for (std::size_t i = 0; i < count; ++i) {
    const double u = offset + static_cast<double>(i) * step;
    // Guard the tail so rounding in the running sum cannot run off the end.
    while (u >= cumulative && j + 1 < n) {
      ++j;
      cumulative += weights[static_cast<Eigen::Index>(j)];
    }
    out.push_back(j);
  }
  return out;
}

double effective_sample_size(const Vector& weights) {
  return 1.0 / weights.squaredNorm();
}

void apply_resample(ParticleCloud& cloud, const std::vector<std::size_t>& indices) {
  RowMatrix next(static_cast<Eigen::Index>(indices.size()), cloud.samples.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    next.row(static_cast<Eigen::Index>(i)) = cloud.samples.row(static_cast<Eigen::Index>(indices[i]));
  }
  cloud.samples = std::move(next);
  cloud.log_weights = Vector::Zero(static_cast<Eigen::Index>(indices.size()));
}

}  // namespace mpfusion
