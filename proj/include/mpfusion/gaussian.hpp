#ifndef MPFUSION_GAUSSIAN_HPP
#define MPFUSION_GAUSSIAN_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "mpfusion/particles.hpp"
#include "mpfusion/rng.hpp"
#include "mpfusion/types.hpp"

namespace mpfusion {

inline constexpr double kDefaultPdFloor = 1e-9;

// Multivariate normal N(mean, cov). A plain value; all algebra lives in free
// functions below.
class Gaussian {
 public:
  Gaussian() = default;
  Gaussian(Vector mean, Matrix cov);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }

  // Log density via a Cholesky solve. Throws NumericalError if cov is not PD.
  double log_pdf(const Vector& x) const;

 private:
  Vector mean_;
  Matrix cov_;
};

// Symmetrize, then lift every eigenvalue below floor * scale up to that value,
// where scale is the mean eigenvalue magnitude (trace / D for PSD input). Returns the symmetrized input untouched when no
// eigenvalue needs clamping.
Matrix ensure_pd(const Matrix& cov, double floor = kDefaultPdFloor);

// Moment-matched Gaussian of a weighted cloud, passed through ensure_pd.
Gaussian fit_from_weighted(const RowMatrix& samples, const Vector& weights, double floor = kDefaultPdFloor);
Gaussian fit_from_weighted(const ParticleCloud& cloud, double floor = kDefaultPdFloor);

Gaussian marginal(const Gaussian& g, std::span<const std::size_t> idx);
Gaussian marginal(const Gaussian& g, IndexRange range);

// Precomputed conditioning of a target block on a given block:
//   mean = m_a + G (v - m_b),  G = S_ab S_bb^{-1},  cov = S_aa - G S_ba.
// Build once, then evaluate or sample for many conditioning values.
class GaussianConditioner {
 public:
  GaussianConditioner(const Gaussian& joint, std::span<const std::size_t> target,
                      std::span<const std::size_t> given, double floor = kDefaultPdFloor);

  Vector mean_given(const Vector& given_value) const;
  const Matrix& cov() const { return cov_; }
  Gaussian at(const Vector& given_value) const { return {mean_given(given_value), cov_}; }
  // Writes one draw from the conditional into `out`.
  void sample(const Vector& given_value, Rng& rng, std::span<double> out) const;

 private:
  Vector target_mean_;
  Vector given_mean_;
  Matrix gain_;
  Matrix cov_;
  Matrix chol_;  // lower factor of cov_
};

Gaussian conditional(const Gaussian& g, std::span<const std::size_t> target_idx,
                     std::span<const std::size_t> given_idx, const Vector& given_value);

// Draws with a cached lower Cholesky factor: mean + L * eps.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Gaussian& g);
  Vector draw(Rng& rng) const;
  void draw(Rng& rng, std::span<double> out) const;

 private:
  Vector mean_;
  Matrix chol_;
};

Vector sample(const Gaussian& g, Rng& rng);

enum class FusionPath {
  exact,         // closed form, precision difference was PD
  clamped,       // precision eigenvalues lifted to the floor
  product_only,  // prior division dropped for this step
};

struct FusionResult {
  Gaussian fused;
  FusionPath path = FusionPath::exact;
};

// Optimal Bayesian fusion of K local posteriors that all share `prior`:
//   precision = sum_k P_k - (K - 1) P_prior
//   mean      = precision^{-1} (sum_k P_k m_k - (K - 1) P_prior m_prior)
// With K = 1 the input is returned bit-for-bit. When the precision difference
// is not PD the eigenvalues are clamped at floor * trace(sum_k P_k) / D; that
// repair is kept only if the result is no wider than the prior (trace-wise).
// Otherwise the prior division is dropped (product of the locals).
FusionResult fuse(std::span<const Gaussian> locals, const Gaussian& prior, double floor = kDefaultPdFloor);

std::vector<std::size_t> range_indices(IndexRange range);

}  // namespace mpfusion

#endif  // MPFUSION_GAUSSIAN_HPP
