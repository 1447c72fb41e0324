#include "mpfusion/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mpfusion {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix lower_cholesky(const Matrix& cov, const char* what) {
  if (cov.rows() == 0) {
    return Matrix(0, 0);
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": covariance is not positive definite");
  }
  return llt.matrixL();
}

Matrix precision_of(const Gaussian& g) {
  Eigen::LLT<Matrix> llt(g.cov());
  if (llt.info() != Eigen::Success) {
    throw NumericalError("fuse: input covariance is not positive definite");
  }
  return symmetrized(llt.solve(Matrix::Identity(g.cov().rows(), g.cov().cols())));
}

Matrix select(const Matrix& m, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    }
  }
  return out;
}

Vector select(const Vector& v, std::span<const std::size_t> idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(idx[i])];
  }
  return out;
}

void check_indices(std::span<const std::size_t> idx, std::size_t dim, const char* what) {
  for (std::size_t i : idx) {
    if (i >= dim) {
      throw std::invalid_argument(std::string(what) + ": index " + std::to_string(i) +
                                  " out of range for dimension " + std::to_string(dim));
    }
  }
}

}  // namespace

Gaussian::Gaussian(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw std::invalid_argument("Gaussian: covariance shape does not match mean dimension");
  }
}

double Gaussian::log_pdf(const Vector& x) const {
  if (x.size() != mean_.size()) {
    throw std::invalid_argument("Gaussian::log_pdf: dimension mismatch");
  }
  const Matrix l = lower_cholesky(cov_, "Gaussian::log_pdf");
  const Vector z = l.triangularView<Eigen::Lower>().solve(x - mean_);
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const auto d = static_cast<double>(mean_.size());
  return -0.5 * (z.squaredNorm() + log_det + d * std::log(2.0 * std::numbers::pi));
}

Matrix ensure_pd(const Matrix& cov, double floor) {
  if (cov.rows() != cov.cols()) {
    throw std::invalid_argument("ensure_pd: matrix is not square");
  }
  Matrix s = symmetrized(cov);
  if (s.rows() == 0) {
    return s;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("ensure_pd: eigendecomposition failed");
  }
  const Vector& values = eig.eigenvalues();
  // Mean eigenvalue magnitude equals trace / D for a PSD input and stays
  // meaningful when negative eigenvalues cancel the trace.
  const double scale = std::max(values.cwiseAbs().mean(), 1e-300);
  const double threshold = floor * scale;
  if (values.minCoeff() >= threshold) {
    return s;
  }
  return symmetrized(eig.eigenvectors() * values.cwiseMax(threshold).asDiagonal() * eig.eigenvectors().transpose());
}

Gaussian fit_from_weighted(const RowMatrix& samples, const Vector& weights, double floor) {
  WeightedMoments m = weighted_mean_cov(samples, weights);
  return {std::move(m.mean), ensure_pd(m.cov, floor)};
}

Gaussian fit_from_weighted(const ParticleCloud& cloud, double floor) {
  return fit_from_weighted(cloud.samples, normalize(cloud.log_weights), floor);
}

std::vector<std::size_t> range_indices(IndexRange range) {
  std::vector<std::size_t> idx(range.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    idx[i] = range.begin + i;
  }
  return idx;
}

Gaussian marginal(const Gaussian& g, std::span<const std::size_t> idx) {
  if (idx.empty()) {
    throw std::invalid_argument("marginal: empty index set");
  }
  check_indices(idx, g.dim(), "marginal");
  return {select(g.mean(), idx), select(g.cov(), idx, idx)};
}

Gaussian marginal(const Gaussian& g, IndexRange range) {
  if (range.end > g.dim()) {
    throw std::invalid_argument("marginal: range exceeds dimension");
  }
  const auto b = static_cast<Eigen::Index>(range.begin);
  const auto n = static_cast<Eigen::Index>(range.size());
  return {g.mean().segment(b, n), g.cov().block(b, b, n, n)};
}

GaussianConditioner::GaussianConditioner(const Gaussian& joint, std::span<const std::size_t> target,
                                         std::span<const std::size_t> given, double floor) {
  check_indices(target, joint.dim(), "conditional");
  check_indices(given, joint.dim(), "conditional");
  for (std::size_t a : target) {
    if (std::find(given.begin(), given.end(), a) != given.end()) {
      throw std::invalid_argument("conditional: target and given index sets overlap");
    }
  }
  target_mean_ = select(joint.mean(), target);
  given_mean_ = select(joint.mean(), given);
  const Matrix s_aa = select(joint.cov(), target, target);
  if (given.empty()) {
    gain_ = Matrix::Zero(s_aa.rows(), 0);
    cov_ = s_aa;
  } else {
    const Matrix s_ab = select(joint.cov(), target, given);
    const Matrix s_bb = select(joint.cov(), given, given);
    Eigen::LLT<Matrix> llt(s_bb);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("conditional: covariance of the conditioning block is singular");
    }
    gain_ = llt.solve(s_ab.transpose()).transpose();
    cov_ = symmetrized(s_aa - gain_ * s_ab.transpose());
  }
  if (cov_.rows() > 0) {
    cov_ = ensure_pd(cov_, floor);
  }
  chol_ = lower_cholesky(cov_, "conditional");
}

Vector GaussianConditioner::mean_given(const Vector& given_value) const {
  if (given_value.size() != given_mean_.size()) {
    throw std::invalid_argument("conditional: given value has the wrong dimension");
  }
  if (given_mean_.size() == 0) {
    return target_mean_;
  }
  return target_mean_ + gain_ * (given_value - given_mean_);
}

void GaussianConditioner::sample(const Vector& given_value, Rng& rng, std::span<double> out) const {
  const Vector m = mean_given(given_value);
  const auto d = m.size();
  Vector eps(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    eps[i] = rng.normal();
  }
  Eigen::Map<Vector>(out.data(), d) = m + chol_ * eps;
}

Gaussian conditional(const Gaussian& g, std::span<const std::size_t> target_idx,
                     std::span<const std::size_t> given_idx, const Vector& given_value) {
  return GaussianConditioner(g, target_idx, given_idx).at(given_value);
}

GaussianSampler::GaussianSampler(const Gaussian& g) : mean_(g.mean()), chol_(lower_cholesky(g.cov(), "sample")) {}

void GaussianSampler::draw(Rng& rng, std::span<double> out) const {
  const auto d = mean_.size();
  Vector eps(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    eps[i] = rng.normal();
  }
  Eigen::Map<Vector>(out.data(), d) = mean_ + chol_ * eps;
}

Vector GaussianSampler::draw(Rng& rng) const {
  Vector out(mean_.size());
  draw(rng, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Vector sample(const Gaussian& g, Rng& rng) { return GaussianSampler(g).draw(rng); }

FusionResult fuse(std::span<const Gaussian> locals, const Gaussian& prior, double floor) {
  if (locals.empty()) {
    throw std::invalid_argument("fuse: need at least one local posterior");
  }
  const std::size_t d = prior.dim();
  for (const auto& g : locals) {
    if (g.dim() != d) {
      throw std::invalid_argument("fuse: local posterior of dimension " + std::to_string(g.dim()) +
                                  " does not match prior dimension " + std::to_string(d));
    }
  }
  if (locals.size() == 1 || d == 0) {
    return {locals.front(), FusionPath::exact};
  }

  const auto dim = static_cast<Eigen::Index>(d);
  Matrix product_precision = Matrix::Zero(dim, dim);
  Vector product_info = Vector::Zero(dim);
  for (const auto& g : locals) {
    const Matrix p = precision_of(g);
    product_precision += p;
    product_info += p * g.mean();
  }
  const double extra = static_cast<double>(locals.size() - 1);
  const Matrix prior_precision = precision_of(prior);
  const Matrix precision = symmetrized(product_precision - extra * prior_precision);
  const Vector info = product_info - extra * (prior_precision * prior.mean());

  const double threshold = floor * product_precision.trace() / static_cast<double>(d);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(precision);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("fuse: eigendecomposition of the fused precision failed");
  }

  auto from_precision = [](const Matrix& lambda, const Vector& eta) {
    Eigen::LLT<Matrix> llt(lambda);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("fuse: fused precision is not positive definite");
    }
    Matrix cov = llt.solve(Matrix::Identity(lambda.rows(), lambda.cols()));
    Vector mean = llt.solve(eta);
    return Gaussian(std::move(mean), symmetrized(cov));
  };

  if (eig.eigenvalues().minCoeff() > threshold) {
    return {from_precision(precision, info), FusionPath::exact};
  }

  const Vector lifted = eig.eigenvalues().cwiseMax(threshold);
  const Matrix clamped = symmetrized(eig.eigenvectors() * lifted.asDiagonal() * eig.eigenvectors().transpose());
  Gaussian repaired = from_precision(clamped, info);
  if (repaired.mean().allFinite() && repaired.cov().allFinite() && repaired.cov().trace() <= prior.cov().trace()) {
    return {std::move(repaired), FusionPath::clamped};
  }
  return {from_precision(product_precision, product_info), FusionPath::product_only};
}

}  // namespace mpfusion
