#include "mpfusion/linear_gaussian.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mpfusion {

namespace {

// Groups state indices that any of the d_x x d_x matrices couple together.
std::vector<std::vector<Eigen::Index>> coupled_components(const std::vector<const Matrix*>& ms, Eigen::Index n) {
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      i = parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    }
    return i;
  };
  for (const Matrix* m : ms) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j && (*m)(i, j) != 0.0) {
          parent[static_cast<std::size_t>(find(i))] = find(j);
        }
      }
    }
  }
  std::vector<std::vector<Eigen::Index>> groups;
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index root = find(i);
    if (slot[static_cast<std::size_t>(root)] < 0) {
      slot[static_cast<std::size_t>(root)] = static_cast<Eigen::Index>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[static_cast<std::size_t>(root)])].push_back(i);
  }
  return groups;
}

// Symmetric square root of a PSD matrix, computed per coupled component so
// the factor never mixes independent blocks.
Matrix blockwise_sqrt(const Matrix& m, const std::vector<std::vector<Eigen::Index>>& groups) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (const auto& g : groups) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Matrix sub(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = m(g[i], g[j]);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sub + sub.transpose()));
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix s = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) out(g[i], g[j]) = s(i, j);
  }
  return out;
}

void require_square(const Matrix& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw std::invalid_argument(std::string("LinearGaussianModel: ") + name + " must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  }
}

}  // namespace

LinearGaussianModel::LinearGaussianModel(LinearGaussianSpec spec) : spec_(std::move(spec)) {
  const Eigen::Index n = spec_.A.rows();
  if (n == 0) {
    throw std::invalid_argument("LinearGaussianModel: empty state");
  }
  require_square(spec_.A, n, "A");
  require_square(spec_.C, n, "C");
  require_square(spec_.Q, n, "Q");
  require_square(spec_.R, n, "R");
  require_square(spec_.P0, n, "P0");
  const auto p = static_cast<Eigen::Index>(spec_.theta_prior.dim());
  if (spec_.B.size() == 0) spec_.B = Matrix::Zero(n, p);
  if (spec_.D.size() == 0) spec_.D = Matrix::Zero(n, p);
  if (spec_.B.rows() != n || spec_.B.cols() != p || spec_.D.rows() != n || spec_.D.cols() != p) {
    throw std::invalid_argument("LinearGaussianModel: B and D must be d_x x d_theta");
  }
  if (spec_.m0.size() != n) {
    throw std::invalid_argument("LinearGaussianModel: m0 has the wrong dimension");
  }
  const auto groups = coupled_components({&spec_.A, &spec_.C, &spec_.Q, &spec_.R, &spec_.P0}, n);
  q_chol_ = blockwise_sqrt(spec_.Q, groups);
  r_chol_ = blockwise_sqrt(spec_.R, groups);
  p0_chol_ = blockwise_sqrt(spec_.P0, groups);
}

void LinearGaussianModel::check_block(IndexRange block) const {
  const auto n = spec_.A.rows();
  for (const Matrix* m : {&spec_.A, &spec_.C, &spec_.Q, &spec_.R, &spec_.P0}) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool in_i = static_cast<std::size_t>(i) >= block.begin && static_cast<std::size_t>(i) < block.end;
      for (Eigen::Index j = 0; j < n; ++j) {
        const bool in_j = static_cast<std::size_t>(j) >= block.begin && static_cast<std::size_t>(j) < block.end;
        if (in_i != in_j && (*m)(i, j) != 0.0) {
          throw std::invalid_argument("LinearGaussianModel: state block [" + std::to_string(block.begin) + ", " +
                                      std::to_string(block.end) + ") is coupled to the rest of the state");
        }
      }
    }
  }
}

void LinearGaussianModel::sample_initial_state(IndexRange block, Rng& rng, std::span<double> x0) const {
  const auto b = static_cast<Eigen::Index>(block.begin);
  const auto n = static_cast<Eigen::Index>(block.size());
  Vector eps(n);
  for (Eigen::Index i = 0; i < n; ++i) eps[i] = rng.normal();
  Eigen::Map<Vector>(x0.data(), n) = spec_.m0.segment(b, n) + p0_chol_.block(b, b, n, n) * eps;
}

void LinearGaussianModel::propagate(IndexRange block, std::span<const double> x_prev, std::span<const double> /*local*/,
                                    std::span<const double> global, Rng& rng, std::span<double> x_next) const {
  const auto b = static_cast<Eigen::Index>(block.begin);
  const auto n = static_cast<Eigen::Index>(block.size());
  const Eigen::Map<const Vector> xp(x_prev.data(), n);
  Vector eps(n);
  for (Eigen::Index i = 0; i < n; ++i) eps[i] = rng.normal();
  Vector next = spec_.A.block(b, b, n, n) * xp + q_chol_.block(b, b, n, n) * eps;
  if (!global.empty()) {
    const Eigen::Map<const Vector> th(global.data(), static_cast<Eigen::Index>(global.size()));
    next += spec_.B.middleRows(b, n) * th;
  }
  Eigen::Map<Vector>(x_next.data(), n) = next;
}

double LinearGaussianModel::log_likelihood(IndexRange block, std::span<const double> y, std::span<const double> x,
                                           std::span<const double> /*local*/, std::span<const double> global) const {
  const auto b = static_cast<Eigen::Index>(block.begin);
  const auto n = static_cast<Eigen::Index>(block.size());
  const Eigen::Map<const Vector> xv(x.data(), n);
  const Eigen::Map<const Vector> yv(y.data(), n);
  Vector residual = yv - spec_.C.block(b, b, n, n) * xv;
  if (!global.empty()) {
    const Eigen::Map<const Vector> th(global.data(), static_cast<Eigen::Index>(global.size()));
    residual -= spec_.D.middleRows(b, n) * th;
  }
  Eigen::LLT<Matrix> llt(spec_.R.block(b, b, n, n));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("LinearGaussianModel: observation covariance is singular");
  }
  const Matrix l = llt.matrixL();
  const Vector z = l.triangularView<Eigen::Lower>().solve(residual);
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * (z.squaredNorm() + log_det + static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
}

Trajectory LinearGaussianModel::simulate(std::size_t steps, const Vector& theta, Rng& rng) const {
  const Eigen::Index n = spec_.A.rows();
  if (theta.size() != spec_.B.cols()) {
    throw std::invalid_argument("LinearGaussianModel::simulate: theta has the wrong dimension");
  }
  Trajectory traj;
  traj.states.resize(static_cast<Eigen::Index>(steps), n);
  traj.observations.resize(static_cast<Eigen::Index>(steps), n);
  traj.initial_state.resize(n);
  sample_initial_state({0, static_cast<std::size_t>(n)}, rng, {traj.initial_state.data(), static_cast<std::size_t>(n)});
  Vector x = traj.initial_state;
  Vector eps(n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) eps[i] = rng.normal();
    x = spec_.A * x + spec_.B * theta + q_chol_ * eps;
    for (Eigen::Index i = 0; i < n; ++i) eps[i] = rng.normal();
    const Vector y = spec_.C * x + spec_.D * theta + r_chol_ * eps;
    traj.states.row(static_cast<Eigen::Index>(t)) = x.transpose();
    traj.observations.row(static_cast<Eigen::Index>(t)) = y.transpose();
  }
  return traj;
}

KalmanFilter::KalmanFilter(const LinearGaussianModel& model) : d_x_(model.state_dim()) {
  const auto& s = model.spec();
  const auto n = static_cast<Eigen::Index>(d_x_);
  const auto p = static_cast<Eigen::Index>(model.global_dim());
  transition_ = Matrix::Identity(n + p, n + p);
  transition_.topLeftCorner(n, n) = s.A;
  transition_.topRightCorner(n, p) = s.B;
  process_cov_ = Matrix::Zero(n + p, n + p);
  process_cov_.topLeftCorner(n, n) = s.Q;
  observation_.resize(n, n + p);
  observation_ << s.C, s.D;
  obs_cov_ = s.R;

  Vector mean(n + p);
  mean << s.m0, s.theta_prior.mean();
  Matrix cov = Matrix::Zero(n + p, n + p);
  cov.topLeftCorner(n, n) = s.P0;
  cov.bottomRightCorner(p, p) = s.theta_prior.cov();
  posterior_ = Gaussian(std::move(mean), std::move(cov));
}

void KalmanFilter::step(const Vector& y) {
  const Vector m_pred = transition_ * posterior_.mean();
  const Matrix p_pred = transition_ * posterior_.cov() * transition_.transpose() + process_cov_;
  const Matrix s = observation_ * p_pred * observation_.transpose() + obs_cov_;
  const Matrix gain = s.ldlt().solve(observation_ * p_pred).transpose();
  const Vector mean = m_pred + gain * (y - observation_ * m_pred);
  const Matrix i_kh = Matrix::Identity(p_pred.rows(), p_pred.cols()) - gain * observation_;
  // Joseph form keeps the covariance symmetric PSD.
  Matrix cov = i_kh * p_pred * i_kh.transpose() + gain * obs_cov_ * gain.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  posterior_ = Gaussian(mean, cov);
}

Vector KalmanFilter::state_mean() const { return posterior_.mean().head(static_cast<Eigen::Index>(d_x_)); }

Matrix KalmanFilter::state_cov() const {
  const auto n = static_cast<Eigen::Index>(d_x_);
  return posterior_.cov().topLeftCorner(n, n);
}

Vector KalmanFilter::theta_mean() const {
  return posterior_.mean().tail(posterior_.mean().size() - static_cast<Eigen::Index>(d_x_));
}

Matrix KalmanFilter::theta_cov() const {
  const auto p = posterior_.mean().size() - static_cast<Eigen::Index>(d_x_);
  return posterior_.cov().bottomRightCorner(p, p);
}

LinearGaussianOracle make_linear_gaussian_oracle(std::size_t d_x, const Matrix& A, const Matrix& C, const Matrix& Q,
                                                 const Matrix& R) {
  const auto n = static_cast<Eigen::Index>(d_x);
  LinearGaussianSpec spec{A, C, Q, R, Matrix::Zero(n, 0), Matrix::Zero(n, 0), Vector::Zero(n),
                          Matrix::Identity(n, n), Gaussian(Vector(0), Matrix(0, 0))};
  LinearGaussianModel model(std::move(spec));
  KalmanFilter kalman(model);
  return {std::move(model), std::move(kalman)};
}

}  // namespace mpfusion
