#include "mpfusion/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mpfusion {

namespace {

std::span<double> row_span(RowMatrix& m, Eigen::Index row, IndexRange cols) {
  return {m.row(row).data() + cols.begin, cols.size()};
}

std::span<const double> row_span(const RowMatrix& m, Eigen::Index row, IndexRange cols) {
  return {m.row(row).data() + cols.begin, cols.size()};
}

bool is_multi(Algorithm a) { return a == Algorithm::mpf || a == Algorithm::mpf_fusion; }

// Bootstrap move: optional random walk on every static parameter, transition
// prior draw for the substate, then accumulate the block log-likelihood.
void propagate_and_weight(ParticleCloud& cloud, IndexRange block, const SeparableModel& model,
                          std::span<const double> y, Rng& rng, double random_walk_var) {
  const CloudLayout& layout = cloud.layout;
  const std::span<const double> y_block = y.subspan(block.begin, block.size());
  const double rw_sd = std::sqrt(random_walk_var);
  const IndexRange params{layout.state_dim, layout.width()};
  std::vector<double> x_prev(layout.state_dim);
  for (Eigen::Index n = 0; n < cloud.samples.rows(); ++n) {
    if (random_walk_var > 0.0) {
      for (double& p : row_span(cloud.samples, n, params)) {
        p += rw_sd * rng.normal();
      }
    }
    const auto x = row_span(cloud.samples, n, layout.state());
    std::copy(x.begin(), x.end(), x_prev.begin());
    const auto local = row_span(std::as_const(cloud.samples), n, layout.local());
    const auto global = row_span(std::as_const(cloud.samples), n, layout.global());
    model.propagate(block, x_prev, local, global, rng, x);
    cloud.log_weights[n] += model.log_likelihood(block, y_block, x, local, global);
  }
}

struct CloudMoments {
  Vector state;
  Vector global;
};

CloudMoments cloud_means(const ParticleCloud& cloud, const Vector& weights) {
  const Vector mean = cloud.samples.transpose() * weights;
  const CloudLayout& l = cloud.layout;
  return {mean.segment(0, static_cast<Eigen::Index>(l.state_dim)),
          mean.segment(static_cast<Eigen::Index>(l.global().begin), static_cast<Eigen::Index>(l.global_dim))};
}

// Normalized weights for every cloud, or nullopt if any cloud degenerated.
std::optional<std::vector<Vector>> normalize_all(const FilterState& state) {
  std::vector<Vector> weights;
  weights.reserve(state.clouds.size());
  try {
    for (const auto& c : state.clouds) {
      weights.push_back(normalize(c.log_weights));
    }
  } catch (const DegenerateWeightsError&) {
    return std::nullopt;
  }
  return weights;
}

Estimates assemble_estimates(const FilterState& state, const std::vector<Vector>& weights, std::size_t d_x) {
  Estimates est;
  est.state_mean = Vector::Zero(static_cast<Eigen::Index>(d_x));
  const auto d_g = static_cast<Eigen::Index>(state.clouds.front().layout.global_dim);
  est.theta_mean = Vector::Zero(d_g);
  for (std::size_t k = 0; k < state.clouds.size(); ++k) {
    const CloudMoments m = cloud_means(state.clouds[k], weights[k]);
    const IndexRange b = state.blocks[k];
    est.state_mean.segment(static_cast<Eigen::Index>(b.begin), static_cast<Eigen::Index>(b.size())) = m.state;
    est.theta_mean += m.global;
    if (is_multi(state.algorithm)) {
      est.filter_theta_means.push_back(m.global);
    }
  }
  est.theta_mean /= static_cast<double>(state.clouds.size());
  return est;
}

Estimates fail(FilterState& state) {
  state.failed = true;
  return state.last_estimates;
}

void require_algorithm(const FilterState& state, Algorithm expected, const char* what) {
  if (state.algorithm != expected) {
    throw std::invalid_argument(std::string(what) + ": filter state was initialized for " +
                                std::string(to_string(state.algorithm)));
  }
}

void require_observation(const SeparableModel& model, std::span<const double> y) {
  if (y.size() != model.state_dim()) {
    throw std::invalid_argument("filter step: observation has dimension " + std::to_string(y.size()) +
                                ", expected " + std::to_string(model.state_dim()));
  }
}

// Shared recipe of spf_step and mpf_step_no_fusion.
Estimates bootstrap_step(FilterState& state, const SeparableModel& model, std::span<const double> y) {
  if (state.failed) {
    return state.last_estimates;
  }
  require_observation(model, y);
  ++state.t;
  for (std::size_t k = 0; k < state.clouds.size(); ++k) {
    propagate_and_weight(state.clouds[k], state.blocks[k], model, y, state.rngs[k], state.options.random_walk_var);
  }
  const auto weights = normalize_all(state);
  if (!weights) {
    return fail(state);
  }
  Estimates est = assemble_estimates(state, *weights, model.state_dim());
  for (std::size_t k = 0; k < state.clouds.size(); ++k) {
    auto& cloud = state.clouds[k];
    apply_resample(cloud, systematic_resample((*weights)[k], cloud.size(), state.rngs[k]));
  }
  state.last_estimates = est;
  return est;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::spf:
      return "spf";
    case Algorithm::dapf:
      return "dapf";
    case Algorithm::mpf:
      return "mpf";
    case Algorithm::mpf_fusion:
      return "mpf-fusion";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms) {
    if (to_string(a) == name) {
      return a;
    }
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "' (expected spf, dapf, mpf, mpf-fusion)");
}

FilterState init_filter(Algorithm algorithm, const SeparableModel& model, const Partitioning& partitioning,
                        std::size_t n_total, std::uint64_t seed, FilterOptions options) {
  const std::size_t d_x = model.state_dim();
  FilterState state;
  state.algorithm = algorithm;
  state.options = options;
  if (is_multi(algorithm)) {
    if (partitioning.K == 0 || partitioning.state_blocks.size() != partitioning.K) {
      throw std::invalid_argument("init_filter: malformed partitioning");
    }
    std::size_t expected = 0;
    for (const IndexRange& b : partitioning.state_blocks) {
      if (b.begin != expected || b.empty()) {
        throw std::invalid_argument("init_filter: partition blocks must be contiguous, ordered and nonempty");
      }
      expected = b.end;
      model.check_block(b);
    }
    if (expected != d_x) {
      throw std::invalid_argument("init_filter: partition does not cover the state");
    }
    if (n_total % partitioning.K != 0) {
      throw std::invalid_argument("init_filter: N_total=" + std::to_string(n_total) +
                                  " is not divisible by K=" + std::to_string(partitioning.K));
    }
    state.blocks = partitioning.state_blocks;
  } else {
    state.blocks = {IndexRange{0, d_x}};
  }
  const std::size_t per_cloud = n_total / state.blocks.size();
  if (per_cloud == 0) {
    throw std::invalid_argument("init_filter: need at least one particle per filter");
  }

  const Gaussian prior = model.global_prior();
  const GaussianSampler prior_sampler(prior);
  std::vector<Vector> weights;
  for (std::size_t k = 0; k < state.blocks.size(); ++k) {
    const IndexRange block = state.blocks[k];
    const CloudLayout layout{block.size(), model.local_dim(block), model.global_dim()};
    ParticleCloud cloud(per_cloud, layout);
    Rng rng(derive_seed(seed, k, "cloud"));
    for (Eigen::Index n = 0; n < cloud.samples.rows(); ++n) {
      model.sample_initial_state(block, rng, row_span(cloud.samples, n, layout.state()));
      model.sample_initial_local(block, rng, row_span(cloud.samples, n, layout.local()));
      prior_sampler.draw(rng, row_span(cloud.samples, n, layout.global()));
    }
    weights.push_back(normalize(cloud.log_weights));
    state.clouds.push_back(std::move(cloud));
    state.rngs.push_back(rng);
  }
  if (algorithm == Algorithm::mpf_fusion) {
    state.fused_prior = prior;
  }
  state.last_estimates = assemble_estimates(state, weights, d_x);
  return state;
}

Estimates spf_step(FilterState& state, const SeparableModel& model, std::span<const double> y) {
  require_algorithm(state, Algorithm::spf, "spf_step");
  return bootstrap_step(state, model, y);
}

Estimates mpf_step_no_fusion(FilterState& state, const SeparableModel& model, std::span<const double> y) {
  require_algorithm(state, Algorithm::mpf, "mpf_step_no_fusion");
  return bootstrap_step(state, model, y);
}

Estimates dapf_step(FilterState& state, const SeparableModel& model, std::span<const double> y) {
  require_algorithm(state, Algorithm::dapf, "dapf_step");
  if (state.failed) {
    return state.last_estimates;
  }
  require_observation(model, y);
  ++state.t;
  auto& cloud = state.clouds.front();
  propagate_and_weight(cloud, state.blocks.front(), model, y, state.rngs.front(), 0.0);
  const auto weights = normalize_all(state);
  if (!weights) {
    return fail(state);
  }
  Estimates est = assemble_estimates(state, *weights, model.state_dim());
  try {
    Gaussian fit = fit_from_weighted(cloud.samples, weights->front(), state.options.pd_floor);
    const GaussianSampler sampler(fit);
    for (Eigen::Index n = 0; n < cloud.samples.rows(); ++n) {
      sampler.draw(state.rngs.front(), {cloud.samples.row(n).data(), cloud.layout.width()});
    }
    state.last_fits = {std::move(fit)};
  } catch (const NumericalError&) {
    return fail(state);
  }
  cloud.log_weights.setZero();
  state.last_estimates = est;
  return est;
}

Estimates mpf_step_fusion(FilterState& state, const SeparableModel& model, std::span<const double> y) {
  require_algorithm(state, Algorithm::mpf_fusion, "mpf_step_fusion");
  if (state.failed) {
    return state.last_estimates;
  }
  if (!state.fused_prior) {
    throw std::invalid_argument("mpf_step_fusion: missing fused prior");
  }
  require_observation(model, y);
  ++state.t;

  // Local updates with theta_g held static.
  for (std::size_t k = 0; k < state.clouds.size(); ++k) {
    propagate_and_weight(state.clouds[k], state.blocks[k], model, y, state.rngs[k], 0.0);
  }
  const auto weights = normalize_all(state);
  if (!weights) {
    return fail(state);
  }
  Estimates est = assemble_estimates(state, *weights, model.state_dim());

  try {
    // Gaussian approximation of every local posterior, then its theta_g marginal.
    std::vector<Gaussian> fits;
    std::vector<Gaussian> marginals;
    fits.reserve(state.clouds.size());
    marginals.reserve(state.clouds.size());
    for (std::size_t k = 0; k < state.clouds.size(); ++k) {
      fits.push_back(fit_from_weighted(state.clouds[k].samples, (*weights)[k], state.options.pd_floor));
      marginals.push_back(marginal(fits.back(), state.clouds[k].layout.global()));
    }

    Gaussian fused = *state.fused_prior;
    std::optional<GaussianSampler> sampler;
    try {
      FusionResult res = fuse(marginals, *state.fused_prior, state.options.pd_floor);
      sampler.emplace(res.fused);
      fused = std::move(res.fused);
      state.last_fusion_path = res.path;
      if (res.path == FusionPath::clamped) ++state.fusion_counters.clamped;
      if (res.path == FusionPath::product_only) ++state.fusion_counters.product_only;
    } catch (const NumericalError&) {
      ++state.fusion_counters.failures;
      state.last_fusion_path.reset();
      sampler.emplace(fused);
    }

    // Fused resampling: theta_g from q_t, the rest from the local conditional.
    for (std::size_t k = 0; k < state.clouds.size(); ++k) {
      auto& cloud = state.clouds[k];
      const auto target = range_indices(cloud.layout.non_global());
      const auto given = range_indices(cloud.layout.global());
      const GaussianConditioner conditioner(fits[k], target, given, state.options.pd_floor);
      Rng& rng = state.rngs[k];
      Vector theta(static_cast<Eigen::Index>(given.size()));
      for (Eigen::Index n = 0; n < cloud.samples.rows(); ++n) {
        sampler->draw(rng, {theta.data(), given.size()});
        std::copy(theta.data(), theta.data() + theta.size(),
                  row_span(cloud.samples, n, cloud.layout.global()).begin());
        conditioner.sample(theta, rng, row_span(cloud.samples, n, cloud.layout.non_global()));
      }
      cloud.log_weights.setZero();
    }

    est.filter_theta_means.clear();
    for (const auto& m : marginals) {
      est.filter_theta_means.push_back(m.mean());
    }
    est.theta_mean = fused.mean();
    state.fused_prior = std::move(fused);
    state.last_fits = std::move(fits);
  } catch (const NumericalError&) {
    return fail(state);
  }
  state.last_estimates = est;
  return est;
}

Estimates filter_step(FilterState& state, const SeparableModel& model, std::span<const double> y) {
  switch (state.algorithm) {
    case Algorithm::spf:
      return spf_step(state, model, y);
    case Algorithm::dapf:
      return dapf_step(state, model, y);
    case Algorithm::mpf:
      return mpf_step_no_fusion(state, model, y);
    case Algorithm::mpf_fusion:
      return mpf_step_fusion(state, model, y);
  }
  throw std::invalid_argument("filter_step: unknown algorithm");
}

}  // namespace mpfusion
