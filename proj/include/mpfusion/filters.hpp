#ifndef MPFUSION_FILTERS_HPP
#define MPFUSION_FILTERS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mpfusion/gaussian.hpp"
#include "mpfusion/model.hpp"
#include "mpfusion/particles.hpp"
#include "mpfusion/rng.hpp"

namespace mpfusion {

enum class Algorithm {
  spf,         // one bootstrap filter, random walk on the static parameters
  dapf,        // one filter, moment-matched Gaussian redraw every step
  mpf,         // K bootstrap filters, each with its own random-walk copy of theta_g
  mpf_fusion,  // K filters sharing theta_g through the fused Gaussian posterior
};

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::spf, Algorithm::dapf, Algorithm::mpf,
                                               Algorithm::mpf_fusion};

std::string_view to_string(Algorithm a);
// Accepts "spf", "dapf", "mpf", "mpf-fusion". Throws std::invalid_argument.
Algorithm parse_algorithm(std::string_view name);

struct FilterOptions {
  double random_walk_var = 0.01;  // SPF / MPF-no-fusion parameter jitter
  double pd_floor = kDefaultPdFloor;
};

struct Estimates {
  Vector state_mean;                       // d_x
  Vector theta_mean;                       // d_theta_g
  std::vector<Vector> filter_theta_means;  // per cloud, MPF variants only
};

struct FusionCounters {
  std::size_t clamped = 0;
  std::size_t product_only = 0;
  std::size_t failures = 0;  // fusion threw; previous fused prior reused
};

struct FilterState {
  Algorithm algorithm = Algorithm::spf;
  FilterOptions options;
  std::vector<IndexRange> blocks;  // state block tracked by each cloud
  std::vector<ParticleCloud> clouds;
  std::vector<Rng> rngs;  // one private stream per cloud
  std::optional<Gaussian> fused_prior;  // mpf_fusion only: q(theta_g | y_{1:t-1})
  std::vector<Gaussian> last_fits;      // joint Gaussians fitted in the latest dapf / mpf_fusion step
  std::optional<FusionPath> last_fusion_path;
  FusionCounters fusion_counters;
  Estimates last_estimates;
  std::size_t t = 0;
  bool failed = false;
};

// SPF / DAPF: one cloud of n_total particles over [x | local | theta_g].
// MPF variants: K clouds of n_total / K particles over [x_k | local_k | theta_g].
// Cloud k draws from derive_seed(seed, k, "cloud").
FilterState init_filter(Algorithm algorithm, const SeparableModel& model, const Partitioning& partitioning,
                        std::size_t n_total, std::uint64_t seed, FilterOptions options = {});

// Each step consumes y_t and returns the point estimates for time t. After a
// degenerate-weights event the state is flagged failed and every later step
// returns the last valid estimates unchanged.
Estimates spf_step(FilterState& state, const SeparableModel& model, std::span<const double> y);
Estimates dapf_step(FilterState& state, const SeparableModel& model, std::span<const double> y);
Estimates mpf_step_no_fusion(FilterState& state, const SeparableModel& model, std::span<const double> y);
Estimates mpf_step_fusion(FilterState& state, const SeparableModel& model, std::span<const double> y);

Estimates filter_step(FilterState& state, const SeparableModel& model, std::span<const double> y);

}  // namespace mpfusion

#endif  // MPFUSION_FILTERS_HPP
