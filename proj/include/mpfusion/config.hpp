#ifndef MPFUSION_CONFIG_HPP
#define MPFUSION_CONFIG_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpfusion/experiment.hpp"
#include "mpfusion/gaussian.hpp"

namespace mpfusion {

// Flat `key = value` text, one entry per line, `#` starts a comment. Keys may
// repeat; order is preserved.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Throws ConfigError(field "line N") on malformed lines.
KeyValues parse_key_values(std::string_view text);

// Reads a file; throws ConfigError(field = path) if it cannot be opened.
std::string read_text_file(const std::string& path);

// Applies entries onto `config`. Unknown keys and unparsable values throw
// ConfigError naming the key. Accepts the same keys as `--set key=value`.
void apply_settings(ExperimentConfig& config, const KeyValues& entries);

// "key=value" -> ("key", "value"); throws ConfigError on a missing '='.
std::pair<std::string, std::string> split_override(std::string_view text);

// Every resolved setting as key/value text, in a fixed order.
KeyValues describe(const ExperimentConfig& config);

struct FusionProblem {
  std::vector<Gaussian> locals;
  Gaussian prior;
};

// fuse-debug input:
//   dim = D
//   prior_mean = m_1 ... m_D
//   prior_cov  = row-major D*D values
//   local_mean = ...   (repeat local_mean / local_cov pairs, K >= 1)
//   local_cov  = ...
// Values may be separated by spaces, commas or semicolons.
FusionProblem parse_fusion_problem(std::string_view text);

}  // namespace mpfusion

#endif  // MPFUSION_CONFIG_HPP
