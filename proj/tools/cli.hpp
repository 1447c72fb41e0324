#ifndef MPFUSION_TOOLS_CLI_HPP
#define MPFUSION_TOOLS_CLI_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mpfusion::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 1;

struct RunOptions {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;  // key=value
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides master_seed
  std::size_t threads = 1;
};

struct SimulateOptions {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;  // master seed
  std::size_t realization = 0;
  std::string out_path = "trajectory.csv";
};

// Writes details.csv, summary.csv and manifest.json into out_dir.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
// Writes the trajectory of one realization as CSV.
int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);
// Fuses the Gaussians listed in a text file and prints the result.
int cmd_fuse_debug(const std::string& inputs_path, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace mpfusion::cli

#endif  // MPFUSION_TOOLS_CLI_HPP
