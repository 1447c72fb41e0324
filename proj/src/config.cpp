#include "mpfusion/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mpfusion/io.hpp"

namespace mpfusion {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_u64(const std::string& key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < v.size()) {
    const auto j = v.find_first_of(" \t,;", i);
    const auto tok = v.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i);
    if (!tok.empty()) out.push_back(tok);
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& key, std::string_view v) {
  std::vector<double> out;
  for (auto tok : split_list(v)) out.push_back(parse_double(key, tok));
  return out;
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value', got '" + std::string(line) + "'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no), "empty key");
    }
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path, "cannot open file");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::string, std::string> split_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || trim(text.substr(0, eq)).empty()) {
    throw ConfigError(std::string(text), "override must look like key=value");
  }
  return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

void apply_settings(ExperimentConfig& c, const KeyValues& entries) {
  for (const auto& [key, value] : entries) {
    if (key == "d_x") {
      c.d_x = parse_u64(key, value);
    } else if (key == "d_theta_g") {
      c.d_theta_g = parse_u64(key, value);
    } else if (key == "theta_full") {
      const auto v = parse_numbers(key, value);
      if (v.size() != 5) throw ConfigError(key, "expected exactly 5 values");
      std::copy(v.begin(), v.end(), c.theta_full.begin());
    } else if (key == "sigma_u2") {
      c.sigma_u2 = parse_double(key, value);
    } else if (key == "sigma_v2") {
      c.sigma_v2 = parse_double(key, value);
    } else if (key == "T") {
      c.T = parse_u64(key, value);
    } else if (key == "K") {
      c.K = value == "auto" ? 0 : parse_u64(key, value);
    } else if (key == "particles_per_unit") {
      c.particles_per_unit = parse_u64(key, value);
    } else if (key == "realizations") {
      c.realizations = parse_u64(key, value);
    } else if (key == "algorithms") {
      std::vector<Algorithm> algs;
      for (auto tok : split_list(value)) {
        try {
          algs.push_back(parse_algorithm(tok));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(key, e.what());
        }
      }
      c.algorithms = std::move(algs);
    } else if (key == "master_seed") {
      c.master_seed = parse_u64(key, value);
    } else if (key == "sigma_rw2") {
      c.sigma_rw2 = parse_double(key, value);
    } else if (key == "pd_floor") {
      c.pd_floor = parse_double(key, value);
    } else {
      throw ConfigError(key, "unknown setting");
    }
  }
}

KeyValues describe(const ExperimentConfig& c) {
  std::string theta;
  for (std::size_t i = 0; i < c.theta_full.size(); ++i) {
    theta += (i ? "," : "") + format_double(c.theta_full[i]);
  }
  std::string algs;
  for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
    algs += (i ? "," : "") + std::string(to_string(c.algorithms[i]));
  }
  return {
      {"d_x", std::to_string(c.d_x)},
      {"d_theta_g", std::to_string(c.d_theta_g)},
      {"theta_full", theta},
      {"sigma_u2", format_double(c.sigma_u2)},
      {"sigma_v2", format_double(c.sigma_v2)},
      {"T", std::to_string(c.T)},
      {"K", std::to_string(c.resolved_K())},
      {"particles_per_unit", std::to_string(c.particles_per_unit)},
      {"realizations", std::to_string(c.realizations)},
      {"algorithms", algs},
      {"master_seed", std::to_string(c.master_seed)},
      {"sigma_rw2", format_double(c.sigma_rw2)},
      {"pd_floor", format_double(c.pd_floor)},
  };
}

FusionProblem parse_fusion_problem(std::string_view text) {
  const KeyValues entries = parse_key_values(text);
  std::size_t dim = 0;
  bool have_dim = false;
  std::vector<double> prior_mean, prior_cov;
  std::vector<std::vector<double>> local_means, local_covs;
  for (const auto& [key, value] : entries) {
    if (key == "dim") {
      dim = parse_u64(key, value);
      have_dim = true;
    } else if (key == "prior_mean") {
      prior_mean = parse_numbers(key, value);
    } else if (key == "prior_cov") {
      prior_cov = parse_numbers(key, value);
    } else if (key == "local_mean") {
      local_means.push_back(parse_numbers(key, value));
    } else if (key == "local_cov") {
      local_covs.push_back(parse_numbers(key, value));
    } else {
      throw ConfigError(key, "unknown key in fusion input");
    }
  }
  if (!have_dim || dim == 0) throw ConfigError("dim", "missing or zero");
  if (local_means.empty()) throw ConfigError("local_mean", "need at least one local posterior");
  if (local_means.size() != local_covs.size()) {
    throw ConfigError("local_cov", "every local_mean needs a matching local_cov");
  }
  const auto d = static_cast<Eigen::Index>(dim);
  auto make = [&](const std::vector<double>& m, const std::vector<double>& c, const std::string& what) {
    if (m.size() != dim) throw ConfigError(what + "_mean", "expected " + std::to_string(dim) + " values");
    if (c.size() != dim * dim) throw ConfigError(what + "_cov", "expected " + std::to_string(dim * dim) + " values");
    Vector mean = Eigen::Map<const Vector>(m.data(), d);
    Matrix cov = Eigen::Map<const RowMatrix>(c.data(), d, d);
    return Gaussian(std::move(mean), std::move(cov));
  };
  FusionProblem p;
  p.prior = make(prior_mean, prior_cov, "prior");
  for (std::size_t k = 0; k < local_means.size(); ++k) {
    p.locals.push_back(make(local_means[k], local_covs[k], "local"));
  }
  return p;
}

}  // namespace mpfusion
