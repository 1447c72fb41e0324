#include "mpfusion/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mpfusion {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) {
    throw std::runtime_error("format_double: conversion failed");
  }
  return {buf, ptr};
}

std::string details_csv(const ResultTable& table) {
  std::string out = "algorithm,realization,t,mse_state,mse_param,failed\n";
  for (const DetailRow& d : table.details) {
    out += to_string(d.algorithm);
    out += ',' + std::to_string(d.realization);
    out += ',' + std::to_string(d.record.t);
    out += ',' + format_double(d.record.mse_state);
    out += ',' + format_double(d.record.mse_param);
    out += d.record.failed ? ",1\n" : ",0\n";
  }
  return out;
}

std::string summary_csv(const ResultTable& table) {
  std::string out = "algorithm,t,avg_mse_state,avg_mse_param,n_failed\n";
  for (const SummaryRow& s : table.summary) {
    out += to_string(s.algorithm);
    out += ',' + std::to_string(s.t);
    out += ',' + format_double(s.avg_mse_state);
    out += ',' + format_double(s.avg_mse_param);
    out += ',' + std::to_string(s.n_failed) + '\n';
  }
  return out;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  const auto d_x = trajectory.states.cols();
  const auto d_y = trajectory.observations.cols();
  std::string out = "t";
  for (Eigen::Index i = 0; i < d_x; ++i) out += ",x_" + std::to_string(i);
  for (Eigen::Index i = 0; i < d_y; ++i) out += ",y_" + std::to_string(i);
  out += '\n';
  for (Eigen::Index t = 0; t < trajectory.states.rows(); ++t) {
    out += std::to_string(t + 1);
    for (Eigen::Index i = 0; i < d_x; ++i) out += ',' + format_double(trajectory.states(t, i));
    for (Eigen::Index i = 0; i < d_y; ++i) out += ',' + format_double(trajectory.observations(t, i));
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << contents;
  if (!out) {
    throw std::runtime_error("failed writing " + path);
  }
}

}  // namespace mpfusion
