#ifndef MPFUSION_IO_HPP
#define MPFUSION_IO_HPP

#include <string>

#include "mpfusion/experiment.hpp"
#include "mpfusion/model.hpp"

namespace mpfusion {

// Shortest representation that parses back to the same double; independent
// of the C locale. Non-finite values print as nan / inf / -inf.
std::string format_double(double v);

// details.csv: algorithm,realization,t,mse_state,mse_param,failed
std::string details_csv(const ResultTable& table);
// summary.csv: algorithm,t,avg_mse_state,avg_mse_param,n_failed
std::string summary_csv(const ResultTable& table);
// t,x_0..x_{d-1},y_0..y_{d-1}; one row per time step, t starting at 1.
std::string trajectory_csv(const Trajectory& trajectory);

// Writes bytes verbatim (LF endings preserved).
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace mpfusion

#endif  // MPFUSION_IO_HPP
