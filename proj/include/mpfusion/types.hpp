#ifndef MPFUSION_TYPES_HPP
#define MPFUSION_TYPES_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mpfusion {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Particle storage: one particle per row, rows contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Half-open index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end == begin; }
  bool operator==(const IndexRange&) const = default;
};

// All particle weights are zero (every log-weight is -inf or the sum overflowed).
class DegenerateWeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear-algebra step failed in a way the documented repair cannot fix.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpfusion

#endif  // MPFUSION_TYPES_HPP
