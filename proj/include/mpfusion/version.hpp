#ifndef MPFUSION_VERSION_HPP
#define MPFUSION_VERSION_HPP

namespace mpfusion {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mpfusion

#endif  // MPFUSION_VERSION_HPP
