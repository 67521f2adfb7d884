#pragma once

#include <stdexcept>
#include <string>

namespace gauge_reduce {

/// Raised when the orbit metric d = -Laplacian + g0^2 |f|^2 is not positive
/// definite, which on the torus happens exactly when the scalar field vanishes.
class SingularOrbitMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense assembly is refused above kMaxDenseSites lattice sites.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxDenseSites = 512;

}  // namespace gauge_reduce
