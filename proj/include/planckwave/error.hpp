#pragma once

#include <stdexcept>
#include <string>

namespace planckwave {

// Invalid parameters, malformed config files, refused budgets.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature non-convergence, indefinite Gram matrices, empty apertures.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace planckwave
