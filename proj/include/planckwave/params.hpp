#pragma once

#include <cmath>
#include <sstream>

#include "planckwave/error.hpp"

namespace planckwave {

/// Scalar knobs of the random wave model.
///
/// `n` is the ambient dimension, `h` the semiclassical parameter, `beta` the
/// width exponent of the momentum annulus [1 - h^beta, 1 + h^beta], `alpha`
/// the angular aperture exponent of the phase-space localizer, `mu` its
/// distance from Planck scale and `epsilon` the exponent of the large-mu
/// regime mu = h^-epsilon.
struct ModelParams {
  int n = 2;
  double h = 1.0 / 64.0;
  double beta = 1.0;
  double alpha = 0.5;
  double mu = 1.0;
  double epsilon = 0.3;

  void validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("invalid model parameters: " + what); };
    if (n < 2) fail("n must be >= 2");
    if (!(h > 0.0 && h < 1.0)) fail("h must lie in (0, 1)");
    if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
    if (!(alpha >= 0.0 && alpha <= beta / 2.0 + 1e-15)) fail("alpha must lie in [0, beta/2]");
    if (!(mu >= 1.0) || !std::isfinite(mu)) fail("mu must be >= 1");
    if (!(epsilon > 0.0 && epsilon <= 0.5)) fail("epsilon must lie in (0, 1/2]");
  }

  /// Half-width of the momentum annulus.
  double annulus_halfwidth() const { return std::pow(h, beta); }

  /// The far-from-Planck-scale localizer parameter h^-epsilon.
  double large_mu() const { return std::pow(h, -epsilon); }

  std::string describe() const {
    std::ostringstream os;
    os << "n=" << n << " h=" << h << " beta=" << beta << " alpha=" << alpha << " mu=" << mu
       << " epsilon=" << epsilon;
    return os.str();
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

}  // namespace planckwave
