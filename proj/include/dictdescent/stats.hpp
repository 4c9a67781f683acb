#pragma once

#include <span>

namespace dictdescent {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// ordinary least squares y ~ slope * x + intercept; needs two distinct x
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace dictdescent
