#pragma once

// Fixed-order Gauss-Legendre panel rules shared by the radial integrators.

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

namespace ringmod::quad {

/// Composite 10-point Gauss-Legendre on `panels` equal panels of [a, b].
template <class F>
double gauss_panels(F&& f, double a, double b, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const double w = (b - a) / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * w;
    sum += Rule::integrate(f, lo, k + 1 == panels ? b : lo + w);
  }
  return sum;
}

/// Integral of f(t) dt over [lo, hi], 0 < lo < hi, on geometrically spaced
/// panels (substitution t = e^s), `per_decade` panels per factor of 10.
template <class F>
double log_panels(F&& f, double lo, double hi, int per_decade) {
  const double s0 = std::log(lo);
  const double s1 = std::log(hi);
  const int panels = std::max(1, static_cast<int>(std::ceil((s1 - s0) / std::log(10.0) * per_decade)));
  return gauss_panels(
      [&f](double s) {
        const double t = std::exp(s);
        return f(t) * t;
      },
      s0, s1, panels);
}

}  // namespace ringmod::quad
