#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "vesselwave/grid.hpp"

namespace vwtest {

// Direct O(pixels * support) evaluation of the Morlet transform: correlation of
// the image (zero outside) with the conjugated, scaled and rotated wavelet,
// truncated where the envelope's Mahalanobis radius exceeds 4.
inline vesselwave::ComplexMap spatial_cwt(const vesselwave::Image& f, double eps, double k0x,
                                          double k0y, double c_psi, double a, double theta_deg) {
  const double t = theta_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t);
  const double s = std::sin(t);
  vesselwave::ComplexMap out(f.width(), f.height());
  for (int by = 0; by < f.height(); ++by) {
    for (int bx = 0; bx < f.width(); ++bx) {
      std::complex<double> sum = 0.0;
      for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
          const double dx = x - bx;
          const double dy = y - by;
          const double u1 = (c * dx + s * dy) / a;
          const double u2 = (-s * dx + c * dy) / a;
          const double r2 = u1 * u1 / eps + u2 * u2;
          if (r2 > 16.0 + 1e-9) continue;
          const std::complex<double> psi =
              std::polar(std::exp(-0.5 * r2), k0x * u1 + k0y * u2);
          sum += std::conj(psi) * f(x, y);
        }
      }
      out(bx, by) = sum / (a * std::sqrt(c_psi));
    }
  }
  return out;
}

inline double relative_frobenius(const vesselwave::ComplexMap& a, const vesselwave::ComplexMap& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace vwtest
