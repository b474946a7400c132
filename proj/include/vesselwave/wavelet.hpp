#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <vector>

#include "vesselwave/grid.hpp"

namespace vesselwave {

/// Orientations 0, step, 2*step, ... strictly below 180 degrees.
std::vector<double> angle_sweep(double step_degrees);

/// Parameters of the anisotropic 2-D Morlet wavelet
///   psi(x) = exp(j k0.x) exp(-|A x|^2 / 2),  A = diag(epsilon^-1/2, 1).
struct MorletParams {
  double epsilon = 8.0;
  std::array<double, 2> k0{0.0, 3.0};
  double c_psi = 1.0;
  std::vector<double> angles = angle_sweep(10.0);  // degrees, in [0, 180)

  void validate() const;
};

/// Mother wavelet at `(x1, x2)` without truncation.
std::complex<double> morlet(const MorletParams& params, double x1, double x2);

/// Smallest lattice half-width holding the envelope out to 4 standard
/// deviations: ceil(4 * scale * sqrt(epsilon)).
int kernel_halfwidth(const MorletParams& params, double scale);

/// Samples psi(a^-1 r_{-theta} d) for integer offsets d in [-halfwidth, halfwidth]^2.
/// Entry `(halfwidth + dx, halfwidth + dy)` holds offset `(dx, dy)`; x runs
/// along image columns and y along rows, and angles turn from +x toward +y.
/// Samples whose envelope Mahalanobis radius exceeds 4 are exactly zero.
ComplexMap morlet_kernel(const MorletParams& params, double scale, double angle_degrees,
                         int halfwidth);

/// T(b, theta, a) = C^-1/2 a^-1 sum_x conj(psi(a^-1 r_{-theta}(x - b))) f(x),
/// a linear (zero-padded) correlation evaluated through FFTs.
ComplexMap cwt_response(const Image& img, const MorletParams& params, double scale,
                        double angle_degrees);

/// Responses for every angle in `params.angles`, sharing one image transform.
std::vector<ComplexMap> cwt_responses(const Image& img, const MorletParams& params,
                                      double scale);

struct MaxModulus {
  Image modulus;
  Grid<int> argmax;  // index into params.angles
};

/// max over params.angles of |T(b, theta, a)|, with the maximizing angle index.
MaxModulus max_modulus_with_argmax(const Image& img, const MorletParams& params, double scale);
Image max_modulus(const Image& img, const MorletParams& params, double scale);

/// Debug dump: linearly rescales [0, max] to 16 bits.
void write_response_pgm(const std::filesystem::path& path, const Image& modulus);

}  // namespace vesselwave
