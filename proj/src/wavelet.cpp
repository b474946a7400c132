#include "vesselwave/wavelet.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "vesselwave/error.hpp"
#include "vesselwave/imageio.hpp"

namespace vesselwave {

namespace {

// The FFTW planner is not re-entrant; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

struct PlanDestroy {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, PlanDestroy>;

FftwBuffer allocate(std::size_t n) {
  auto* p = fftw_alloc_complex(n);
  if (!p) throw std::bad_alloc();
  return FftwBuffer(p);
}

bool is_smooth(int n) {
  for (int p : {2, 3, 5, 7}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

int next_smooth(int n) {
  while (!is_smooth(n)) ++n;
  return n;
}

constexpr double kTruncationRadius = 4.0;

// Padded frame for linear correlation of a w x h image with kernels of the
// given half-width. N >= extent + halfwidth keeps circular wrap-around out of
// the original extent.
class CorrelationFrame {
 public:
  CorrelationFrame(int width, int height, int halfwidth)
      : width_(width), height_(height),
        pw_(next_smooth(width + halfwidth)), ph_(next_smooth(height + halfwidth)),
        n_(static_cast<std::size_t>(pw_) * ph_),
        image_(allocate(n_)), work_(allocate(n_)) {
    std::lock_guard lock(planner_mutex());
    // Row-major: ph_ rows of pw_ columns.
    forward_.reset(fftw_plan_dft_2d(ph_, pw_, work_.get(), work_.get(), FFTW_FORWARD,
                                    FFTW_ESTIMATE));
    backward_.reset(fftw_plan_dft_2d(ph_, pw_, work_.get(), work_.get(), FFTW_BACKWARD,
                                     FFTW_ESTIMATE));
  }

  void load_image(const Image& img) {
    std::fill_n(&image_[0][0], 2 * n_, 0.0);
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        image_[static_cast<std::size_t>(y) * pw_ + x][0] = img(x, y);
      }
    }
    fftw_execute_dft(forward_.get(), image_.get(), image_.get());
  }

  ComplexMap correlate(const ComplexMap& kernel, double gain) {
    const int hw = kernel.width() / 2;
    std::fill_n(&work_[0][0], 2 * n_, 0.0);
    // Convolution filter h(m) = conj(K(-m)), stored with periodic indexing.
    for (int dy = -hw; dy <= hw; ++dy) {
      for (int dx = -hw; dx <= hw; ++dx) {
        const std::complex<double> k = kernel(hw + dx, hw + dy);
        if (k == std::complex<double>{}) continue;
        const int mx = (-dx % pw_ + pw_) % pw_;
        const int my = (-dy % ph_ + ph_) % ph_;
        auto& slot = work_[static_cast<std::size_t>(my) * pw_ + mx];
        slot[0] = k.real();
        slot[1] = -k.imag();
      }
    }
    fftw_execute_dft(forward_.get(), work_.get(), work_.get());
    for (std::size_t i = 0; i < n_; ++i) {
      const double ar = work_[i][0], ai = work_[i][1];
      const double br = image_[i][0], bi = image_[i][1];
      work_[i][0] = ar * br - ai * bi;
      work_[i][1] = ar * bi + ai * br;
    }
    fftw_execute_dft(backward_.get(), work_.get(), work_.get());
    const double norm = gain / static_cast<double>(n_);
    ComplexMap out(width_, height_);
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        const auto& v = work_[static_cast<std::size_t>(y) * pw_ + x];
        out(x, y) = {v[0] * norm, v[1] * norm};
      }
    }
    return out;
  }

 private:
  int width_, height_;
  int pw_, ph_;
  std::size_t n_;
  FftwBuffer image_;
  FftwBuffer work_;
  FftwPlan forward_;
  FftwPlan backward_;
};

void check_finite(const Image& img) {
  if (img.empty()) throw Error(ErrorKind::data, "empty image");
  for (double v : img) {
    if (!std::isfinite(v)) throw Error(ErrorKind::data, "image contains non-finite values");
  }
}

void check_scale(double scale) {
  if (!(scale >= 1.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::parameter, "wavelet scale must be >= 1, got " + std::to_string(scale));
  }
}

double response_gain(const MorletParams& params, double scale) {
  return 1.0 / (std::sqrt(params.c_psi) * scale);
}

}  // namespace

std::vector<double> angle_sweep(double step_degrees) {
  if (!(step_degrees > 0.0) || step_degrees >= 180.0) {
    throw Error(ErrorKind::parameter, "angle step must lie in (0, 180) degrees");
  }
  std::vector<double> angles;
  for (int i = 0;; ++i) {
    const double a = i * step_degrees;
    if (a >= 180.0 - 1e-9) break;
    angles.push_back(a);
  }
  return angles;
}

void MorletParams::validate() const {
  if (!(epsilon >= 1.0)) throw Error(ErrorKind::parameter, "epsilon must be >= 1");
  if (!(c_psi > 0.0)) throw Error(ErrorKind::parameter, "c_psi must be > 0");
  if (!std::isfinite(k0[0]) || !std::isfinite(k0[1])) {
    throw Error(ErrorKind::parameter, "k0 must be finite");
  }
  if (angles.empty()) throw Error(ErrorKind::parameter, "angle list is empty");
  for (double a : angles) {
    if (!(a >= 0.0 && a < 180.0)) {
      throw Error(ErrorKind::parameter, "angles must lie in [0, 180) degrees");
    }
  }
}

std::complex<double> morlet(const MorletParams& params, double x1, double x2) {
  const double envelope = std::exp(-0.5 * (x1 * x1 / params.epsilon + x2 * x2));
  const double phase = params.k0[0] * x1 + params.k0[1] * x2;
  return std::polar(envelope, phase);
}

int kernel_halfwidth(const MorletParams& params, double scale) {
  return static_cast<int>(std::ceil(kTruncationRadius * scale * std::sqrt(params.epsilon)));
}

ComplexMap morlet_kernel(const MorletParams& params, double scale, double angle_degrees,
                         int halfwidth) {
  params.validate();
  if (!(scale > 0.0)) throw Error(ErrorKind::parameter, "wavelet scale must be > 0");
  if (halfwidth < kernel_halfwidth(params, scale)) {
    throw Error(ErrorKind::parameter,
                "kernel half-width " + std::to_string(halfwidth) +
                    " cannot hold the 4-sigma envelope (needs " +
                    std::to_string(kernel_halfwidth(params, scale)) + ")");
  }
  const double theta = angle_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double limit = kTruncationRadius * kTruncationRadius + 1e-9;
  const int size = 2 * halfwidth + 1;
  ComplexMap kernel(size, size);
  for (int dy = -halfwidth; dy <= halfwidth; ++dy) {
    for (int dx = -halfwidth; dx <= halfwidth; ++dx) {
      // u = a^-1 r_{-theta} d
      const double u1 = (c * dx + s * dy) / scale;
      const double u2 = (-s * dx + c * dy) / scale;
      if (u1 * u1 / params.epsilon + u2 * u2 > limit) continue;
      kernel(halfwidth + dx, halfwidth + dy) = morlet(params, u1, u2);
    }
  }
  return kernel;
}

std::vector<ComplexMap> cwt_responses(const Image& img, const MorletParams& params,
                                      double scale) {
  params.validate();
  check_scale(scale);
  check_finite(img);
  const int hw = kernel_halfwidth(params, scale);
  CorrelationFrame frame(img.width(), img.height(), hw);
  frame.load_image(img);
  const double gain = response_gain(params, scale);
  std::vector<ComplexMap> out;
  out.reserve(params.angles.size());
  for (double angle : params.angles) {
    out.push_back(frame.correlate(morlet_kernel(params, scale, angle, hw), gain));
  }
  return out;
}

ComplexMap cwt_response(const Image& img, const MorletParams& params, double scale,
                        double angle_degrees) {
  MorletParams single = params;
  single.angles = {0.0};
  single.validate();
  check_scale(scale);
  check_finite(img);
  const int hw = kernel_halfwidth(params, scale);
  CorrelationFrame frame(img.width(), img.height(), hw);
  frame.load_image(img);
  // Any real angle is accepted here; the [0, 180) restriction is for sweeps.
  return frame.correlate(morlet_kernel(single, scale, angle_degrees, hw),
                         response_gain(params, scale));
}

MaxModulus max_modulus_with_argmax(const Image& img, const MorletParams& params, double scale) {
  params.validate();
  check_scale(scale);
  check_finite(img);
  const int hw = kernel_halfwidth(params, scale);
  CorrelationFrame frame(img.width(), img.height(), hw);
  frame.load_image(img);
  const double gain = response_gain(params, scale);
  MaxModulus out{Image(img.width(), img.height(), 0.0), Grid<int>(img.width(), img.height(), 0)};
  for (std::size_t a = 0; a < params.angles.size(); ++a) {
    const ComplexMap response =
        frame.correlate(morlet_kernel(params, scale, params.angles[a], hw), gain);
    for (std::size_t i = 0; i < response.size(); ++i) {
      const double m = std::abs(response[i]);
      if (a == 0 || m > out.modulus[i]) {
        out.modulus[i] = m;
        out.argmax[i] = static_cast<int>(a);
      }
    }
  }
  return out;
}

Image max_modulus(const Image& img, const MorletParams& params, double scale) {
  return max_modulus_with_argmax(img, params, scale).modulus;
}

void write_response_pgm(const std::filesystem::path& path, const Image& modulus) {
  double peak = 0.0;
  for (double v : modulus) peak = std::max(peak, v);
  Image scaled(modulus.width(), modulus.height(), 0.0);
  if (peak > 0.0) {
    for (std::size_t i = 0; i < modulus.size(); ++i) scaled[i] = modulus[i] / peak;
  }
  write_pgm16(path, scaled);
}

}  // namespace vesselwave
