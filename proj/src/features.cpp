#include "vesselwave/features.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "vesselwave/error.hpp"

namespace vesselwave {

namespace {

constexpr std::array<char, 4> kStackMagic{'V', 'W', 'F', 'S'};
constexpr double kDegenerateStd = 1e-12;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>(v >> 24)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void FeatureStack::feature_vector(std::size_t pixel, std::span<double> out) const {
  for (std::size_t f = 0; f < planes.size(); ++f) out[f] = planes[f][pixel];
}

FeatureStack build_stack(const Image& img, const FovMask& mask, const MorletParams& params,
                         std::span<const double> scales) {
  if (scales.empty()) throw Error(ErrorKind::parameter, "at least one wavelet scale is required");
  for (double s : scales) {
    if (!(s >= 1.0)) throw Error(ErrorKind::parameter, "wavelet scales must be >= 1");
  }
  if (!img.same_shape(mask)) throw Error(ErrorKind::parameter, "image and mask dimensions differ");
  FeatureStack stack;
  stack.width = img.width();
  stack.height = img.height();
  stack.scales.assign(scales.begin(), scales.end());
  stack.planes.reserve(scales.size() + 1);
  stack.planes.push_back(img);
  for (double s : scales) stack.planes.push_back(max_modulus(img, params, s));
  return stack;
}

NormalizedStack normalize(const FeatureStack& stack, const FovMask& mask) {
  const std::size_t n = count_set(mask);
  if (n == 0) throw Error(ErrorKind::parameter, "normalization mask is empty");
  NormalizedStack out{stack, {}};
  for (auto& plane : out.stack.planes) {
    if (!plane.same_shape(mask)) {
      throw Error(ErrorKind::parameter, "feature plane and mask dimensions differ");
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (mask[i]) mean += plane[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (mask[i]) var += (plane[i] - mean) * (plane[i] - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    const bool degenerate = !(sd >= kDegenerateStd);
    for (auto& v : plane) v = degenerate ? 0.0 : (v - mean) / sd;
    out.stats.means.push_back(mean);
    out.stats.stds.push_back(sd);
    out.stats.degenerate.push_back(degenerate);
  }
  return out;
}

void write_feature_stack(const std::filesystem::path& path, const FeatureStack& stack) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out.write(kStackMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(stack.width));
  put_u32(out, static_cast<std::uint32_t>(stack.height));
  put_u32(out, static_cast<std::uint32_t>(stack.n_features()));
  for (const auto& plane : stack.planes) {
    for (double v : plane) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
}

FeatureStack read_feature_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (magic != kStackMagic) {
    throw Error(ErrorKind::io, "'" + path.string() + "' is not a feature stack");
  }
  FeatureStack stack;
  stack.width = static_cast<int>(get_u32(in));
  stack.height = static_cast<int>(get_u32(in));
  const auto n = get_u32(in);
  for (std::uint32_t f = 0; f < n; ++f) {
    Image plane(stack.width, stack.height);
    for (auto& v : plane) v = std::bit_cast<float>(get_u32(in));
    stack.planes.push_back(std::move(plane));
  }
  if (!in) throw Error(ErrorKind::io, "truncated feature stack '" + path.string() + "'");
  return stack;
}

}  // namespace vesselwave
