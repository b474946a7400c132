#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vesselwave/grid.hpp"
#include "vesselwave/imageio.hpp"

namespace vesselwave {

struct SynthOptions {
  std::uint64_t seed = 42;
  int count = 8;
  int size = 256;
  double noise_sigma = 0.02;
  double min_width = 2.0;
  double max_width = 6.0;
  int vessels = 14;  // curves per image
};

/// One fundus-like RGB image with exact vessel labels. `second_observer`
/// drops the thinnest vessels, standing in for a second human labelling.
struct SynthSample {
  std::string stem;
  Raster rgb;
  Mask truth;
  Mask second_observer;
  FovMask fov;
};

SynthSample generate_synthetic(const SynthOptions& options, int index);

/// Writes images/, masks/, labels1/ and labels2/ under `root` as PNG files.
void write_synthetic_dataset(const std::filesystem::path& root, const SynthOptions& options);

}  // namespace vesselwave
