#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "vesselwave/grid.hpp"

namespace vesselwave {

enum class Channel { red, green, blue, gray };

Channel parse_channel(std::string_view name);
const char* to_string(Channel channel);

/// Decoded 8-bit raster with interleaved channels (1 = gray, 3 = RGB).
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  int max_value = 255;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Reads PNG, binary/ASCII PGM (P2/P5) and PPM (P3/P6). Throws ErrorKind::io.
Raster read_raster(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Raster& raster);
/// Writes a binary map as an 8-bit gray PNG with values 0/255.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
/// Writes values clamped to [0,1] as a 16-bit binary PGM.
void write_pgm16(const std::filesystem::path& path, const Image& image);

/// Selected channel scaled to [0,1]; gray rasters ignore `channel`.
Image channel_of(const Raster& raster, Channel channel);
Image load_channel(const std::filesystem::path& path, Channel channel);

Image invert(const Image& img);

/// Pixel is inside iff its first channel exceeds half of full scale.
FovMask load_mask(const std::filesystem::path& path);
/// As above, but the mask must match the dimensions of `paired`.
FovMask load_mask(const std::filesystem::path& path, const Image& paired);

FovMask erode(const FovMask& mask, int radius);

/// Threshold followed by a disc erosion that pulls the mask off the aperture
/// rim. Throws ErrorKind::data when nothing survives.
FovMask derive_mask(const Image& img, double threshold = 0.1, int erosion_radius = 3);

struct ExtendedImage {
  Image image;
  FovMask mask;
};

/// Iteratively grows the aperture: each outside pixel touching the inside
/// region (8-connectivity) takes the mean of its inside neighbours and joins
/// the region. Pixels inside at call time are never modified.
ExtendedImage extend_border(const Image& img, const FovMask& mask, int iterations);

/// ceil(4 * max scale); 24 for scales {2, 3, 4, 6}.
int default_border_iterations(std::span<const double> scales);

}  // namespace vesselwave
