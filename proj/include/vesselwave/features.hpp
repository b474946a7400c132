#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "vesselwave/grid.hpp"
#include "vesselwave/imageio.hpp"
#include "vesselwave/wavelet.hpp"

namespace vesselwave {

/// Per-pixel feature planes: plane 0 is the working intensity, plane i >= 1
/// the orientation max-modulus at scales[i - 1].
struct FeatureStack {
  int width = 0;
  int height = 0;
  std::vector<double> scales;
  std::vector<Image> planes;

  int n_features() const noexcept { return static_cast<int>(planes.size()); }
  void feature_vector(std::size_t pixel, std::span<double> out) const;
};

struct NormalizationStats {
  std::vector<double> means;
  std::vector<double> stds;  // population convention
  std::vector<bool> degenerate;
};

struct NormalizedStack {
  FeatureStack stack;
  NormalizationStats stats;
};

/// Everything needed to turn a raw fundus image into the classifier's feature
/// space; persisted alongside trained models.
struct FeatureConfig {
  MorletParams morlet;
  std::vector<double> scales{2.0, 3.0, 4.0, 6.0};
  int border_iterations = 24;
  Channel channel = Channel::green;
  bool invert = true;
  double mask_threshold = 0.1;  // on the red channel, when no mask file exists
};

FeatureStack build_stack(const Image& img, const FovMask& mask, const MorletParams& params,
                         std::span<const double> scales);

/// Z-scores every plane with statistics taken over `mask`. Planes whose
/// standard deviation falls below 1e-12 become all-zero and are flagged.
NormalizedStack normalize(const FeatureStack& stack, const FovMask& mask);

/// Flat little-endian export: "VWFS", u32 width, u32 height, u32 n_features,
/// then float32 planes in plane, row, column order.
void write_feature_stack(const std::filesystem::path& path, const FeatureStack& stack);
FeatureStack read_feature_stack(const std::filesystem::path& path);

}  // namespace vesselwave
