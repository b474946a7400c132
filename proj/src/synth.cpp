#include "vesselwave/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "vesselwave/error.hpp"
#include "vesselwave/rng.hpp"

namespace vesselwave {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Point {
  double x, y;
};

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

SynthSample generate_synthetic(const SynthOptions& options, int index) {
  if (options.size < 32) throw Error(ErrorKind::parameter, "synthetic image size must be >= 32");
  if (!(options.min_width > 0.0 && options.max_width >= options.min_width)) {
    throw Error(ErrorKind::parameter, "invalid synthetic vessel width range");
  }
  Rng rng(splitmix64(options.seed ^ splitmix64(static_cast<std::uint64_t>(index))));
  const int n = options.size;
  const double c = 0.5 * (n - 1);
  const double radius = 0.45 * n;

  SynthSample s;
  char stem[32];
  std::snprintf(stem, sizeof stem, "syn%03d", index);
  s.stem = stem;
  s.fov = FovMask(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      s.fov(x, y) = std::hypot(x - c, y - c) <= radius;
    }
  }

  // Darkening per pixel (max over overlapping vessels) and the width of the
  // vessel that labelled each pixel.
  Image darkening(n, n, 0.0);
  Image label_width(n, n, 0.0);
  s.truth = Mask(n, n);

  const double gx = rng.uniform(-0.12, 0.12);
  const double gy = rng.uniform(-0.12, 0.12);
  for (int v = 0; v < options.vessels; ++v) {
    const double width = rng.uniform(options.min_width, options.max_width);
    const double contrast = rng.uniform(0.10, 0.20);
    const double start_r = radius * std::sqrt(rng.uniform(0.0, 0.8));
    const double start_a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Point p{c + start_r * std::cos(start_a), c + start_r * std::sin(start_a)};
    double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double curvature = rng.uniform(-0.015, 0.015);
    const int length = static_cast<int>(rng.uniform(0.6, 1.6) * radius);
    std::vector<Point> path{p};
    for (int step = 0; step < length; ++step) {
      heading += curvature + 0.04 * rng.normal();
      p = {p.x + std::cos(heading), p.y + std::sin(heading)};
      if (std::hypot(p.x - c, p.y - c) > radius + width) break;
      path.push_back(p);
    }
    const double reach = 0.5 * width + 1.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const Point a = path[i], b = path[i + 1];
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
      const int x1 = std::min(n - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
      const int y1 = std::min(n - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = segment_distance({double(x), double(y)}, a, b);
          // Anti-aliased flat profile; labels cover the nominal width.
          const double cover = std::clamp(0.5 * width + 0.5 - d, 0.0, 1.0);
          darkening(x, y) = std::max(darkening(x, y), contrast * cover);
          if (d <= 0.5 * width && s.fov(x, y)) {
            s.truth(x, y) = 1;
            label_width(x, y) = std::max(label_width(x, y), width);
          }
        }
      }
    }
  }

  s.second_observer = Mask(n, n);
  const double thin = options.min_width + 0.25 * (options.max_width - options.min_width);
  for (std::size_t i = 0; i < s.truth.size(); ++i) {
    s.second_observer[i] = s.truth[i] && label_width[i] >= thin;
  }

  s.rgb = Raster{n, n, 3, 255, std::vector<std::uint8_t>(static_cast<std::size_t>(n) * n * 3)};
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = (x - c) / radius, w = (y - c) / radius;
      double r, g, b;
      if (s.fov(x, y)) {
        const double vignette = 0.12 * (u * u + w * w);
        const double base = 0.5 + gx * u + gy * w - vignette;
        const double dark = darkening(x, y);
        g = base - dark + options.noise_sigma * rng.normal();
        r = base + 0.3 - 0.3 * dark + options.noise_sigma * rng.normal();
        b = 0.5 * base - 0.2 * dark + options.noise_sigma * rng.normal();
      } else {
        g = 0.02 + 0.005 * rng.normal();
        r = 0.03 + 0.005 * rng.normal();
        b = 0.02 + 0.005 * rng.normal();
      }
      const std::size_t o = (static_cast<std::size_t>(y) * n + x) * 3;
      s.rgb.data[o] = quantize(r);
      s.rgb.data[o + 1] = quantize(g);
      s.rgb.data[o + 2] = quantize(b);
    }
  }
  return s;
}

void write_synthetic_dataset(const fs::path& root, const SynthOptions& options) {
  if (options.count < 1) throw Error(ErrorKind::parameter, "synthetic image count must be >= 1");
  for (const char* dir : {"images", "masks", "labels1", "labels2"}) {
    std::error_code ec;
    fs::create_directories(root / dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create '" + (root / dir).string() + "'");
  }
  for (int i = 0; i < options.count; ++i) {
    const SynthSample s = generate_synthetic(options, i);
    write_png(root / "images" / (s.stem + ".png"), s.rgb);
    write_mask_png(root / "masks" / (s.stem + "_mask.png"), s.fov);
    write_mask_png(root / "labels1" / (s.stem + "_manual1.png"), s.truth);
    write_mask_png(root / "labels2" / (s.stem + "_manual2.png"), s.second_observer);
  }
}

}  // namespace vesselwave
