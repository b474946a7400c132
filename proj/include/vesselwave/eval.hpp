#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vesselwave/grid.hpp"

namespace vesselwave {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  double tpf() const;  // throws ErrorKind::data when there are no positives
  double fpf() const;  // throws ErrorKind::data when there are no negatives
  double accuracy() const;

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

/// Counts over in-aperture pixels only.
Confusion confusion(const Mask& seg, const Mask& truth, const FovMask& fov);

struct RocPoint {
  double threshold;  // pixels with score >= threshold are called vessel
  double fpf;
  double tpf;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double az = 0.0;               // trapezoidal area
};

/// Exact ROC over pooled scores: one point per distinct score value.
RocCurve roc_from_scores(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Pools the in-aperture pixels of every image, then sweeps all thresholds.
RocCurve roc(std::span<const Image> scores, std::span<const Mask> truths,
             std::span<const FovMask> masks);

double accuracy(std::span<const Mask> segs, std::span<const Mask> truths,
                std::span<const FovMask> masks);

struct ObserverPoint {
  double fpf;
  double tpf;
  double accuracy;
};

/// A second human labelling scored against the ground truth.
ObserverPoint observer_point(std::span<const Mask> second, std::span<const Mask> truths,
                             std::span<const FovMask> masks);

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);
void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, double>>& metrics);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace vesselwave
