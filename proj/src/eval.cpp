#include "vesselwave/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "vesselwave/error.hpp"

namespace vesselwave {

namespace {

void check_shapes(const Mask& a, const Mask& b, const FovMask& fov) {
  if (!a.same_shape(b) || !a.same_shape(fov)) {
    throw Error(ErrorKind::parameter, "segmentation, ground truth and mask dimensions differ");
  }
}

template <typename T>
void check_counts(std::span<const T> items, std::span<const Mask> truths,
                  std::span<const FovMask> masks) {
  if (items.empty()) throw Error(ErrorKind::parameter, "no images to evaluate");
  if (items.size() != truths.size() || items.size() != masks.size()) {
    throw Error(ErrorKind::parameter, "mismatched numbers of images, labels and masks");
  }
}

}  // namespace

double Confusion::tpf() const {
  if (tp + fn == 0) throw Error(ErrorKind::data, "ground truth has no vessel pixels inside the aperture");
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Confusion::fpf() const {
  if (fp + tn == 0) {
    throw Error(ErrorKind::data, "ground truth has no non-vessel pixels inside the aperture");
  }
  return static_cast<double>(fp) / static_cast<double>(fp + tn);
}

double Confusion::accuracy() const {
  if (total() == 0) throw Error(ErrorKind::data, "no pixels inside the aperture");
  return static_cast<double>(tp + tn) / static_cast<double>(total());
}

Confusion confusion(const Mask& seg, const Mask& truth, const FovMask& fov) {
  check_shapes(seg, truth, fov);
  Confusion c;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (!fov[i]) continue;
    const bool s = seg[i] != 0;
    const bool t = truth[i] != 0;
    if (s && t) ++c.tp;
    else if (s) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

RocCurve roc_from_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::parameter, "scores and labels differ in length");
  }
  std::vector<std::pair<double, std::uint8_t>> pairs;
  pairs.reserve(scores.size());
  std::uint64_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw Error(ErrorKind::data, "score map contains NaN");
    pairs.emplace_back(scores[i], labels[i] ? 1 : 0);
    positives += labels[i] ? 1 : 0;
  }
  const std::uint64_t negatives = pairs.size() - positives;
  if (positives == 0) throw Error(ErrorKind::data, "ground truth has no vessel pixels inside the aperture");
  if (negatives == 0) {
    throw Error(ErrorKind::data, "ground truth has no non-vessel pixels inside the aperture");
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  // Twice the area, in units of (1 / positives) x (1 / negatives).
  std::uint64_t area2 = 0;
  for (std::size_t i = 0; i < pairs.size();) {
    const double s = pairs[i].first;
    const std::uint64_t tp_prev = tp, fp_prev = fp;
    for (; i < pairs.size() && pairs[i].first == s; ++i) {
      if (pairs[i].second) ++tp;
      else ++fp;
    }
    area2 += (fp - fp_prev) * (tp + tp_prev);
    curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  curve.az = static_cast<double>(area2) /
             (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return curve;
}

RocCurve roc(std::span<const Image> scores, std::span<const Mask> truths,
             std::span<const FovMask> masks) {
  check_counts(scores, truths, masks);
  std::vector<double> pooled;
  std::vector<std::uint8_t> labels;
  for (std::size_t im = 0; im < scores.size(); ++im) {
    if (!scores[im].same_shape(truths[im]) || !scores[im].same_shape(masks[im])) {
      throw Error(ErrorKind::parameter, "score map, ground truth and mask dimensions differ");
    }
    for (std::size_t p = 0; p < scores[im].size(); ++p) {
      if (!masks[im][p]) continue;
      pooled.push_back(scores[im][p]);
      labels.push_back(truths[im][p] ? 1 : 0);
    }
  }
  return roc_from_scores(pooled, labels);
}

double accuracy(std::span<const Mask> segs, std::span<const Mask> truths,
                std::span<const FovMask> masks) {
  check_counts(segs, truths, masks);
  Confusion total;
  for (std::size_t i = 0; i < segs.size(); ++i) total += confusion(segs[i], truths[i], masks[i]);
  return total.accuracy();
}

ObserverPoint observer_point(std::span<const Mask> second, std::span<const Mask> truths,
                             std::span<const FovMask> masks) {
  check_counts(second, truths, masks);
  Confusion total;
  for (std::size_t i = 0; i < second.size(); ++i) {
    total += confusion(second[i], truths[i], masks[i]);
  }
  return {total.fpf(), total.tpf(), total.accuracy()};
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << "threshold,fpf,tpf\n";
  for (const auto& p : curve.points) {
    out << format_double(p.threshold) << ',' << format_double(p.fpf) << ','
        << format_double(p.tpf) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, double>>& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << "metric,value\n";
  for (const auto& [name, value] : metrics) out << name << ',' << format_double(value) << '\n';
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
}

}  // namespace vesselwave
