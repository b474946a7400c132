#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vesselwave/eval.hpp"

using namespace vesselwave;
using vwtest::error_kind;

namespace {

Mask from_rows(int w, std::initializer_list<int> bits) {
  Mask m(w, static_cast<int>(bits.size()) / w);
  std::size_t i = 0;
  for (int b : bits) m[i++] = static_cast<std::uint8_t>(b);
  return m;
}

Mask negate(const Mask& m) {
  Mask out = m;
  for (auto& v : out) v = !v;
  return out;
}

}  // namespace

TEST_CASE("confusion counts") {
  const Mask truth = from_rows(3, {1, 1, 0,
                                   0, 1, 0,
                                   0, 0, 0});
  const Mask seg = from_rows(3, {1, 0, 0,
                                 0, 1, 1,
                                 0, 0, 0});
  const Mask fov(3, 3, 1);
  const Confusion c = confusion(seg, truth, fov);
  CHECK(c.tp == 2);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 5);
  CHECK(c.tpf() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c.fpf() == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(c.accuracy() == doctest::Approx(7.0 / 9.0).epsilon(1e-15));
  CHECK(c.accuracy() == 1.0 - static_cast<double>(c.fp + c.fn) / static_cast<double>(c.total()));

  const Mask segs[] = {seg};
  const Mask truths[] = {truth};
  const Mask fovs[] = {fov};
  CHECK(accuracy(segs, truths, fovs) == doctest::Approx(7.0 / 9.0).epsilon(1e-15));

  const Confusion same = confusion(truth, truth, fov);
  CHECK(same.tpf() == 1.0);
  CHECK(same.fpf() == 0.0);
  const Confusion opposite = confusion(negate(truth), truth, fov);
  CHECK(opposite.tpf() == 0.0);
  CHECK(opposite.fpf() == 1.0);
  const Mask neg[] = {negate(truth)};
  CHECK(accuracy(neg, truths, fovs) == 0.0);
  const Mask same_seg[] = {truth};
  CHECK(accuracy(same_seg, truths, fovs) == 1.0);
}

TEST_CASE("confusion ignores pixels outside the aperture") {
  const Mask truth = from_rows(2, {1, 1, 0, 0});
  const Mask seg = from_rows(2, {0, 1, 1, 0});
  const Mask fov = from_rows(2, {0, 1, 0, 1});
  const Confusion c = confusion(seg, truth, fov);
  CHECK(c.total() == 2);
  CHECK(c.tp == 1);
  CHECK(c.tn == 1);
  CHECK(error_kind([&] { confusion(seg, truth, Mask(3, 2, 1)); }) == ErrorKind::parameter);
  const Confusion none = confusion(seg, Mask(2, 2, 0), fov);
  CHECK(error_kind([&] { none.tpf(); }) == ErrorKind::data);
}

TEST_CASE("six pixel roc") {
  const std::vector<double> s{0.9, 0.8, 0.4, 0.7, 0.3, 0.1};
  const std::vector<std::uint8_t> lab{1, 1, 1, 0, 0, 0};
  const RocCurve c = roc_from_scores(s, lab);
  // 8 of the 9 (vessel, non-vessel) pairs are ordered correctly; only 0.4 < 0.7 is not.
  CHECK(c.az == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
  CHECK(c.az == vwtest::mann_whitney(s, lab));
  REQUIRE(c.points.size() == 7);
  CHECK(c.points.front().threshold == std::numeric_limits<double>::infinity());
  CHECK(c.points.front().fpf == 0.0);
  CHECK(c.points.front().tpf == 0.0);
  CHECK(c.points.back().fpf == 1.0);
  CHECK(c.points.back().tpf == 1.0);
  CHECK(c.points[3].threshold == 0.7);
  CHECK(c.points[3].tpf == doctest::Approx(2.0 / 3.0));
  CHECK(c.points[3].fpf == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("degenerate score sets") {
  const std::vector<std::uint8_t> lab{1, 0, 1, 0, 0};
  const RocCurve flat = roc_from_scores(std::vector<double>(5, 0.3), lab);
  REQUIRE(flat.points.size() == 2);
  CHECK(flat.points[1].fpf == 1.0);
  CHECK(flat.points[1].tpf == 1.0);
  CHECK(flat.az == 0.5);
  const RocCurve sep = roc_from_scores(std::vector<double>{5, -1, 4, 1, 2}, lab);
  CHECK(sep.az == 1.0);
  CHECK(error_kind([&] { roc_from_scores(std::vector<double>(5, 0.0), std::vector<std::uint8_t>(5, 1)); }) ==
        ErrorKind::data);
  std::vector<double> with_nan(5, 0.0);
  with_nan[2] = std::nan("");
  CHECK(error_kind([&] { roc_from_scores(with_nan, lab); }) == ErrorKind::data);
}

TEST_CASE("area equals the Mann-Whitney statistic") {
  Rng rng(10);
  std::vector<double> s(10000);
  std::vector<std::uint8_t> lab(10000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    lab[i] = rng.uniform() < 0.15;
    // Coarse quantization forces many ties.
    s[i] = std::round((rng.normal() + (lab[i] ? 1.2 : 0.0)) * 20.0) / 20.0;
  }
  const RocCurve c = roc_from_scores(s, lab);
  CHECK(std::abs(c.az - vwtest::mann_whitney(s, lab)) < 1e-9);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    CHECK(c.points[i].fpf >= c.points[i - 1].fpf);
    CHECK(c.points[i].tpf >= c.points[i - 1].tpf);
    CHECK(c.points[i].threshold < c.points[i - 1].threshold);
  }
  std::vector<double> e = s;
  for (auto& v : e) v = std::exp(v);
  CHECK(roc_from_scores(e, lab).az == c.az);
}

TEST_CASE("pooled roc over images uses aperture pixels only") {
  Image s1(2, 2), s2(3, 1);
  s1[0] = 0.9; s1[1] = 0.8; s1[2] = 100.0; s1[3] = 0.7;
  s2[0] = 0.4; s2[1] = 0.3; s2[2] = 0.1;
  const Mask t1 = from_rows(2, {1, 1, 1, 0});
  const Mask f1 = from_rows(2, {1, 1, 0, 1});
  const Mask t2 = from_rows(3, {1, 0, 0});
  const Mask f2(3, 1, 1);
  const Image scores[] = {s1, s2};
  const Mask truths[] = {t1, t2};
  const Mask fovs[] = {f1, f2};
  CHECK(roc(scores, truths, fovs).az == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("second observer point") {
  const Mask truth = from_rows(3, {1, 1, 0, 0, 1, 0, 0, 0, 0});
  const Mask second = from_rows(3, {1, 0, 0, 0, 1, 1, 0, 0, 0});
  const Mask fov(3, 3, 1);
  const Mask s[] = {second};
  const Mask t[] = {truth};
  const Mask f[] = {fov};
  const ObserverPoint p = observer_point(s, t, f);
  CHECK(p.tpf == doctest::Approx(2.0 / 3.0));
  CHECK(p.fpf == doctest::Approx(1.0 / 6.0));
  CHECK(p.accuracy == doctest::Approx(7.0 / 9.0));
}

TEST_CASE("csv output") {
  const auto dir = vwtest::scratch_dir("eval_csv");
  const RocCurve c = roc_from_scores(std::vector<double>{0.9, 0.1, 0.1},
                                     std::vector<std::uint8_t>{1, 0, 1});
  write_roc_csv(dir / "roc.csv", c);
  std::ifstream f(dir / "roc.csv");
  std::stringstream text;
  text << f.rdbuf();
  CHECK(text.str() == "threshold,fpf,tpf\ninf,0,0\n0.9,0,0.5\n0.1,1,1\n");

  write_summary_csv(dir / "s.csv", {{"az", 0.75}, {"pixels", 3.0}});
  std::ifstream g(dir / "s.csv");
  std::stringstream summary;
  summary << g.rdbuf();
  CHECK(summary.str() == "metric,value\naz,0.75\npixels,3\n");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
