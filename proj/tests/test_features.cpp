#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vesselwave/classify.hpp"
#include "vesselwave/features.hpp"

using namespace vesselwave;
using vwtest::error_kind;

namespace {

FeatureStack plane_stack(const Image& plane) {
  FeatureStack s;
  s.width = plane.width();
  s.height = plane.height();
  s.scales = {};
  s.planes = {plane};
  return s;
}

}  // namespace

TEST_CASE("stack layout") {
  const Image img = vwtest::random_image(24, 20, 1);
  const Mask fov(24, 20, 1);
  const double scales[] = {2, 3, 4, 6};
  const FeatureStack s = build_stack(img, fov, MorletParams{}, scales);
  CHECK(s.n_features() == 5);
  CHECK(s.planes[0] == img);
  CHECK(s.planes[2] == max_modulus(img, MorletParams{}, 3.0));
  std::vector<double> v(5);
  s.feature_vector(7 * 24 + 3, v);
  CHECK(v[0] == img(3, 7));
  CHECK(v[4] == s.planes[4](3, 7));

  CHECK(error_kind([&] { build_stack(img, fov, MorletParams{}, {}); }) == ErrorKind::parameter);
  CHECK(error_kind([&] { build_stack(img, Mask(3, 3, 1), MorletParams{}, scales); }) ==
        ErrorKind::parameter);
  const double tiny[] = {0.5};
  CHECK(error_kind([&] { build_stack(img, fov, MorletParams{}, tiny); }) == ErrorKind::parameter);
}

TEST_CASE("zero image gives zero wavelet planes") {
  const double scales[] = {2, 4};
  const FeatureStack s = build_stack(Image(16, 16, 0.0), Mask(16, 16, 1), MorletParams{}, scales);
  for (const auto& p : s.planes) {
    for (double v : p) CHECK(v == 0.0);
  }
}

TEST_CASE("normalization uses the population deviation over the mask") {
  Image plane(4, 1);
  plane(0, 0) = 1.0;
  plane(1, 0) = 2.0;
  plane(2, 0) = 3.0;
  plane(3, 0) = 100.0;
  Mask m(4, 1, 1);
  m(3, 0) = 0;
  const auto n = normalize(plane_stack(plane), m);
  const double r = std::sqrt(1.5);
  CHECK(n.stack.planes[0](0, 0) == doctest::Approx(-r).epsilon(1e-14));
  CHECK(n.stack.planes[0](1, 0) == doctest::Approx(0.0));
  CHECK(n.stack.planes[0](2, 0) == doctest::Approx(r).epsilon(1e-14));
  CHECK(n.stack.planes[0](3, 0) == doctest::Approx(98.0 * r).epsilon(1e-12));
  CHECK(n.stats.means[0] == 2.0);
  CHECK(n.stats.stds[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK_FALSE(n.stats.degenerate[0]);
}

TEST_CASE("constant planes are zeroed and flagged") {
  const auto n = normalize(plane_stack(Image(5, 5, 0.3)), Mask(5, 5, 1));
  CHECK(n.stats.degenerate[0]);
  for (double v : n.stack.planes[0]) CHECK(v == 0.0);
  CHECK(error_kind([] { normalize(plane_stack(Image(2, 2, 0.3)), Mask(2, 2, 0)); }) ==
        ErrorKind::parameter);
}

TEST_CASE("normalization is idempotent and affine invariant") {
  const Image img = vwtest::random_image(30, 30, 4);
  Mask m(30, 30, 0);
  for (int y = 5; y < 25; ++y) {
    for (int x = 3; x < 28; ++x) m(x, y) = 1;
  }
  const auto once = normalize(plane_stack(img), m);
  const auto twice = normalize(once.stack, m);
  for (std::size_t i = 0; i < img.size(); ++i) {
    CHECK(twice.stack.planes[0][i] == doctest::Approx(once.stack.planes[0][i]).epsilon(1e-9));
  }
  for (double alpha : {3.5, -0.25}) {
    Image affine = img;
    for (auto& v : affine) v = alpha * v + 7.0;
    const auto n = normalize(plane_stack(affine), m);
    const double sign = alpha > 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      CHECK(std::abs(n.stack.planes[0][i] - sign * once.stack.planes[0][i]) < 1e-9);
    }
  }
}

TEST_CASE("classification ignores positive feature rescaling before normalization") {
  const Image img = vwtest::random_image(40, 40, 12);
  const Mask fov(40, 40, 1);
  const double scales[] = {2, 3};
  const FeatureStack raw = build_stack(img, fov, MorletParams{}, scales);
  FeatureStack scaled = raw;
  const double factors[] = {2.0, 0.01, 40.0};
  for (std::size_t f = 0; f < 3; ++f) {
    for (auto& v : scaled.planes[f]) v *= factors[f];
  }
  const auto a = normalize(raw, fov).stack;
  const auto b = normalize(scaled, fov).stack;

  Mask truth(40, 40, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = img[i] > 0.6;
  const LabeledImage li{a, truth, fov};
  EmOptions opt;
  opt.k = 2;
  opt.seed = 3;
  const GmmModel model = fit_gmm(subsample({&li, 1}, 1200, 9), opt);
  const auto pa = gmm_posterior(model, a);
  const auto pb = gmm_posterior(model, b);
  for (std::size_t i = 0; i < img.size(); ++i) {
    CHECK(std::abs(pa.values[i] - pb.values[i]) < 1e-9);
  }
}

TEST_CASE("feature stack export round trip") {
  const auto dir = vwtest::scratch_dir("features_io");
  const double scales[] = {2};
  const FeatureStack s =
      build_stack(vwtest::random_image(9, 7, 2), Mask(9, 7, 1), MorletParams{}, scales);
  write_feature_stack(dir / "s.vwfs", s);
  const FeatureStack back = read_feature_stack(dir / "s.vwfs");
  REQUIRE(back.n_features() == 2);
  CHECK(back.width == 9);
  CHECK(back.height == 7);
  for (int f = 0; f < 2; ++f) {
    for (std::size_t i = 0; i < 63; ++i) {
      CHECK(back.planes[f][i] == static_cast<double>(static_cast<float>(s.planes[f][i])));
    }
  }
  CHECK(error_kind([&] { read_feature_stack(dir / "nope.vwfs"); }) == ErrorKind::io);
}
