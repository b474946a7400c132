#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace vwtest {

struct Em1d {
  std::vector<double> means;  // ascending
  double log_likelihood = 0.0;
};

// Plain 1-D Gaussian mixture EM, started from evenly spaced quantiles and run
// to a tight fixed point.
inline Em1d em_1d(std::vector<double> x, int k) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(x.size());
  std::vector<double> w(k, 1.0 / k), mu(k), var(k, 1.0);
  for (int j = 0; j < k; ++j) mu[j] = sorted[static_cast<std::size_t>((j + 0.5) / k * n)];
  std::vector<double> r(static_cast<std::size_t>(k));
  double ll = 0.0;
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> sw(k, 0.0), sx(k, 0.0), sxx(k, 0.0);
    double new_ll = 0.0;
    for (double v : x) {
      double total = 0.0;
      for (int j = 0; j < k; ++j) {
        r[j] = w[j] * std::exp(-0.5 * (v - mu[j]) * (v - mu[j]) / var[j]) /
               std::sqrt(2.0 * std::numbers::pi * var[j]);
        total += r[j];
      }
      new_ll += std::log(total);
      for (int j = 0; j < k; ++j) {
        const double q = r[j] / total;
        sw[j] += q;
        sx[j] += q * v;
        sxx[j] += q * v * v;
      }
    }
    for (int j = 0; j < k; ++j) {
      w[j] = sw[j] / n;
      mu[j] = sx[j] / sw[j];
      var[j] = sxx[j] / sw[j] - mu[j] * mu[j];
    }
    if (it > 0 && std::abs(new_ll - ll) < 1e-12 * std::abs(new_ll)) {
      ll = new_ll;
      break;
    }
    ll = new_ll;
  }
  Em1d out;
  out.means = mu;
  std::sort(out.means.begin(), out.means.end());
  out.log_likelihood = ll;
  return out;
}

}  // namespace vwtest
