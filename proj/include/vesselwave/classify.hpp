#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "vesselwave/features.hpp"
#include "vesselwave/grid.hpp"

namespace vesselwave {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Class indices used throughout: 0 = vessel (C1), 1 = non-vessel (C2).
inline constexpr int kVessel = 0;
inline constexpr int kNonVessel = 1;

struct TrainingSet {
  RowMatrix samples;                  // N x d
  std::vector<std::uint8_t> labels;   // 1 = vessel
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(samples.cols()); }
  std::size_t size() const { return labels.size(); }
  std::size_t count_vessel() const;
  /// Rows belonging to one class, in their original order.
  RowMatrix class_samples(int cls) const;
};

/// A labelled training/test image: normalized features, ground truth, aperture.
struct LabeledImage {
  const FeatureStack& features;
  const Mask& truth;
  const FovMask& fov;
};

/// Uniform sampling without replacement over the in-aperture pixels of all
/// images. Deterministic for a fixed seed.
TrainingSet subsample(std::span<const LabeledImage> images, std::size_t n, std::uint64_t seed);

struct Gaussian {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct Mixture {
  std::vector<Gaussian> components;
  int dim() const { return components.empty() ? 0 : static_cast<int>(components[0].mean.size()); }
};

/// Mixture with Cholesky factors cached for repeated density evaluation.
class MixtureDensity {
 public:
  explicit MixtureDensity(const Mixture& mixture);

  int dim() const { return dim_; }
  std::size_t size() const { return terms_.size(); }

  /// log(w_j) + log N(v; mu_j, Sigma_j) for every component.
  void log_terms(const double* v, double* out) const;
  double log_density(const double* v) const;

 private:
  struct Term {
    double log_scale;              // log w - d/2 log 2pi - 1/2 log|Sigma|
    std::vector<double> mean;
    std::vector<double> chol;      // lower factor, row-major d x d
  };
  int dim_ = 0;
  std::vector<Term> terms_;
};

inline constexpr int kMaxFeatureDim = 64;

struct EmOptions {
  int k = 20;
  double tol = 1e-6;          // relative log-likelihood change
  int max_iter = 500;
  std::uint64_t seed = 0;
  double regularization = 1e-6;  // eigenvalue floor, relative to the mean data variance
  int kmeans_iterations = 10;
};

struct EmResult {
  Mixture mixture;
  std::vector<double> log_likelihood;  // one entry per E-step
  int iterations = 0;                  // M-steps taken
  bool converged = false;
};

/// Maximum-likelihood mixture of `options.k` full-covariance Gaussians.
EmResult fit_mixture(const RowMatrix& samples, const EmOptions& options);

struct GmmModel {
  int dim = 0;
  std::array<double, 2> priors{};     // P(C_i) = N_i / N
  std::array<Mixture, 2> classes;
};

struct GmmFitReport {
  std::array<EmResult, 2> classes;
};

GmmModel fit_gmm(const TrainingSet& ts, const EmOptions& options, GmmFitReport* report = nullptr);

struct PosteriorMap {
  enum class Kind { posterior, linear_score };
  Image values;
  Kind kind = Kind::posterior;
};

class GmmPosterior {
 public:
  explicit GmmPosterior(const GmmModel& model);
  /// P(C1 | v), evaluated in log space.
  double operator()(const double* v) const;

 private:
  std::array<MixtureDensity, 2> densities_;
  std::array<double, 2> log_priors_;
  double prior_vessel_;
};

double gmm_posterior(const GmmModel& model, std::span<const double> v);
PosteriorMap gmm_posterior(const GmmModel& model, const FeatureStack& stack);

/// Vessel iff value > threshold; ties go to non-vessel.
Mask bayes_decide(const PosteriorMap& pmap, double threshold = 0.5);

struct LmseModel {
  Eigen::VectorXd w;
  double w0 = 0.0;
};

/// Least-squares fit of g(v) = w.v + w0 to targets +1 (vessel) / -1.
LmseModel fit_lmse(const TrainingSet& ts);

double lmse_score(const LmseModel& model, std::span<const double> v);
PosteriorMap lmse_score(const LmseModel& model, const FeatureStack& stack);

/// Vessel iff g(v) > offset.
Mask linear_decide(const PosteriorMap& pmap, double offset = 0.0);

}  // namespace vesselwave
