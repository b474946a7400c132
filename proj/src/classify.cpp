#include "vesselwave/classify.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vesselwave/error.hpp"
#include "vesselwave/rng.hpp"

namespace vesselwave {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const char* class_name(int cls) { return cls == kVessel ? "vessel" : "non-vessel"; }

double log_sum_exp(const double* x, std::size_t n) {
  double m = kNegInf;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

Eigen::MatrixXd population_covariance(const RowMatrix& x, const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(x.rows());
}

// Raises eigenvalues below `floor` to `floor`; leaves well-conditioned
// covariances untouched.
void floor_eigenvalues(Eigen::MatrixXd& cov, double floor) {
  cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) return;
  if (eig.eigenvalues().minCoeff() >= floor) return;
  const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(floor);
  cov = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  cov = 0.5 * (cov + cov.transpose());
}

// Farthest-point seeding from a random start, then Lloyd iterations.
std::vector<int> kmeans_assign(const RowMatrix& x, int k, int iterations, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  RowMatrix centers(k, x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.below(n)));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (x.row(static_cast<Eigen::Index>(i)) - centers.row(c - 1)).squaredNorm();
      nearest[i] = std::min(nearest[i], d);
      if (nearest[i] > best_d) {
        best_d = nearest[i];
        best = i;
      }
    }
    centers.row(c) = x.row(static_cast<Eigen::Index>(best));
  }

  std::vector<int> assign(n, 0);
  for (int it = 0; it <= iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(static_cast<Eigen::Index>(i)) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
    }
    if (it == iterations) break;
    RowMatrix sums = RowMatrix::Zero(k, x.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(assign[i]) += x.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }
  return assign;
}

Mixture initial_mixture(const RowMatrix& x, const std::vector<int>& assign, int k,
                        const Eigen::MatrixXd& global_cov, double floor) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = x.cols();
  Mixture mix;
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int a : assign) ++counts[static_cast<std::size_t>(a)];
  for (int c = 0; c < k; ++c) {
    const std::size_t count = counts[static_cast<std::size_t>(c)];
    RowMatrix members(static_cast<Eigen::Index>(count), d);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (assign[i] == c) members.row(row++) = x.row(static_cast<Eigen::Index>(i));
    }
    Gaussian g;
    g.weight = static_cast<double>(std::max<std::size_t>(count, 1));
    if (count == 0) {
      g.mean = x.colwise().mean().transpose();
      g.cov = global_cov;
    } else {
      g.mean = members.colwise().mean().transpose();
      g.cov = count > static_cast<std::size_t>(d) ? population_covariance(members, g.mean)
                                                  : global_cov;
    }
    floor_eigenvalues(g.cov, floor);
    mix.components.push_back(std::move(g));
  }
  double total = 0.0;
  for (const auto& g : mix.components) total += g.weight;
  for (auto& g : mix.components) g.weight /= total;
  return mix;
}

}  // namespace

std::size_t TrainingSet::count_vessel() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

RowMatrix TrainingSet::class_samples(int cls) const {
  const std::uint8_t want = cls == kVessel ? 1 : 0;
  const std::size_t n = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), want));
  RowMatrix out(static_cast<Eigen::Index>(n), samples.cols());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == want) out.row(row++) = samples.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

TrainingSet subsample(std::span<const LabeledImage> images, std::size_t n, std::uint64_t seed) {
  if (images.empty()) throw Error(ErrorKind::parameter, "no training images");
  const int d = images.front().features.n_features();
  std::vector<std::uint64_t> pool;
  for (std::size_t im = 0; im < images.size(); ++im) {
    const auto& li = images[im];
    if (li.features.n_features() != d) {
      throw Error(ErrorKind::parameter, "training images disagree on feature dimension");
    }
    if (!li.fov.same_shape(li.truth) || li.fov.width() != li.features.width ||
        li.fov.height() != li.features.height) {
      throw Error(ErrorKind::parameter, "training image, labels and mask dimensions differ");
    }
    for (std::size_t p = 0; p < li.fov.size(); ++p) {
      if (li.fov[p]) pool.push_back((static_cast<std::uint64_t>(im) << 32) | p);
    }
  }
  if (n == 0 || n > pool.size()) {
    throw Error(ErrorKind::parameter, "requested " + std::to_string(n) +
                                          " samples but only " + std::to_string(pool.size()) +
                                          " labelled aperture pixels are available");
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());

  TrainingSet ts;
  ts.seed = seed;
  ts.samples.resize(static_cast<Eigen::Index>(n), d);
  ts.labels.resize(n);
  std::vector<double> v(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& li = images[pool[i] >> 32];
    const std::size_t p = pool[i] & 0xffffffffu;
    li.features.feature_vector(p, v);
    for (int f = 0; f < d; ++f) ts.samples(static_cast<Eigen::Index>(i), f) = v[static_cast<std::size_t>(f)];
    ts.labels[i] = li.truth[p] ? 1 : 0;
  }
  const std::size_t vessels = ts.count_vessel();
  if (vessels == 0 || vessels == n) {
    throw Error(ErrorKind::data, "training sample contains only one class");
  }
  return ts;
}

MixtureDensity::MixtureDensity(const Mixture& mixture) : dim_(mixture.dim()) {
  if (dim_ <= 0 || dim_ > kMaxFeatureDim) {
    throw Error(ErrorKind::parameter, "unsupported mixture dimension " + std::to_string(dim_));
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < mixture.components.size(); ++j) {
    const auto& g = mixture.components[j];
    Eigen::LLT<Eigen::MatrixXd> llt(g.cov);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::training,
                  "covariance of component " + std::to_string(j) + " is not positive definite");
    }
    const Eigen::MatrixXd l = llt.matrixL();
    Term t;
    t.mean.assign(g.mean.data(), g.mean.data() + dim_);
    t.chol.resize(static_cast<std::size_t>(dim_ * dim_));
    double log_det = 0.0;
    for (int r = 0; r < dim_; ++r) {
      for (int c = 0; c < dim_; ++c) t.chol[static_cast<std::size_t>(r * dim_ + c)] = l(r, c);
      log_det += 2.0 * std::log(l(r, r));
    }
    t.log_scale = (g.weight > 0.0 ? std::log(g.weight) : kNegInf) - dim_ * half_log_2pi -
                  0.5 * log_det;
    terms_.push_back(std::move(t));
  }
}

void MixtureDensity::log_terms(const double* v, double* out) const {
  std::array<double, kMaxFeatureDim> z;
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    const Term& t = terms_[j];
    double q = 0.0;
    // Forward substitution L z = v - mu.
    for (int r = 0; r < dim_; ++r) {
      double acc = v[r] - t.mean[static_cast<std::size_t>(r)];
      const double* row = &t.chol[static_cast<std::size_t>(r * dim_)];
      for (int c = 0; c < r; ++c) acc -= row[c] * z[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = acc / row[r];
      q += z[static_cast<std::size_t>(r)] * z[static_cast<std::size_t>(r)];
    }
    out[j] = t.log_scale - 0.5 * q;
  }
}

double MixtureDensity::log_density(const double* v) const {
  constexpr std::size_t kInline = 128;
  if (terms_.size() <= kInline) {
    std::array<double, kInline> terms;
    log_terms(v, terms.data());
    return log_sum_exp(terms.data(), terms_.size());
  }
  std::vector<double> terms(terms_.size());
  log_terms(v, terms.data());
  return log_sum_exp(terms.data(), terms.size());
}

EmResult fit_mixture(const RowMatrix& samples, const EmOptions& options) {
  const int k = options.k;
  const auto n = static_cast<std::size_t>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (k < 1) throw Error(ErrorKind::parameter, "number of mixture components must be >= 1");
  if (n == 0) throw Error(ErrorKind::data, "empty class");
  if (n < static_cast<std::size_t>(k) * static_cast<std::size_t>(d + 1)) {
    throw Error(ErrorKind::parameter,
                "too few samples (" + std::to_string(n) + ") for " + std::to_string(k) +
                    " components in " + std::to_string(d) + " dimensions");
  }

  const Eigen::VectorXd global_mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd global_cov = population_covariance(samples, global_mean);
  const double mean_var = global_cov.diagonal().mean();
  const double floor = options.regularization * (mean_var > 0.0 ? mean_var : 1.0);

  Rng rng(options.seed);
  const std::vector<int> assign = kmeans_assign(samples, k, options.kmeans_iterations, rng);

  EmResult result;
  result.mixture = initial_mixture(samples, assign, k, global_cov, floor);

  std::vector<double> resp(n * static_cast<std::size_t>(k));
  for (int iter = 0;; ++iter) {
    // E-step: responsibilities and the log-likelihood of the current parameters.
    const MixtureDensity density(result.mixture);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double* r = &resp[i * static_cast<std::size_t>(k)];
      density.log_terms(samples.row(static_cast<Eigen::Index>(i)).data(), r);
      const double lse = log_sum_exp(r, static_cast<std::size_t>(k));
      ll += lse;
      for (int j = 0; j < k; ++j) r[j] = std::exp(r[j] - lse);
    }
    result.log_likelihood.push_back(ll);
    if (iter > 0) {
      const double prev = result.log_likelihood[result.log_likelihood.size() - 2];
      if (std::abs(ll - prev) < options.tol * std::abs(ll)) {
        result.converged = true;
        break;
      }
    }
    if (iter >= options.max_iter) break;

    // M-step.
    const Eigen::Map<const RowMatrix> r_all(resp.data(), static_cast<Eigen::Index>(n), k);
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd r = r_all.col(j);
      const double nj = r.sum();
      if (!(nj > 1e-10 * static_cast<double>(n))) {
        throw Error(ErrorKind::training, "mixture component " + std::to_string(j) +
                                             " collapsed (no responsibility mass)");
      }
      Eigen::VectorXd mean = samples.transpose() * r / nj;
      const RowMatrix centered = samples.rowwise() - mean.transpose();
      Eigen::MatrixXd cov =
          centered.transpose() * (centered.array().colwise() * r.array()).matrix() / nj;
      floor_eigenvalues(cov, floor);
      if (Eigen::LLT<Eigen::MatrixXd>(cov).info() != Eigen::Success) {
        throw Error(ErrorKind::training, "covariance of mixture component " + std::to_string(j) +
                                             " collapsed despite regularization");
      }
      auto& g = result.mixture.components[static_cast<std::size_t>(j)];
      g.weight = nj / static_cast<double>(n);
      g.mean = std::move(mean);
      g.cov = std::move(cov);
    }
    ++result.iterations;
  }
  return result;
}

GmmModel fit_gmm(const TrainingSet& ts, const EmOptions& options, GmmFitReport* report) {
  if (options.k < 1) throw Error(ErrorKind::parameter, "number of mixture components must be >= 1");
  const std::size_t n = ts.size();
  const std::size_t vessels = ts.count_vessel();
  if (n == 0 || vessels == 0 || vessels == n) {
    throw Error(ErrorKind::data, "training set must contain both vessel and non-vessel samples");
  }
  GmmModel model;
  model.dim = ts.dim();
  model.priors[kVessel] = static_cast<double>(vessels) / static_cast<double>(n);
  model.priors[kNonVessel] = static_cast<double>(n - vessels) / static_cast<double>(n);
  for (int cls : {kVessel, kNonVessel}) {
    EmOptions per_class = options;
    per_class.seed = options.seed + static_cast<std::uint64_t>(cls);
    EmResult fit;
    try {
      fit = fit_mixture(ts.class_samples(cls), per_class);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(class_name(cls)) + " class: " + e.what());
    }
    model.classes[static_cast<std::size_t>(cls)] = fit.mixture;
    if (report) report->classes[static_cast<std::size_t>(cls)] = std::move(fit);
  }
  return model;
}

GmmPosterior::GmmPosterior(const GmmModel& model)
    : densities_{MixtureDensity(model.classes[0]), MixtureDensity(model.classes[1])},
      log_priors_{std::log(model.priors[0]), std::log(model.priors[1])},
      prior_vessel_(model.priors[0]) {
  if (densities_[0].dim() != model.dim || densities_[1].dim() != model.dim) {
    throw Error(ErrorKind::parameter, "mixture dimensions disagree with the model");
  }
}

double GmmPosterior::operator()(const double* v) const {
  std::array<double, 2> joint{};
  for (std::size_t c = 0; c < 2; ++c) {
    joint[c] = densities_[c].log_density(v) + log_priors_[c];
  }
  // Both likelihoods underflowed: fall back to the prior.
  if (joint[0] == kNegInf && joint[1] == kNegInf) return prior_vessel_;
  return 1.0 / (1.0 + std::exp(joint[1] - joint[0]));
}

double gmm_posterior(const GmmModel& model, std::span<const double> v) {
  if (static_cast<int>(v.size()) != model.dim) {
    throw Error(ErrorKind::parameter, "feature vector dimension does not match the model");
  }
  return GmmPosterior(model)(v.data());
}

PosteriorMap gmm_posterior(const GmmModel& model, const FeatureStack& stack) {
  if (stack.n_features() != model.dim) {
    throw Error(ErrorKind::parameter, "feature stack has " + std::to_string(stack.n_features()) +
                                          " features but the model expects " +
                                          std::to_string(model.dim));
  }
  const GmmPosterior posterior(model);
  PosteriorMap out{Image(stack.width, stack.height), PosteriorMap::Kind::posterior};
  std::vector<double> v(static_cast<std::size_t>(model.dim));
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    stack.feature_vector(p, v);
    out.values[p] = posterior(v.data());
  }
  return out;
}

Mask bayes_decide(const PosteriorMap& pmap, double threshold) {
  if (pmap.kind != PosteriorMap::Kind::posterior) {
    throw Error(ErrorKind::parameter, "bayes_decide requires a posterior map");
  }
  Mask seg(pmap.values.width(), pmap.values.height());
  for (std::size_t i = 0; i < seg.size(); ++i) seg[i] = pmap.values[i] > threshold;
  return seg;
}

LmseModel fit_lmse(const TrainingSet& ts) {
  const auto n = static_cast<Eigen::Index>(ts.size());
  const auto d = static_cast<Eigen::Index>(ts.dim());
  if (n == 0) throw Error(ErrorKind::data, "empty training set");
  Eigen::MatrixXd v(n, d + 1);
  v.leftCols(d) = ts.samples;
  v.col(d).setOnes();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = ts.labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;

  // Least squares through a pivoted QR of V; never forms (V^T V)^-1.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  if (qr.rank() < d + 1) {
    throw Error(ErrorKind::training,
                "LMSE design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                    " of " + std::to_string(d + 1) + "); check for degenerate features");
  }
  const Eigen::VectorXd w_ext = qr.solve(y);
  LmseModel model;
  model.w = w_ext.head(d);
  model.w0 = w_ext(d);
  return model;
}

double lmse_score(const LmseModel& model, std::span<const double> v) {
  if (static_cast<Eigen::Index>(v.size()) != model.w.size()) {
    throw Error(ErrorKind::parameter, "feature vector dimension does not match the model");
  }
  double g = model.w0;
  for (std::size_t i = 0; i < v.size(); ++i) g += model.w(static_cast<Eigen::Index>(i)) * v[i];
  return g;
}

PosteriorMap lmse_score(const LmseModel& model, const FeatureStack& stack) {
  if (stack.n_features() != model.w.size()) {
    throw Error(ErrorKind::parameter, "feature stack has " + std::to_string(stack.n_features()) +
                                          " features but the model expects " +
                                          std::to_string(model.w.size()));
  }
  PosteriorMap out{Image(stack.width, stack.height), PosteriorMap::Kind::linear_score};
  std::vector<double> v(static_cast<std::size_t>(stack.n_features()));
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    stack.feature_vector(p, v);
    out.values[p] = lmse_score(model, v);
  }
  return out;
}

Mask linear_decide(const PosteriorMap& pmap, double offset) {
  Mask seg(pmap.values.width(), pmap.values.height());
  for (std::size_t i = 0; i < seg.size(); ++i) seg[i] = pmap.values[i] > offset;
  return seg;
}

}  // namespace vesselwave
