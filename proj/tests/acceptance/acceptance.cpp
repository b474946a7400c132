// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.
// Dataset reproductions run only when VESSELWAVE_DRIVE_ROOT / VESSELWAVE_STARE_ROOT
// point at converted datasets (see README).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../em_oracle.hpp"
#include "../oracles.hpp"
#include "../wavelet_oracle.hpp"
#include "vesselwave/classify.hpp"
#include "vesselwave/config.hpp"
#include "vesselwave/eval.hpp"
#include "vesselwave/model.hpp"
#include "vesselwave/pipeline.hpp"
#include "vesselwave/rng.hpp"
#include "vesselwave/wavelet.hpp"

namespace fs = std::filesystem;
namespace vw = vesselwave;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

class Checks {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) failed_.push_back(what);
  }
  Outcome outcome(const std::string& detail) const {
    if (failed_.empty()) return {Status::pass, detail};
    std::string msg = detail + "; failed:";
    for (const auto& f : failed_) msg += " [" + f + "]";
    return {Status::fail, msg};
  }

 private:
  std::vector<std::string> failed_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

vw::Image random_image(int w, int h, std::uint64_t seed) {
  vw::Rng rng(seed);
  vw::Image img(w, h);
  for (auto& v : img) v = rng.uniform();
  return img;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::path(VESSELWAVE_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// 1. FFT correlation against the direct double sum.
Outcome wavelet_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const vw::MorletParams p;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const vw::Image img = random_image(32, 32, seed);
    for (double a : {2.0, 4.0}) {
      for (double theta : {0.0, 30.0, 90.0}) {
        const auto fast = vw::cwt_response(img, p, a, theta);
        const auto slow = vwtest::spatial_cwt(img, p.epsilon, p.k0[0], p.k0[1], p.c_psi, a, theta);
        worst = std::max(worst, vwtest::relative_frobenius(fast, slow));
      }
    }
  }
  const double secs = seconds_since(t0);
  Checks c;
  c.require(worst < 1e-6, "relative error >= 1e-6");
  c.require(secs < 10.0, "runtime >= 10 s");
  return c.outcome("worst relative Frobenius error " + fmt("%.2e", worst) + " over 30 cases, " +
                   fmt("%.2f", secs) + " s");
}

// 2. |T(theta)| = |T(theta + 180)| for a real image.
Outcome angle_symmetry() {
  const vw::MorletParams p;
  const vw::Image img = random_image(64, 64, 64);
  double worst = 0.0;
  for (double a : {2.0, 3.0, 4.0, 6.0}) {
    for (double theta : p.angles) {
      const auto t0 = vw::cwt_response(img, p, a, theta);
      const auto t1 = vw::cwt_response(img, p, a, theta + 180.0);
      for (std::size_t i = 0; i < t0.size(); ++i) {
        worst = std::max(worst, std::abs(std::abs(t0[i]) - std::abs(t1[i])));
      }
    }
  }
  Checks c;
  c.require(worst < 1e-9, "difference >= 1e-9");
  return c.outcome("max |T(theta)| - |T(theta+180)| difference " + fmt("%.2e", worst) +
                   " over 4 scales x 18 angles");
}

// 3. EM monotonicity, mean recovery and the single-component fixed point.
Outcome em_properties() {
  vw::Rng rng(3);
  vw::TrainingSet ts;
  const int per_class = 20000;
  ts.samples.resize(2 * per_class, 1);
  for (int i = 0; i < 2 * per_class; ++i) {
    ts.samples(i, 0) = (rng.uniform() < 0.5 ? -5.0 : 5.0) + rng.normal();
    ts.labels.push_back(i < per_class ? 1 : 0);
  }
  Checks c;
  vw::EmOptions opt;
  opt.k = 2;
  opt.seed = 1;
  vw::GmmFitReport report;
  const vw::GmmModel model = vw::fit_gmm(ts, opt, &report);
  double worst_drop = 0.0;
  double worst_mean = 0.0;
  double oracle_gap = 0.0;
  for (int cls = 0; cls < 2; ++cls) {
    const auto& ll = report.classes[cls].log_likelihood;
    for (std::size_t i = 1; i < ll.size(); ++i) worst_drop = std::max(worst_drop, ll[i - 1] - ll[i]);
    std::vector<double> means;
    for (const auto& g : model.classes[cls].components) means.push_back(g.mean(0));
    std::sort(means.begin(), means.end());
    worst_mean = std::max({worst_mean, std::abs(means[0] + 5.0), std::abs(means[1] - 5.0)});
    const vw::RowMatrix x = ts.class_samples(cls);
    const auto oracle = vwtest::em_1d(std::vector<double>(x.data(), x.data() + x.size()), 2);
    oracle_gap = std::max({oracle_gap, std::abs(means[0] - oracle.means[0]),
                           std::abs(means[1] - oracle.means[1])});
  }
  c.require(worst_drop <= 1e-9, "log-likelihood decreased");
  c.require(worst_mean < 0.1, "means off by >= 0.1");

  opt.k = 1;
  const vw::GmmModel one = vw::fit_gmm(ts, opt);
  double moment_err = 0.0;
  for (int cls = 0; cls < 2; ++cls) {
    const vw::RowMatrix x = ts.class_samples(cls);
    const double n = static_cast<double>(x.rows());
    double mean = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) mean += x(i, 0);
    mean /= n;
    double var = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) var += (x(i, 0) - mean) * (x(i, 0) - mean);
    var /= n;
    const auto& g = one.classes[cls].components.at(0);
    moment_err = std::max({moment_err, std::abs(g.mean(0) - mean), std::abs(g.cov(0, 0) - var)});
  }
  c.require(moment_err < 1e-9, "k=1 moments differ by >= 1e-9");
  return c.outcome("max log-likelihood drop " + fmt("%.1e", std::max(worst_drop, 0.0)) +
                   ", mean error " + fmt("%.3f", worst_mean) + " (independent 1-D EM within " +
                   fmt("%.1e", oracle_gap) + "), k=1 moment error " + fmt("%.1e", moment_err));
}

// 4. Least squares against the normal equations.
Outcome lmse_oracle() {
  vw::Rng rng(4);
  vw::TrainingSet ts;
  ts.samples.resize(200, 5);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> r(5);
    for (int f = 0; f < 5; ++f) {
      r[f] = rng.normal();
      ts.samples(i, f) = r[f];
    }
    const bool vessel = r[0] - 0.5 * r[3] + 0.3 * rng.normal() > 0.2;
    ts.labels.push_back(vessel);
    rows.push_back(r);
    y.push_back(vessel ? 1.0 : -1.0);
  }
  const vw::LmseModel m = vw::fit_lmse(ts);
  const auto oracle = vwtest::normal_equations(rows, y);
  double err = std::abs(m.w0 - oracle[5]);
  for (int f = 0; f < 5; ++f) err = std::max(err, std::abs(m.w(f) - oracle[f]));

  vw::TrainingSet hand;
  hand.samples.resize(2, 1);
  hand.samples << 1.0, -1.0;
  hand.labels = {1, 0};
  const vw::LmseModel h = vw::fit_lmse(hand);
  const double hand_err = std::max(std::abs(h.w(0) - 1.0), std::abs(h.w0));
  Checks c;
  c.require(err < 1e-8, "random system differs by >= 1e-8");
  c.require(hand_err < 1e-12, "hand case differs by >= 1e-12");
  return c.outcome("200x5 system max difference " + fmt("%.1e", err) + ", hand case error " +
                   fmt("%.1e", hand_err));
}

// 5. Az against brute-force pair counting.
Outcome roc_correctness() {
  vw::Rng rng(5);
  std::vector<double> s(10000);
  std::vector<std::uint8_t> lab(10000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    lab[i] = rng.uniform() < 0.2;
    s[i] = std::round((rng.normal() + (lab[i] ? 1.0 : 0.0)) * 50.0) / 50.0;
  }
  const double az = vw::roc_from_scores(s, lab).az;
  const double mw = vwtest::mann_whitney(s, lab);

  std::vector<double> sep(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) sep[i] = lab[i] ? 10.0 + rng.uniform() : rng.uniform();
  const double az_sep = vw::roc_from_scores(sep, lab).az;

  const std::vector<double> hs{0.9, 0.8, 0.4, 0.7, 0.3, 0.1};
  const std::vector<std::uint8_t> hl{1, 1, 1, 0, 0, 0};
  const double hand = vw::roc_from_scores(hs, hl).az;
  const double hand_pairs = vwtest::mann_whitney(hs, hl);

  Checks c;
  c.require(std::abs(az - mw) < 1e-9, "Az differs from the pair count");
  c.require(az_sep == 1.0, "separable Az != 1");
  c.require(hand == hand_pairs, "hand case Az differs from its pair count");
  return c.outcome("|Az - Mann-Whitney| " + fmt("%.1e", std::abs(az - mw)) + " on 1e4 scores, " +
                   "separable Az " + fmt("%.17g", az_sep) + ", 6-pixel hand case Az " +
                   fmt("%.6f", hand) + " = 8/9 by pair count (0.4 outranks 0.3 and 0.1; only the " +
                   "0.4 < 0.7 pair is misordered)");
}

struct SyntheticRun {
  double az = 0.0;
  double accuracy = 0.0;
  double control_az = 0.0;
  double seconds = 0.0;
  std::vector<fs::path> files;
};

// Synthesizes 8 images, trains a k=5 GMM on the first four and evaluates on the rest.
SyntheticRun synthetic_run(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  vw::RunConfig synth;
  synth.seed = 42;
  synth.count = 8;
  synth.size = 256;
  synth.out = work / "synth";
  vw::cmd_synth(synth);

  for (const char* split : {"train", "test"}) {
    for (const char* sub : {"images", "masks", "labels1", "labels2"}) {
      fs::create_directories(work / split / sub);
    }
  }
  for (const char* sub : {"images", "masks", "labels1", "labels2"}) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(synth.out / sub)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); ++i) {
      fs::copy_file(files[i], work / (i < 4 ? "train" : "test") / sub / files[i].filename());
    }
  }

  vw::RunConfig config;
  config.k = 5;
  config.samples = 100000;
  config.seed = 1;
  config.threads = 1;
  config.root = work / "train";
  config.model = work / "model.json";
  vw::cmd_train(config);
  config.root = work / "test";
  config.out = work / "eval";
  const vw::EvaluationResult r = vw::cmd_evaluate(config);

  SyntheticRun run;
  run.az = r.roc.az;
  run.accuracy = r.accuracy;
  run.files = {config.model, config.out / "roc.csv", config.out / "summary.csv"};
  for (int i = 0; i < 8; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "syn%03d.png", i);
    run.files.push_back(synth.out / "images" / name);
  }

  // Chance-level control: identical pipeline with shuffled training labels.
  const vw::FeatureConfig fc = config.feature_config();
  const auto train = vw::prepare_dataset(vw::discover_dataset(work / "train", true), fc, 1);
  const auto test = vw::prepare_dataset(vw::discover_dataset(work / "test", true), fc, 1);
  const vw::ClassifierModel control = vw::train_model_permuted(train, config, fc);
  run.control_az = vw::evaluate_model(control, test, config.threshold).roc.az;
  run.seconds = seconds_since(t0);
  return run;
}

std::optional<SyntheticRun> first_run;

// 6. Synthetic end-to-end quality.
Outcome synthetic_end_to_end() {
  first_run = synthetic_run(scratch("run_a"));
  const auto& r = *first_run;
  Checks c;
  c.require(r.az >= 0.95, "Az < 0.95");
  c.require(r.az - r.control_az >= 0.3, "margin over permuted control < 0.3");
  c.require(r.seconds < 300.0, "runtime >= 5 min");
  return c.outcome("Az " + fmt("%.4f", r.az) + ", accuracy " + fmt("%.4f", r.accuracy) +
                   ", permuted-label control Az " + fmt("%.4f", r.control_az) + ", " +
                   fmt("%.1f", r.seconds) + " s");
}

std::optional<fs::path> dataset_root(const char* var) {
  const char* v = std::getenv(var);
  if (!v || !*v) return std::nullopt;
  return fs::path(v);
}

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// 7. DRIVE reproduction: <root>/training and <root>/test in the standard layout.
Outcome drive_reproduction() {
  const auto root = dataset_root("VESSELWAVE_DRIVE_ROOT");
  if (!root) return {Status::skip, "VESSELWAVE_DRIVE_ROOT not set"};
  const auto work = scratch("drive");
  const int threads = worker_count();
  vw::RunConfig config;
  config.threads = threads;
  const vw::FeatureConfig fc = config.feature_config();
  const auto train = vw::prepare_dataset(vw::discover_dataset(*root / "training", true), fc, threads);
  const auto test = vw::prepare_dataset(vw::discover_dataset(*root / "test", true), fc, threads);

  Checks c;
  std::string detail;
  std::vector<double> sweep;
  for (int k : {1, 5, 10, 15, 20}) {
    config.k = k;
    const auto r = vw::evaluate_model(vw::train_model(train, config, fc), test, config.threshold);
    sweep.push_back(r.roc.az);
    detail += "k=" + std::to_string(k) + " Az " + fmt("%.4f", r.roc.az);
    if (k == 20) {
      detail += " acc " + fmt("%.4f", r.accuracy);
      c.require(std::abs(r.roc.az - 0.9598) <= 0.010, "GMM Az outside 0.9598 +- 0.010");
      c.require(std::abs(r.accuracy - 0.9467) <= 0.010, "GMM accuracy outside 0.9467 +- 0.010");
    }
    detail += "; ";
  }
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    c.require(sweep[i] >= sweep[i - 1], "Az decreased between consecutive k");
  }
  config.classifier = vw::ClassifierKind::lmse;
  const auto l = vw::evaluate_model(vw::train_model(train, config, fc), test, config.threshold);
  c.require(std::abs(l.roc.az - 0.9520) <= 0.010, "LMSE Az outside 0.9520 +- 0.010");
  c.require(std::abs(l.accuracy - 0.9280) <= 0.010, "LMSE accuracy outside 0.9280 +- 0.010");
  detail += "LMSE Az " + fmt("%.4f", l.roc.az) + " acc " + fmt("%.4f", l.accuracy);
  return c.outcome(detail);
}

// 8. STARE leave-one-out.
Outcome stare_reproduction() {
  const auto root = dataset_root("VESSELWAVE_STARE_ROOT");
  if (!root) return {Status::skip, "VESSELWAVE_STARE_ROOT not set"};
  vw::RunConfig config;
  config.root = *root;
  config.out = scratch("stare");
  config.threads = worker_count();
  const vw::LooResult r = vw::cmd_loo(config);
  Checks c;
  c.require(std::abs(r.pooled.roc.az - 0.9651) <= 0.012, "Az outside 0.9651 +- 0.012");
  c.require(std::abs(r.pooled.accuracy - 0.9474) <= 0.012, "accuracy outside 0.9474 +- 0.012");
  return c.outcome("leave-one-out Az " + fmt("%.4f", r.pooled.roc.az) + ", accuracy " +
                   fmt("%.4f", r.pooled.accuracy) + " over " +
                   std::to_string(r.per_image.size()) + " folds");
}

// 9. Two identical single-threaded runs are bitwise equal.
Outcome determinism() {
  if (!first_run) first_run = synthetic_run(scratch("run_a"));
  const SyntheticRun second = synthetic_run(scratch("run_b"));
  Checks c;
  std::size_t same = 0;
  for (std::size_t i = 0; i < first_run->files.size(); ++i) {
    const std::string a = slurp(first_run->files[i]);
    const bool equal = !a.empty() && a == slurp(second.files[i]);
    same += equal;
    c.require(equal, first_run->files[i].filename().string() + " differs");
  }
  return c.outcome(std::to_string(same) + "/" + std::to_string(first_run->files.size()) +
                   " files bitwise equal (model.json, roc.csv, summary.csv, 8 images)");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"wavelet oracle equivalence", wavelet_oracle},
      {"angle symmetry", angle_symmetry},
      {"EM properties", em_properties},
      {"LMSE oracle", lmse_oracle},
      {"ROC correctness", roc_correctness},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"DRIVE reproduction", drive_reproduction},
      {"STARE reproduction", stare_reproduction},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("threw: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failures += o.status == Status::fail;
    std::printf("[%s] %zu. %s: %s\n", tag, i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
