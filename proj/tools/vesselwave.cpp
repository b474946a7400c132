// vesselwave: train, apply and evaluate wavelet/GMM vessel segmentation.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vesselwave/config.hpp"
#include "vesselwave/error.hpp"
#include "vesselwave/eval.hpp"
#include "vesselwave/pipeline.hpp"

namespace vw = vesselwave;

namespace {

constexpr const char* kFooter =
    "Inputs must be PNG, PGM or PPM rasters. Convert JPEG/TIFF/GIF dataset files first,\n"
    "e.g. `convert 21_training.tif images/21_training.png`.\n"
    "Dataset layout: <root>/images, <root>/masks (optional), <root>/labels1, <root>/labels2;\n"
    "files pair by the name prefix before the first '.' or '_'.";

// Options given on the command line override the --config file, which
// overrides the built-in defaults.
class RunOptions {
 public:
  explicit RunOptions(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_file_, "TOML file with run settings")
        ->check(CLI::ExistingFile);
  }

  template <typename T, typename Apply>
  void add(const std::string& name, const std::string& help, Apply apply) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *holder, help);
    appliers_.push_back([opt, holder, apply](vw::RunConfig& c) {
      if (opt->count() > 0) apply(c, *holder);
    });
  }

  void add_feature_flags() {
    add<std::vector<double>>("--scales", "wavelet scales in pixels (default 2 3 4 6)",
                             [](auto& c, const auto& v) { c.scales = v; });
    add<double>("--epsilon", "Morlet anisotropy (default 8)",
                [](auto& c, double v) { c.epsilon = v; });
    add<std::vector<double>>("--k0", "Morlet frequency vector (default 0 3)",
                             [](auto& c, const auto& v) {
                               if (v.size() != 2) {
                                 throw vw::Error(vw::ErrorKind::config, "--k0 takes two values");
                               }
                               c.k0 = {v[0], v[1]};
                             });
    add<double>("--angle-step", "orientation step in degrees (default 10)",
                [](auto& c, double v) { c.angle_step = v; });
    add<int>("--border-iters", "border extension iterations (default ceil(4 * max scale))",
             [](auto& c, int v) { c.border_iters = v; });
  }

  void add_training_flags() {
    add<std::string>("--classifier", "gmm or lmse (default gmm)",
                     [](auto& c, const std::string& v) { c.classifier = vw::parse_classifier(v); });
    add<int>("--k", "Gaussians per class (default 20)", [](auto& c, int v) { c.k = v; });
    add<std::size_t>("--samples", "training pixels drawn (default 1000000)",
                     [](auto& c, std::size_t v) { c.samples = v; });
  }

  void add_common_flags() {
    add<std::string>("--root", "dataset root", [](auto& c, const std::string& v) { c.root = v; });
    add<std::uint64_t>("--seed", "random seed (default 1)",
                       [](auto& c, std::uint64_t v) { c.seed = v; });
    add<double>("--threshold", "posterior operating point (default 0.5)",
                [](auto& c, double v) { c.threshold = v; });
    add<std::string>("--model", "model file (default model.json)",
                     [](auto& c, const std::string& v) { c.model = v; });
    add<std::string>("--out", "output directory", [](auto& c, const std::string& v) { c.out = v; });
    add<int>("--threads", "per-image worker threads (default 1)",
             [](auto& c, int v) { c.threads = v; });
  }

  vw::RunConfig resolve() const {
    vw::RunConfig c;
    if (!config_file_.empty()) c = vw::load_config_file(config_file_, c);
    for (const auto& apply : appliers_) apply(c);
    return c;
  }

 private:
  CLI::App* app_;
  std::string config_file_;
  std::vector<std::function<void(vw::RunConfig&)>> appliers_;
};

void print_summary(const vw::EvaluationResult& r) {
  for (const auto& [name, value] : vw::summary_metrics(r)) {
    std::cout << name << " = " << vw::format_double(value) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retinal vessel segmentation with 2-D Morlet wavelet features and "
               "supervised pixel classification"};
  app.footer(kFooter);
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "fit a classifier on a labelled dataset");
  RunOptions train_opts(train);
  train_opts.add_common_flags();
  train_opts.add_feature_flags();
  train_opts.add_training_flags();

  auto* seg = app.add_subcommand("segment", "write posterior maps and segmentations");
  RunOptions seg_opts(seg);
  seg_opts.add_common_flags();
  std::vector<std::string> seg_images;
  seg->add_option("images", seg_images, "images to segment (default: all of --root)");

  auto* evaluate = app.add_subcommand("evaluate", "pooled ROC, Az and accuracy on a test set");
  RunOptions eval_opts(evaluate);
  eval_opts.add_common_flags();

  auto* loo = app.add_subcommand("loo", "leave-one-out training and evaluation");
  RunOptions loo_opts(loo);
  loo_opts.add_common_flags();
  loo_opts.add_feature_flags();
  loo_opts.add_training_flags();

  auto* synth = app.add_subcommand("synth", "generate a synthetic labelled dataset");
  RunOptions synth_opts(synth);
  synth_opts.add<std::uint64_t>("--seed", "random seed (default 1)",
                                [](auto& c, std::uint64_t v) { c.seed = v; });
  synth_opts.add<std::string>("--out", "output dataset root",
                              [](auto& c, const std::string& v) { c.out = v; });
  synth_opts.add<int>("--count", "number of images (default 8)", [](auto& c, int v) { c.count = v; });
  synth_opts.add<int>("--size", "image side in pixels (default 256)",
                      [](auto& c, int v) { c.size = v; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto config = train_opts.resolve();
      vw::cmd_train(config);
      std::cout << "model written to " << config.model.string() << '\n';
    } else if (*seg) {
      const auto config = seg_opts.resolve();
      std::vector<std::filesystem::path> paths(seg_images.begin(), seg_images.end());
      vw::cmd_segment(config, paths);
    } else if (*evaluate) {
      print_summary(vw::cmd_evaluate(eval_opts.resolve()));
    } else if (*loo) {
      print_summary(vw::cmd_loo(loo_opts.resolve()).pooled);
    } else if (*synth) {
      vw::cmd_synth(synth_opts.resolve());
    }
  } catch (const vw::Error& e) {
    std::cerr << "error[" << vw::to_string(e.kind()) << "]: " << e.what() << '\n';
    return vw::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
