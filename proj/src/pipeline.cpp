#include "vesselwave/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include "vesselwave/error.hpp"
#include "vesselwave/imageio.hpp"
#include "vesselwave/rng.hpp"
#include "vesselwave/synth.hpp"

namespace vesselwave {

namespace fs = std::filesystem;

namespace {

bool is_raster_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

// key -> path for every raster in `dir`; empty when the directory is absent.
std::map<std::string, fs::path> scan(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> skipped;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (!is_raster_file(entry.path())) {
      skipped.push_back(entry.path());
      continue;
    }
    const std::string key = pairing_key(entry.path().filename().string());
    if (!out.emplace(key, entry.path()).second) {
      throw Error(ErrorKind::dataset, "two files in '" + dir.string() + "' share the key '" + key +
                                          "'");
    }
  }
  if (out.empty() && !skipped.empty()) {
    throw Error(ErrorKind::dataset, "'" + dir.string() +
                                        "' holds no PNG/PGM/PPM files; convert the dataset "
                                        "(e.g. GIF/TIFF/JPEG) to PNG first");
  }
  return out;
}

template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<LabeledImage> labeled_view(std::span<const PreparedImage* const> images) {
  std::vector<LabeledImage> out;
  out.reserve(images.size());
  for (const PreparedImage* im : images) {
    if (!im->truth) throw Error(ErrorKind::dataset, "image '" + im->stem + "' has no labels");
    out.push_back({im->features, *im->truth, im->fov});
  }
  return out;
}

ClassifierModel fit_classifier(const TrainingSet& ts, const RunConfig& config,
                               const FeatureConfig& fc, std::span<const PreparedImage* const> images) {
  ClassifierModel model;
  model.features = fc;
  if (config.classifier == ClassifierKind::gmm) {
    EmOptions options;
    options.k = config.k;
    options.seed = config.seed;
    model.classifier = fit_gmm(ts, options);
  } else {
    model.classifier = fit_lmse(ts);
  }
  std::vector<std::string> stems;
  for (const auto* im : images) stems.push_back(im->stem);
  model.fingerprint = config_fingerprint(config, stems);
  return model;
}

ClassifierModel train_on(std::span<const PreparedImage* const> images, const RunConfig& config,
                         const FeatureConfig& fc, bool permute_labels) {
  const auto labeled = labeled_view(images);
  TrainingSet ts = subsample(labeled, config.samples, config.seed);
  if (permute_labels) {
    Rng rng(config.seed ^ 0x5eedULL);
    for (std::size_t i = ts.labels.size(); i > 1; --i) {
      std::swap(ts.labels[i - 1], ts.labels[static_cast<std::size_t>(rng.below(i))]);
    }
  }
  return fit_classifier(ts, config, fc, images);
}

std::vector<const PreparedImage*> pointers(std::span<const PreparedImage> images) {
  std::vector<const PreparedImage*> out;
  for (const auto& im : images) out.push_back(&im);
  return out;
}

Image display_scores(const PosteriorMap& pmap, const FovMask& fov) {
  if (pmap.kind == PosteriorMap::Kind::posterior) return pmap.values;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < pmap.values.size(); ++i) {
    if (!fov[i]) continue;
    lo = first ? pmap.values[i] : std::min(lo, pmap.values[i]);
    hi = first ? pmap.values[i] : std::max(hi, pmap.values[i]);
    first = false;
  }
  Image out(pmap.values.width(), pmap.values.height(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (pmap.values[i] - lo) / (hi - lo);
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create '" + dir.string() + "'");
}

std::vector<DatasetEntry> discover_for(const RunConfig& config, bool require_labels) {
  if (config.root.empty()) throw Error(ErrorKind::config, "--root is required");
  return discover_dataset(config.root, require_labels);
}

}  // namespace

std::string pairing_key(std::string_view filename) {
  const auto cut = filename.find_first_of("._");
  return std::string(filename.substr(0, cut));
}

std::vector<DatasetEntry> discover_dataset(const fs::path& root, bool require_labels) {
  if (!fs::is_directory(root / "images")) {
    throw Error(ErrorKind::dataset, "'" + (root / "images").string() + "' does not exist");
  }
  const auto images = scan(root / "images");
  const auto masks = scan(root / "masks");
  const auto labels1 = scan(root / "labels1");
  const auto labels2 = scan(root / "labels2");
  if (images.empty()) throw Error(ErrorKind::dataset, "no images under '" + root.string() + "'");

  std::vector<DatasetEntry> entries;
  std::vector<std::string> missing;
  for (const auto& [key, path] : images) {
    DatasetEntry e{key, path, {}, {}, {}};
    if (auto it = masks.find(key); it != masks.end()) e.mask = it->second;
    if (auto it = labels1.find(key); it != labels1.end()) e.label1 = it->second;
    if (auto it = labels2.find(key); it != labels2.end()) e.label2 = it->second;
    if (require_labels && !e.label1) missing.push_back(key);
    entries.push_back(std::move(e));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorKind::dataset, "missing labels1 files for: " + list);
  }
  return entries;
}

PreparedImage prepare_image(const fs::path& image, const std::optional<fs::path>& mask,
                            const FeatureConfig& fc) {
  const Raster raster = read_raster(image);
  const Image working = channel_of(raster, fc.channel);
  PreparedImage out;
  out.stem = image.stem().string();
  out.fov = mask ? load_mask(*mask, working)
                 : derive_mask(channel_of(raster, Channel::red), fc.mask_threshold);
  const ExtendedImage extended =
      extend_border(fc.invert ? invert(working) : working, out.fov, fc.border_iterations);
  out.grown = extended.mask;
  NormalizedStack normalized =
      normalize(build_stack(extended.image, extended.mask, fc.morlet, fc.scales), extended.mask);
  out.features = std::move(normalized.stack);
  out.stats = std::move(normalized.stats);
  return out;
}

PreparedImage prepare_entry(const DatasetEntry& entry, const FeatureConfig& fc) {
  PreparedImage out = prepare_image(entry.image, entry.mask, fc);
  out.stem = entry.stem;
  const Image& shape = out.features.planes.front();
  if (entry.label1) out.truth = load_mask(*entry.label1, shape);
  if (entry.label2) out.truth2 = load_mask(*entry.label2, shape);
  return out;
}

std::vector<PreparedImage> prepare_dataset(std::span<const DatasetEntry> entries,
                                           const FeatureConfig& fc, int threads) {
  std::vector<PreparedImage> out(entries.size());
  parallel_for(entries.size(), threads,
               [&](std::size_t i) { out[i] = prepare_entry(entries[i], fc); });
  return out;
}

ClassifierModel train_model(std::span<const PreparedImage> images, const RunConfig& config,
                            const FeatureConfig& fc) {
  return train_on(pointers(images), config, fc, false);
}

ClassifierModel train_model_permuted(std::span<const PreparedImage> images,
                                     const RunConfig& config, const FeatureConfig& fc) {
  return train_on(pointers(images), config, fc, true);
}

PosteriorMap score_image(const ClassifierModel& model, const FeatureStack& features) {
  if (const auto* g = std::get_if<GmmModel>(&model.classifier)) return gmm_posterior(*g, features);
  return lmse_score(std::get<LmseModel>(model.classifier), features);
}

Mask segment(const PosteriorMap& scores, const FovMask& fov, double threshold) {
  Mask seg = scores.kind == PosteriorMap::Kind::posterior ? bayes_decide(scores, threshold)
                                                          : linear_decide(scores, 0.0);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (!fov[i]) seg[i] = 0;
  }
  return seg;
}

EvaluationResult evaluate_model(const ClassifierModel& model, std::span<const PreparedImage> images,
                                double threshold) {
  EvaluationResult result;
  std::vector<Image> scores;
  std::vector<Mask> truths, segs, seconds;
  std::vector<FovMask> masks;
  bool all_second = true;
  for (const auto& im : images) {
    if (!im.truth) throw Error(ErrorKind::dataset, "image '" + im.stem + "' has no labels");
    PosteriorMap pmap = score_image(model, im.features);
    segs.push_back(segment(pmap, im.fov, threshold));
    result.operating_point += confusion(segs.back(), *im.truth, im.fov);
    scores.push_back(pmap.values);
    truths.push_back(*im.truth);
    masks.push_back(im.fov);
    if (im.truth2) seconds.push_back(*im.truth2);
    else all_second = false;
    result.scores.push_back(std::move(pmap));
  }
  result.roc = roc(scores, truths, masks);
  result.accuracy = accuracy(segs, truths, masks);
  if (all_second && !seconds.empty()) result.observer = observer_point(seconds, truths, masks);
  return result;
}

std::vector<std::pair<std::string, double>> summary_metrics(const EvaluationResult& r) {
  std::vector<std::pair<std::string, double>> m{
      {"az", r.roc.az},
      {"accuracy", r.accuracy},
      {"tpf", r.operating_point.tpf()},
      {"fpf", r.operating_point.fpf()},
      {"pixels", static_cast<double>(r.operating_point.total())},
  };
  if (r.observer) {
    m.emplace_back("observer_fpf", r.observer->fpf);
    m.emplace_back("observer_tpf", r.observer->tpf);
    m.emplace_back("observer_accuracy", r.observer->accuracy);
  }
  return m;
}

void cmd_train(const RunConfig& config) {
  config.validate();
  const auto entries = discover_for(config, true);
  const FeatureConfig fc = config.feature_config();
  const auto prepared = prepare_dataset(entries, fc, config.threads);
  const ClassifierModel model = train_model(prepared, config, fc);
  if (config.model.has_parent_path()) ensure_dir(config.model.parent_path());
  save_model(config.model, model);
}

void cmd_segment(const RunConfig& config, std::span<const fs::path> images) {
  const ClassifierModel model = load_model(config.model);
  std::vector<PreparedImage> prepared;
  if (!images.empty()) {
    prepared.resize(images.size());
    parallel_for(images.size(), config.threads, [&](std::size_t i) {
      prepared[i] = prepare_image(images[i], std::nullopt, model.features);
    });
  } else {
    const auto entries = discover_for(config, false);
    prepared = prepare_dataset(entries, model.features, config.threads);
  }
  ensure_dir(config.out);
  for (const auto& im : prepared) {
    const PosteriorMap pmap = score_image(model, im.features);
    write_pgm16(config.out / (im.stem + "_posterior.pgm"), display_scores(pmap, im.fov));
    write_mask_png(config.out / (im.stem + "_segmentation.png"),
                   segment(pmap, im.fov, config.threshold));
  }
}

EvaluationResult cmd_evaluate(const RunConfig& config) {
  const ClassifierModel model = load_model(config.model);
  const auto entries = discover_for(config, true);
  const auto prepared = prepare_dataset(entries, model.features, config.threads);
  EvaluationResult result = evaluate_model(model, prepared, config.threshold);
  ensure_dir(config.out);
  write_roc_csv(config.out / "roc.csv", result.roc);
  write_summary_csv(config.out / "summary.csv", summary_metrics(result));
  return result;
}

LooResult cmd_loo(const RunConfig& config) {
  config.validate();
  const auto entries = discover_for(config, true);
  if (entries.size() < 2) {
    throw Error(ErrorKind::dataset, "leave-one-out needs at least two labelled images");
  }
  const FeatureConfig fc = config.feature_config();
  const auto prepared = prepare_dataset(entries, fc, config.threads);

  LooResult result;
  std::vector<Image> scores;
  std::vector<Mask> truths, segs, seconds;
  std::vector<FovMask> masks;
  bool all_second = true;
  for (std::size_t held = 0; held < prepared.size(); ++held) {
    std::vector<const PreparedImage*> others;
    for (std::size_t i = 0; i < prepared.size(); ++i) {
      if (i != held) others.push_back(&prepared[i]);
    }
    const ClassifierModel model = train_on(others, config, fc, false);
    const PreparedImage& im = prepared[held];
    PosteriorMap pmap = score_image(model, im.features);
    Mask seg = segment(pmap, im.fov, config.threshold);
    const Confusion c = confusion(seg, *im.truth, im.fov);
    const RocCurve own = roc(std::span(&pmap.values, 1), std::span(&*im.truth, 1),
                             std::span(&im.fov, 1));
    result.per_image.push_back({im.stem, own.az, c.accuracy()});
    result.pooled.operating_point += c;
    scores.push_back(pmap.values);
    truths.push_back(*im.truth);
    masks.push_back(im.fov);
    segs.push_back(std::move(seg));
    if (im.truth2) seconds.push_back(*im.truth2);
    else all_second = false;
    result.pooled.scores.push_back(std::move(pmap));
  }
  result.pooled.roc = roc(scores, truths, masks);
  result.pooled.accuracy = accuracy(segs, truths, masks);
  if (all_second) result.pooled.observer = observer_point(seconds, truths, masks);

  ensure_dir(config.out);
  write_roc_csv(config.out / "roc.csv", result.pooled.roc);
  write_summary_csv(config.out / "summary.csv", summary_metrics(result.pooled));
  std::ofstream per(config.out / "loo_per_image.csv", std::ios::binary);
  if (!per) throw Error(ErrorKind::io, "cannot write '" + (config.out / "loo_per_image.csv").string() + "'");
  per << "stem,az,accuracy\n";
  for (const auto& r : result.per_image) {
    per << r.stem << ',' << format_double(r.az) << ',' << format_double(r.accuracy) << '\n';
  }
  return result;
}

void cmd_synth(const RunConfig& config) {
  SynthOptions options;
  options.seed = config.seed;
  options.count = config.count;
  options.size = config.size;
  write_synthetic_dataset(config.out, options);
}

}  // namespace vesselwave
