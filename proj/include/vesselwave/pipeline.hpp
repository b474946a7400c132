#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vesselwave/classify.hpp"
#include "vesselwave/config.hpp"
#include "vesselwave/eval.hpp"
#include "vesselwave/features.hpp"
#include "vesselwave/model.hpp"

namespace vesselwave {

/// Files sharing a pairing key: the file name up to its first '.' or '_'
/// (`21_training.png`, `21_manual1.png` -> "21"; `im0001.ah.ppm` -> "im0001").
struct DatasetEntry {
  std::string stem;
  std::filesystem::path image;
  std::optional<std::filesystem::path> mask;
  std::optional<std::filesystem::path> label1;
  std::optional<std::filesystem::path> label2;
};

std::string pairing_key(std::string_view filename);

/// Scans `<root>/images`, `<root>/masks`, `<root>/labels1`, `<root>/labels2`.
/// Entries are sorted by stem. With `require_labels`, a missing label1 file is
/// a dataset error listing every missing stem.
std::vector<DatasetEntry> discover_dataset(const std::filesystem::path& root, bool require_labels);

struct PreparedImage {
  std::string stem;
  FeatureStack features;      // normalized
  NormalizationStats stats;
  FovMask fov;                // camera aperture
  FovMask grown;              // aperture after border extension
  std::optional<Mask> truth;
  std::optional<Mask> truth2;
};

/// Load -> mask -> invert -> border extension -> wavelet features -> normalization.
PreparedImage prepare_image(const std::filesystem::path& image,
                            const std::optional<std::filesystem::path>& mask,
                            const FeatureConfig& fc);
PreparedImage prepare_entry(const DatasetEntry& entry, const FeatureConfig& fc);

/// Prepares every entry on a pool of `threads` workers; output order follows `entries`.
std::vector<PreparedImage> prepare_dataset(std::span<const DatasetEntry> entries,
                                           const FeatureConfig& fc, int threads);

ClassifierModel train_model(std::span<const PreparedImage> images, const RunConfig& config,
                            const FeatureConfig& fc);
/// As train_model, with the labels of the drawn training set shuffled. Used as
/// a chance-level control.
ClassifierModel train_model_permuted(std::span<const PreparedImage> images,
                                     const RunConfig& config, const FeatureConfig& fc);

PosteriorMap score_image(const ClassifierModel& model, const FeatureStack& features);
/// GMM: posterior > threshold. LMSE: score > 0. Zero outside `fov`.
Mask segment(const PosteriorMap& scores, const FovMask& fov, double threshold);

struct EvaluationResult {
  RocCurve roc;
  double accuracy = 0.0;
  Confusion operating_point;
  std::optional<ObserverPoint> observer;
  std::vector<PosteriorMap> scores;
};

EvaluationResult evaluate_model(const ClassifierModel& model, std::span<const PreparedImage> images,
                                double threshold);

std::vector<std::pair<std::string, double>> summary_metrics(const EvaluationResult& result);

struct LooImageResult {
  std::string stem;
  double az;
  double accuracy;
};

struct LooResult {
  std::vector<LooImageResult> per_image;
  EvaluationResult pooled;
};

void cmd_train(const RunConfig& config);
void cmd_segment(const RunConfig& config, std::span<const std::filesystem::path> images);
EvaluationResult cmd_evaluate(const RunConfig& config);
LooResult cmd_loo(const RunConfig& config);
void cmd_synth(const RunConfig& config);

}  // namespace vesselwave
