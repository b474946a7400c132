#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "vesselwave/classify.hpp"
#include "vesselwave/features.hpp"

namespace vesselwave {

inline constexpr int kModelVersion = 1;

/// A trained classifier together with the feature pipeline it was trained on.
struct ClassifierModel {
  FeatureConfig features;
  std::variant<GmmModel, LmseModel> classifier;
  std::string fingerprint;  // hash of the training configuration

  bool is_gmm() const { return std::holds_alternative<GmmModel>(classifier); }
  int dim() const;
};

/// Versioned JSON; doubles are written with round-trip precision.
void save_model(const std::filesystem::path& path, const ClassifierModel& model);
ClassifierModel load_model(const std::filesystem::path& path);

std::string model_to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const std::string& text);

}  // namespace vesselwave
