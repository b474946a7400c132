#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vesselwave/features.hpp"

namespace vesselwave {

enum class ClassifierKind { gmm, lmse };

ClassifierKind parse_classifier(std::string_view name);
const char* to_string(ClassifierKind kind);

struct RunConfig {
  std::filesystem::path root;
  std::vector<double> scales{2.0, 3.0, 4.0, 6.0};
  double epsilon = 8.0;
  std::array<double, 2> k0{0.0, 3.0};
  double angle_step = 10.0;
  ClassifierKind classifier = ClassifierKind::gmm;
  int k = 20;
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
  double threshold = 0.5;            // posterior operating point (GMM)
  std::optional<int> border_iters;   // default: ceil(4 * max scale)
  std::filesystem::path model = "model.json";
  std::filesystem::path out = ".";
  int threads = 1;
  int count = 8;     // synth
  int size = 256;    // synth

  int resolved_border_iters() const;
  FeatureConfig feature_config() const;
  void validate() const;
};

/// Values of the flat `key = value` subset of TOML accepted for run configs.
using ConfigValue = std::variant<std::string, double, bool, std::vector<double>>;

/// Parses top-level `key = value` pairs: strings, numbers, booleans and
/// arrays of numbers, with `#` comments. Tables are rejected.
std::map<std::string, ConfigValue> parse_toml(std::string_view text);

/// Overlays the file's settings on `base`. Keys accept '-' or '_'.
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});
void apply_config_value(RunConfig& config, std::string key, const ConfigValue& value);

/// Stable 64-bit hash (hex) of the settings that influence training.
std::string config_fingerprint(const RunConfig& config, const std::vector<std::string>& stems);

}  // namespace vesselwave
