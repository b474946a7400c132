#include "vesselwave/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vesselwave/error.hpp"
#include "vesselwave/eval.hpp"

namespace vesselwave {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view s, int line) {
  std::string clean;
  for (char ch : s) {
    if (ch != '_') clean.push_back(ch);
  }
  double v = 0.0;
  const char* begin = clean.data();
  if (!clean.empty() && clean[0] == '+') ++begin;
  const auto res = std::from_chars(begin, clean.data() + clean.size(), v);
  if (res.ec != std::errc() || res.ptr != clean.data() + clean.size()) {
    throw Error(ErrorKind::config, "line " + std::to_string(line) + ": cannot parse value '" +
                                       std::string(s) + "'");
  }
  return v;
}

std::string strip_comment(std::string_view line) {
  std::string out;
  char quote = 0;
  for (char ch : line) {
    if ((ch == '"' || ch == '\'') && (quote == 0 || quote == ch)) quote = quote ? 0 : ch;
    if (ch == '#' && !quote) break;
    out.push_back(ch);
  }
  return out;
}

ConfigValue parse_value(std::string_view raw, int line) {
  const std::string_view v = trim(raw);
  if (v.empty()) throw Error(ErrorKind::config, "line " + std::to_string(line) + ": missing value");
  // Basic strings take no escapes here; literal ('...') strings never do.
  if (v.front() == '"' || v.front() == '\'') {
    if (v.size() < 2 || v.back() != v.front()) {
      throw Error(ErrorKind::config, "line " + std::to_string(line) + ": unterminated string");
    }
    return std::string(v.substr(1, v.size() - 2));
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '[') {
    if (v.back() != ']') {
      throw Error(ErrorKind::config, "line " + std::to_string(line) + ": unterminated array");
    }
    std::vector<double> values;
    std::string_view body = v.substr(1, v.size() - 2);
    while (!trim(body).empty()) {
      const auto comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      if (!item.empty()) values.push_back(parse_number(item, line));
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    return values;
  }
  return parse_number(v, line);
}

double as_number(const ConfigValue& v, const std::string& key) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw Error(ErrorKind::config, "'" + key + "' must be a number");
}

int as_int(const ConfigValue& v, const std::string& key) {
  const double d = as_number(v, key);
  if (d != std::floor(d)) throw Error(ErrorKind::config, "'" + key + "' must be an integer");
  return static_cast<int>(d);
}

std::string as_string(const ConfigValue& v, const std::string& key) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw Error(ErrorKind::config, "'" + key + "' must be a string");
}

std::vector<double> as_list(const ConfigValue& v, const std::string& key) {
  if (const auto* l = std::get_if<std::vector<double>>(&v)) return *l;
  throw Error(ErrorKind::config, "'" + key + "' must be an array of numbers");
}

}  // namespace

ClassifierKind parse_classifier(std::string_view name) {
  if (name == "gmm") return ClassifierKind::gmm;
  if (name == "lmse") return ClassifierKind::lmse;
  throw Error(ErrorKind::config, "unknown classifier '" + std::string(name) + "' (gmm|lmse)");
}

const char* to_string(ClassifierKind kind) {
  return kind == ClassifierKind::gmm ? "gmm" : "lmse";
}

int RunConfig::resolved_border_iters() const {
  return border_iters ? *border_iters : default_border_iterations(scales);
}

FeatureConfig RunConfig::feature_config() const {
  FeatureConfig fc;
  fc.morlet.epsilon = epsilon;
  fc.morlet.k0 = k0;
  fc.morlet.angles = angle_sweep(angle_step);
  fc.scales = scales;
  fc.border_iterations = resolved_border_iters();
  return fc;
}

void RunConfig::validate() const {
  if (scales.empty()) throw Error(ErrorKind::config, "at least one scale is required");
  for (double s : scales) {
    if (!(s >= 1.0)) throw Error(ErrorKind::config, "scales must be >= 1");
  }
  if (!(epsilon >= 1.0)) throw Error(ErrorKind::config, "epsilon must be >= 1");
  if (!(angle_step > 0.0 && angle_step < 180.0)) {
    throw Error(ErrorKind::config, "angle step must lie in (0, 180)");
  }
  if (k < 1) throw Error(ErrorKind::config, "k must be >= 1");
  if (samples == 0) throw Error(ErrorKind::config, "samples must be >= 1");
  if (border_iters && *border_iters < 0) throw Error(ErrorKind::config, "border iterations must be >= 0");
  if (threads < 1) throw Error(ErrorKind::config, "threads must be >= 1");
}

std::map<std::string, ConfigValue> parse_toml(std::string_view text) {
  std::map<std::string, ConfigValue> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string stripped = strip_comment(raw);
    const std::string_view l = trim(stripped);
    if (l.empty()) continue;
    if (l.front() == '[') {
      throw Error(ErrorKind::config,
                  "line " + std::to_string(line) + ": tables are not supported in run configs");
    }
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::config, "line " + std::to_string(line) + ": expected key = value");
    }
    std::string key(trim(l.substr(0, eq)));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    out[key] = parse_value(l.substr(eq + 1), line);
  }
  return out;
}

void apply_config_value(RunConfig& c, std::string key, const ConfigValue& v) {
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "root") c.root = as_string(v, key);
  else if (key == "scales") c.scales = as_list(v, key);
  else if (key == "epsilon") c.epsilon = as_number(v, key);
  else if (key == "k0") {
    const auto l = as_list(v, key);
    if (l.size() != 2) throw Error(ErrorKind::config, "'k0' needs two entries");
    c.k0 = {l[0], l[1]};
  } else if (key == "angle_step") c.angle_step = as_number(v, key);
  else if (key == "classifier") c.classifier = parse_classifier(as_string(v, key));
  else if (key == "k") c.k = as_int(v, key);
  else if (key == "samples") c.samples = static_cast<std::size_t>(as_int(v, key));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(as_number(v, key));
  else if (key == "threshold") c.threshold = as_number(v, key);
  else if (key == "border_iters") c.border_iters = as_int(v, key);
  else if (key == "model") c.model = as_string(v, key);
  else if (key == "out") c.out = as_string(v, key);
  else if (key == "threads") c.threads = as_int(v, key);
  else if (key == "count") c.count = as_int(v, key);
  else if (key == "size") c.size = as_int(v, key);
  else throw Error(ErrorKind::config, "unknown config key '" + key + "'");
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  for (const auto& [key, value] : parse_toml(buffer.str())) apply_config_value(base, key, value);
  return base;
}

std::string config_fingerprint(const RunConfig& c, const std::vector<std::string>& stems) {
  std::string canon = "scales=";
  for (double s : c.scales) canon += format_double(s) + ",";
  canon += ";epsilon=" + format_double(c.epsilon);
  canon += ";k0=" + format_double(c.k0[0]) + "," + format_double(c.k0[1]);
  canon += ";angle_step=" + format_double(c.angle_step);
  canon += ";classifier=" + std::string(to_string(c.classifier));
  canon += ";k=" + std::to_string(c.k);
  canon += ";samples=" + std::to_string(c.samples);
  canon += ";seed=" + std::to_string(c.seed);
  canon += ";border_iters=" + std::to_string(c.resolved_border_iters());
  canon += ";images=";
  for (const auto& s : stems) canon += s + ",";
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vesselwave
