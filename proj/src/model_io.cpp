#include "vesselwave/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vesselwave/error.hpp"

namespace vesselwave {

namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index dim) {
  Eigen::MatrixXd m(dim, dim);
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim) {
    throw Error(ErrorKind::load, "covariance has the wrong shape");
  }
  for (Eigen::Index r = 0; r < dim; ++r) {
    const auto row = j.at(static_cast<std::size_t>(r)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != dim) {
      throw Error(ErrorKind::load, "covariance has the wrong shape");
    }
    for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

int ClassifierModel::dim() const {
  if (const auto* g = std::get_if<GmmModel>(&classifier)) return g->dim;
  return static_cast<int>(std::get<LmseModel>(classifier).w.size());
}

std::string model_to_json(const ClassifierModel& model) {
  const FeatureConfig& fc = model.features;
  json j;
  j["version"] = kModelVersion;
  j["kind"] = model.is_gmm() ? "gmm" : "lmse";
  j["dim"] = model.dim();
  j["scales"] = fc.scales;
  j["epsilon"] = fc.morlet.epsilon;
  j["k0"] = std::vector<double>{fc.morlet.k0[0], fc.morlet.k0[1]};
  j["c_psi"] = fc.morlet.c_psi;
  j["angles"] = fc.morlet.angles;
  j["border_iters"] = fc.border_iterations;
  j["channel"] = to_string(fc.channel);
  j["invert"] = fc.invert;
  j["mask_threshold"] = fc.mask_threshold;
  j["normalization"] = "per-image z-score, population std, over the border-extended aperture";
  j["fingerprint"] = model.fingerprint;
  if (const auto* g = std::get_if<GmmModel>(&model.classifier)) {
    j["priors"] = std::vector<double>{g->priors[0], g->priors[1]};
    json classes = json::array();
    const char* names[2] = {"vessel", "non-vessel"};
    for (std::size_t c = 0; c < 2; ++c) {
      json comps = json::array();
      for (const auto& comp : g->classes[c].components) {
        comps.push_back({{"weight", comp.weight},
                         {"mean", vector_json(comp.mean)},
                         {"cov", matrix_json(comp.cov)}});
      }
      classes.push_back({{"label", names[c]}, {"components", comps}});
    }
    j["classes"] = classes;
  } else {
    const auto& l = std::get<LmseModel>(model.classifier);
    j["w"] = vector_json(l.w);
    j["w0"] = l.w0;
  }
  return j.dump(2) + "\n";
}

ClassifierModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::load, std::string("model is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) {
      throw Error(ErrorKind::load, "unsupported model version " + std::to_string(version));
    }
    ClassifierModel model;
    FeatureConfig& fc = model.features;
    fc.scales = j.at("scales").get<std::vector<double>>();
    fc.morlet.epsilon = j.at("epsilon").get<double>();
    const auto k0 = j.at("k0").get<std::vector<double>>();
    if (k0.size() != 2) throw Error(ErrorKind::load, "k0 must have two entries");
    fc.morlet.k0 = {k0[0], k0[1]};
    fc.morlet.c_psi = j.value("c_psi", 1.0);
    if (j.contains("angles")) fc.morlet.angles = j.at("angles").get<std::vector<double>>();
    fc.border_iterations = j.value("border_iters", fc.border_iterations);
    fc.channel = parse_channel(j.value("channel", std::string("green")));
    fc.invert = j.value("invert", true);
    fc.mask_threshold = j.value("mask_threshold", fc.mask_threshold);
    model.fingerprint = j.value("fingerprint", std::string());
    const int dim = j.at("dim").get<int>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gmm") {
      GmmModel g;
      g.dim = dim;
      const auto priors = j.at("priors").get<std::vector<double>>();
      if (priors.size() != 2) throw Error(ErrorKind::load, "priors must have two entries");
      g.priors = {priors[0], priors[1]};
      const auto& classes = j.at("classes");
      if (!classes.is_array() || classes.size() != 2) {
        throw Error(ErrorKind::load, "a GMM model needs exactly two classes");
      }
      for (std::size_t c = 0; c < 2; ++c) {
        for (const auto& comp : classes[c].at("components")) {
          Gaussian gauss;
          gauss.weight = comp.at("weight").get<double>();
          gauss.mean = vector_from(comp.at("mean"));
          if (gauss.mean.size() != dim) throw Error(ErrorKind::load, "mean has the wrong length");
          gauss.cov = matrix_from(comp.at("cov"), dim);
          g.classes[c].components.push_back(std::move(gauss));
        }
      }
      model.classifier = std::move(g);
    } else if (kind == "lmse") {
      LmseModel l;
      l.w = vector_from(j.at("w"));
      l.w0 = j.at("w0").get<double>();
      if (l.w.size() != dim) throw Error(ErrorKind::load, "w has the wrong length");
      model.classifier = std::move(l);
    } else {
      throw Error(ErrorKind::load, "unknown classifier kind '" + kind + "'");
    }
    if (static_cast<int>(fc.scales.size()) + 1 != dim) {
      throw Error(ErrorKind::load, "dim does not match the number of scales");
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::load, std::string("malformed model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ClassifierModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << model_to_json(model);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open model '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace vesselwave
