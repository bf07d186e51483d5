#include "jointdr/dr/serialize.hpp"

#include <string>

#include "jointdr/core/error.hpp"

namespace jointdr {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void check_envelope(const json& j, std::string_view kind) {
  if (!j.is_object() || j.value("format", "") != "jointdr.model") {
    throw InputError("not a jointdr model document");
  }
  if (j.value("version", 0) != kModelFormatVersion) {
    throw InputError("unsupported model format version " + j.value("version", json(0)).dump());
  }
  if (j.value("kind", "") != kind) {
    throw InputError("model kind is '" + j.value("kind", std::string()) + "', expected '" + std::string(kind) + "'");
  }
}

json grid_to_json(const ThresholdGrid& grid) {
  json j;
  j["points"] = std::vector<double>(grid.points().begin(), grid.points().end());
  if (const auto* q = std::get_if<EmpiricalQuantiles>(&grid.source())) {
    j["source"] = {{"kind", "empirical_quantiles"}, {"probs", q->probs}};
  } else {
    j["source"] = {{"kind", "explicit"}};
  }
  return j;
}

ThresholdGrid grid_from_json(const json& j) {
  auto points = j.at("points").get<std::vector<double>>();
  const auto& src = j.at("source");
  if (src.at("kind") == "empirical_quantiles") {
    return ThresholdGrid::from_points(std::move(points),
                                      EmpiricalQuantiles{src.at("probs").get<std::vector<double>>()});
  }
  return ThresholdGrid::from_points(std::move(points));
}

json design_to_json(const DesignSpec& design) {
  json pairs = json::array();
  for (auto [a, b] : design.interactions) pairs.push_back({a, b});
  return {{"base_covariates", design.base_covariates},
          {"interactions", pairs},
          {"z_encoding", to_string(design.z_encoding)},
          {"y_sample", to_string(design.y_sample)}};
}

DesignSpec design_from_json(const json& j) {
  DesignSpec d;
  d.base_covariates = j.at("base_covariates").get<std::vector<std::size_t>>();
  for (const auto& p : j.at("interactions")) {
    d.interactions.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
  }
  d.z_encoding = z_encoding_from_string(j.at("z_encoding").get<std::string>());
  d.y_sample = y_sample_from_string(j.value("y_sample", std::string("all")));
  return d;
}

json to_json(const DrModel& model) {
  const auto& p = model.path();
  json j;
  j["format"] = "jointdr.model";
  j["version"] = kModelFormatVersion;
  j["kind"] = "dr";
  j["links"] = {{"y", to_string(model.links().y.kind())}, {"z", to_string(model.links().z.kind())}};
  j["design"] = design_to_json(model.design());
  j["covariate_count"] = model.covariate_count();
  j["z_support"] = model.z_support();
  j["dummy_levels"] = model.dummy_levels();
  j["z_columns"] = p.z_columns;
  j["y_grid"] = grid_to_json(p.y_grid);
  json yc = json::array(), ys = json::array(), zc = json::array(), zs = json::array();
  for (std::size_t t = 0; t < p.y_coef.size(); ++t) {
    yc.push_back(vec_to_json(p.y_coef[t]));
    ys.push_back(to_string(p.y_status[t]));
  }
  for (std::size_t t = 0; t < p.z_coef.size(); ++t) {
    zc.push_back(vec_to_json(p.z_coef[t]));
    zs.push_back(to_string(p.z_status[t]));
  }
  j["y_coef"] = std::move(yc);
  j["y_status"] = std::move(ys);
  j["z_coef"] = std::move(zc);
  j["z_status"] = std::move(zs);
  return j;
}

DrModel dr_model_from_json(const json& j) {
  check_envelope(j, "dr");
  try {
    CoefficientPath p{.y_grid = grid_from_json(j.at("y_grid"))};
    p.z_columns = j.at("z_columns").get<std::size_t>();
    for (const auto& c : j.at("y_coef")) p.y_coef.push_back(vec_from_json(c));
    for (const auto& s : j.at("y_status")) p.y_status.push_back(fit_status_from_string(s.get<std::string>()));
    for (const auto& c : j.at("z_coef")) p.z_coef.push_back(vec_from_json(c));
    for (const auto& s : j.at("z_status")) p.z_status.push_back(fit_status_from_string(s.get<std::string>()));
    auto support = j.at("z_support").get<std::vector<int>>();
    p.z_grid.assign(support.begin(), support.empty() ? support.end() : support.end() - 1);
    DrLinks links{LinkFunction(link_kind_from_string(j.at("links").at("y").get<std::string>())),
                  LinkFunction(link_kind_from_string(j.at("links").at("z").get<std::string>()))};
    return DrModel(std::move(p), links, std::move(support), design_from_json(j.at("design")),
                   j.at("covariate_count").get<std::size_t>(), j.at("dummy_levels").get<std::vector<int>>());
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed DR model document: ") + e.what());
  }
}

}  // namespace jointdr
