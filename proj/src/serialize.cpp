#include "opau/serialize.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace opau {

using nlohmann::json;

json to_json(const OpauParams& params) {
  params.validate();
  json doc;
  doc["basis"] = to_string(params.basis);
  doc["k"] = params.k;
  doc["l"] = params.l;
  doc["c"] = std::vector<double>(params.c.data(), params.c.data() + params.c.size());
  doc["d"] = std::vector<double>(params.d.data(), params.d.data() + params.d.size());
  doc["safe"] = params.safe;
  return doc;
}

OpauParams opau_params_from_json(const json& doc) {
  OpauParams params;
  params.basis = basis_from_string(doc.at("basis").get<std::string>());
  params.k = doc.at("k").get<int>();
  params.l = doc.at("l").get<int>();
  const auto c = doc.at("c").get<std::vector<double>>();
  const auto d = doc.at("d").get<std::vector<double>>();
  params.c = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  params.d = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
  params.safe = doc.at("safe").get<bool>();
  params.validate();
  return params;
}

void save_opau_params(const std::filesystem::path& path, const OpauParams& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << to_json(params).dump(2) << '\n';
}

OpauParams load_opau_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  json doc;
  in >> doc;
  return opau_params_from_json(doc);
}

}  // namespace opau
