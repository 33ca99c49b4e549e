#include "folcomp/errors.hpp"
#include "folcomp/model.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace folcomp
{

namespace
{

using nlohmann::json;

std::vector<int> read_indices(const json & j, const char * field, int dim)
{
  std::vector<int> out;
  for (const auto & v : j) {
    const int i = v.get<int>();
    if (i < 1 || i > dim) { throw SpecError(std::string(field) + " index out of range: " + std::to_string(i)); }
    out.push_back(i - 1);
  }
  return out;
}

json write_indices(const std::vector<int> & idx)
{
  json out = json::array();
  for (int i : idx) { out.push_back(i + 1); }
  return out;
}

}  // namespace

ModelSpec parse_model_spec(const std::string & json_text)
{
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error & e) {
    throw SpecError(std::string("model file is not valid JSON: ") + e.what());
  }
  ModelSpec spec;
  try {
    spec.name = j.value("name", std::string("unnamed"));
    spec.dim = j.at("dim").get<int>();
    if (spec.dim <= 0 || spec.dim > kMaxDim) { throw SpecError("dim out of range: " + std::to_string(spec.dim)); }
    if (j.contains("basis_labels")) { spec.basis_labels = j["basis_labels"].get<std::vector<std::string>>(); }
    for (const auto & sc : j.value("structure_constants", json::array())) {
      if (!sc.is_array() || sc.size() != 4) { throw SpecError("structure constant must be [i, j, k, c]"); }
      const int i = sc[0].get<int>(), jj = sc[1].get<int>(), k = sc[2].get<int>();
      if (i < 1 || i > spec.dim || jj < 1 || jj > spec.dim || k < 1 || k > spec.dim) {
        throw SpecError("structure constant index out of range");
      }
      spec.structure_constants.push_back({i - 1, jj - 1, k - 1, sc[3].get<double>()});
    }
    spec.horizontal_indices = read_indices(j.at("horizontal_indices"), "horizontal_indices", spec.dim);
    spec.vertical_indices = read_indices(j.value("vertical_indices", json::array()), "vertical_indices", spec.dim);
    if (j.contains("metric") && !j["metric"].is_null()) {
      const auto & rows = j["metric"];
      if (static_cast<int>(rows.size()) != spec.dim) { throw SpecError("metric must have dim rows"); }
      spec.metric = Mat::Zero(spec.dim, spec.dim);
      for (int r = 0; r < spec.dim; ++r) {
        if (static_cast<int>(rows[r].size()) != spec.dim) { throw SpecError("metric must have dim columns"); }
        for (int c = 0; c < spec.dim; ++c) { spec.metric(r, c) = rows[r][c].get<double>(); }
      }
    }
    if (j.contains("grading") && !j["grading"].is_null()) {
      std::vector<std::vector<int>> layers;
      for (const auto & layer : j["grading"]) { layers.push_back(read_indices(layer, "grading", spec.dim)); }
      spec.grading = layers;
    }
    spec.epsilon = j.value("epsilon", 1.0);
  } catch (const json::exception & e) {
    throw SpecError(std::string("malformed model file: ") + e.what());
  }
  return spec;
}

ModelSpec load_model_spec(const std::string & path)
{
  std::ifstream in(path);
  if (!in) { throw SpecError("cannot open model file: " + path); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_spec(ss.str());
}

std::string model_spec_to_json(const ModelSpec & spec)
{
  json j;
  j["name"] = spec.name;
  j["dim"] = spec.dim;
  j["basis_labels"] = spec.basis_labels;
  json sc = json::array();
  for (const auto & c : spec.structure_constants) { sc.push_back({c.i + 1, c.j + 1, c.k + 1, c.c}); }
  j["structure_constants"] = sc;
  j["horizontal_indices"] = write_indices(spec.horizontal_indices);
  j["vertical_indices"] = write_indices(spec.vertical_indices);
  if (spec.metric.size() > 0) {
    json rows = json::array();
    for (int r = 0; r < spec.metric.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < spec.metric.cols(); ++c) { row.push_back(spec.metric(r, c)); }
      rows.push_back(row);
    }
    j["metric"] = rows;
  }
  if (spec.grading) {
    json layers = json::array();
    for (const auto & layer : *spec.grading) { layers.push_back(write_indices(layer)); }
    j["grading"] = layers;
  }
  j["epsilon"] = spec.epsilon;
  return j.dump(2);
}

}  // namespace folcomp
