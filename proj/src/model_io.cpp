#include "spm/model_io.hpp"

#include <fstream>

namespace spm::phmm {

namespace {

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const nlohmann::json& arr, const char* what) {
  if (!arr.is_array()) throw IoError(std::string(what) + ": expected an array");
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

Matrix matrix_from_json(const nlohmann::json& arr, const char* what) {
  if (!arr.is_array() || arr.empty()) {
    throw IoError(std::string(what) + ": expected a non-empty array of rows");
  }
  const auto rows = arr.size();
  const auto cols = arr[0].size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (arr[i].size() != cols) {
      throw IoError(std::string(what) + ": ragged rows");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          arr[i][j].get<double>();
    }
  }
  return m;
}

}  // namespace

nlohmann::json model_to_json(const ModelParams& model) {
  nlohmann::json doc;
  doc["n_states"] = model.n_states();
  doc["p"] = model.dim();
  doc["initial"] = vector_to_json(model.initial);
  doc["transition"] = matrix_to_json(model.transition);
  nlohmann::json means = nlohmann::json::array();
  for (const auto& mu : model.means) means.push_back(vector_to_json(mu));
  doc["means"] = std::move(means);
  doc["covariance"] = matrix_to_json(model.covariance);
  return doc;
}

ModelParams model_from_json(const nlohmann::json& doc) {
  for (const char* key : {"n_states", "p", "initial", "transition", "means", "covariance"}) {
    if (!doc.contains(key)) {
      throw IoError(std::string("model document missing field '") + key + "'");
    }
  }
  ModelParams model;
  model.initial = vector_from_json(doc["initial"], "initial");
  model.transition = matrix_from_json(doc["transition"], "transition");
  for (const auto& mu : doc["means"]) {
    model.means.push_back(vector_from_json(mu, "means"));
  }
  model.covariance = matrix_from_json(doc["covariance"], "covariance");
  const int n = doc["n_states"].get<int>();
  const int p = doc["p"].get<int>();
  if (model.n_states() != n || model.dim() != p) {
    throw IoError("model document is inconsistent with its declared shape");
  }
  return model;
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << model_to_json(model).dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace spm::phmm
