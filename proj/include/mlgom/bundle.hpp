#pragma once

#include "mlgom/estimators.hpp"
#include "mlgom/modularity.hpp"
#include "mlgom/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace mlgom {

/// On-disk dataset: manifest.json (dimensions, M, seed, truth when simulated)
/// plus layer_1.csv .. layer_L.csv holding the N x J integer responses.
struct DatasetBundle {
  ResponseTensor responses;
  std::optional<ModelParams<double>> truth;
  nlohmann::json meta = nlohmann::json::object();
};

void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle);
DatasetBundle read_bundle(const std::filesystem::path& dir);

IntMatrix read_int_csv(const std::filesystem::path& path);
void write_int_csv(const std::filesystem::path& path, const IntMatrix& m);

nlohmann::json matrix_to_json(const Matrix<double>& m);
Matrix<double> matrix_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json to_json(const EstimationResult<double>& r, Method method);
nlohmann::json to_json(const ModularityReport& r, Method method);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace mlgom
