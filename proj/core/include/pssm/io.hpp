#pragma once

#include "pssm/cohomology.hpp"
#include "pssm/poly2.hpp"
#include "pssm/systems.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pssm {

inline constexpr const char* kOutputRootEnv = "PSSM_OUTPUT_ROOT";
inline constexpr int kSchemaVersion = 1;

/// Relative output paths are placed under $PSSM_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: parent directories are created.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Numeric CSV; a first line that does not parse as numbers is treated as a header.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path, std::vector<std::string>* header = nullptr);
std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header = {});

/// `t,x1,...,xN` plus a `<path>.meta.json` sidecar holding mu, dt, the fixed
/// point and the provenance.
void write_dataset(const std::filesystem::path& path, const TrajectoryDataset& data);
TrajectoryDataset read_dataset(const std::filesystem::path& path);

nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

/// {"k1,k2": [coefficient vector], ...}
nlohmann::json to_json(const Poly2& p);
/// Expansion coefficients in the frame's real reduced coordinates, plus the frame.
nlohmann::json to_json(const SsmExpansion& e);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace pssm
