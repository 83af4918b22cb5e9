#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

#include "specbal/sym_matrix.hpp"

namespace specbal {

inline constexpr const char* kToolVersion = "0.1.0";

// Matrix file format: {"dim": d, "matrices": [[[row-major d x d]], ...]},
// all entries finite and positive definite. Near-symmetric inputs
// (|m_ij - m_ji| <= 1e-9 * max|m|) are symmetrized; anything worse is an
// InputError naming the matrix index and entry.
MatrixSet load_matrix_set(const std::string& path);
MatrixSet parse_matrix_set(const nlohmann::json& j);

nlohmann::json matrix_set_to_json(const MatrixSet& set);
void save_matrix_set(const MatrixSet& set, const std::string& path);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

// FNV-1a 64-bit over raw file bytes, hex encoded. Used in run manifests.
std::string file_hash(const std::string& path);

// Provenance block embedded in every JSON artifact: command name, config
// echo, seed, tool version, input hashes, ISO-8601 timestamp.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config_echo,
                             std::uint64_t seed,
                             const std::vector<std::string>& input_paths);

void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

}  // namespace specbal
