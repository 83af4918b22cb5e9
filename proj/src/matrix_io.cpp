#include "specbal/matrix_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "specbal/errors.hpp"

namespace specbal {

namespace {

using nlohmann::json;

Eigen::MatrixXd matrix_from_rows(const json& rows, int index) {
    if (!rows.is_array() || rows.empty()) {
        std::ostringstream os;
        os << "matrix " << index << " must be a nonempty array of rows";
        throw InputError(os.str());
    }
    const int d = static_cast<int>(rows.size());
    Eigen::MatrixXd m(d, d);
    for (int r = 0; r < d; ++r) {
        const json& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != d) {
            std::ostringstream os;
            os << "matrix " << index << " row " << r << " must have " << d << " entries";
            throw InputError(os.str());
        }
        for (int c = 0; c < d; ++c) {
            const json& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_number()) {
                std::ostringstream os;
                os << "matrix " << index << " entry (" << r << "," << c
                   << ") is not a number";
                throw InputError(os.str());
            }
            m(r, c) = cell.get<double>();
            if (!std::isfinite(m(r, c))) {
                std::ostringstream os;
                os << "matrix " << index << " entry (" << r << "," << c << ") is not finite";
                throw InputError(os.str());
            }
        }
    }
    return m;
}

void check_symmetry(const Eigen::MatrixXd& m, int index) {
    const double scale = m.cwiseAbs().maxCoeff();
    const double tol = 1e-9 * scale;
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = r + 1; c < m.cols(); ++c) {
            if (std::abs(m(r, c) - m(c, r)) > tol) {
                std::ostringstream os;
                os << "matrix " << index << " is asymmetric at (" << r << "," << c
                   << "): " << m(r, c) << " vs " << m(c, r)
                   << " (allowed difference " << tol << ")";
                throw InputError(os.str());
            }
        }
    }
}

}  // namespace

MatrixSet parse_matrix_set(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("matrices")) {
        throw InputError("matrix file must be an object with \"dim\" and \"matrices\"");
    }
    if (!j["dim"].is_number_integer()) throw InputError("\"dim\" must be an integer");
    const int d = j["dim"].get<int>();
    if (d < 1) throw InputError("\"dim\" must be positive");
    const json& ms = j["matrices"];
    if (!ms.is_array() || ms.empty()) {
        throw InputError("\"matrices\" must be a nonempty array");
    }

    std::vector<SymMatrix> members;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        Eigen::MatrixXd m = matrix_from_rows(ms[i], static_cast<int>(i));
        if (m.rows() != d) {
            std::ostringstream os;
            os << "matrix " << i << " is " << m.rows() << "x" << m.cols()
               << " but \"dim\" is " << d;
            throw InputError(os.str());
        }
        check_symmetry(m, static_cast<int>(i));
        members.emplace_back(m);
        if (!members.back().positive_definite()) {
            std::ostringstream os;
            os << "matrix " << i << " is not positive definite";
            throw InputError(os.str());
        }
    }
    return MatrixSet(std::move(members));
}

MatrixSet load_matrix_set(const std::string& path) {
    return parse_matrix_set(read_json_file(path));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) { return matrix_from_rows(j, 0); }

json matrix_set_to_json(const MatrixSet& set) {
    json j;
    j["dim"] = set.dim();
    json ms = json::array();
    for (int i = 0; i < set.count(); ++i) ms.push_back(matrix_to_json(set[i].m()));
    j["matrices"] = std::move(ms);
    return j;
}

void save_matrix_set(const MatrixSet& set, const std::string& path) {
    write_json_file(matrix_set_to_json(set), path);
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file for hashing: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

json make_manifest(const std::string& command, const json& config_echo,
                   std::uint64_t seed, const std::vector<std::string>& input_paths) {
    json m;
    m["command"] = command;
    m["config"] = config_echo;
    m["seed"] = seed;
    m["version"] = kToolVersion;
    json inputs = json::array();
    for (const std::string& p : input_paths) {
        inputs.push_back({{"path", p}, {"fnv1a64", file_hash(p)}});
    }
    m["inputs"] = std::move(inputs);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    m["timestamp"] = stamp;
    return m;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InputError("malformed JSON in " + path);
    return j;
}

}  // namespace specbal
