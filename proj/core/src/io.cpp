#include "pssm/io.hpp"

#include "pssm/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pssm {

namespace fs = std::filesystem;

fs::path resolve_output(const fs::path& path) {
    if (path.is_absolute()) return path;
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / path;
    return path;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto res = std::from_chars(first, s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const fs::path& path, std::vector<std::string>* header) {
    std::istringstream in(read_text(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto cells = split_csv(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        for (std::size_t i = 0; i < cells.size() && numeric; ++i) numeric = parse_double(cells[i], row[i]);
        if (!numeric) {
            if (rows.empty() && header && header->empty()) {
                *header = cells;
                continue;
            }
            if (rows.empty() && !header) continue;
            throw Error(ErrorCode::ParseError,
                        path.string() + ":" + std::to_string(line_no) + ": non-numeric entry");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::ParseError, path.string() + ": no numeric rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 24 + 64);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out += ',';
        out += header[j];
    }
    if (!header.empty()) out += '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

nlohmann::json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
    return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw Error(ErrorCode::ParseError, "expected a nonempty array of rows");
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto row = vector_from_json(j[static_cast<std::size_t>(i)]);
        if (row.size() != cols) throw Error(ErrorCode::ParseError, "ragged matrix rows");
        m.row(i) = row.transpose();
    }
    return m;
}

void write_dataset(const fs::path& path, const TrajectoryDataset& d) {
    std::vector<std::string> header{"t"};
    for (Eigen::Index j = 0; j < d.dimension(); ++j) header.push_back("x" + std::to_string(j + 1));
    Eigen::MatrixXd table(d.rows(), d.dimension() + 1);
    table.col(0) = d.times;
    table.rightCols(d.dimension()) = d.states;
    write_text(path, matrix_to_csv(table, header));

    nlohmann::json meta = {
        {"schema_version", kSchemaVersion},
        {"mu", d.mu},
        {"dt", d.dt},
        {"fixed_point", to_json(d.fixed_point)},
        {"provenance",
         {{"protocol", d.provenance.protocol},
          {"initial_condition", to_json(d.provenance.initial_condition)},
          {"seed", d.provenance.seed},
          {"discarded_rows", d.provenance.discarded_rows},
          {"discarded_fraction", d.provenance.discarded_fraction},
          {"settled", d.provenance.settled}}},
    };
    write_text(fs::path(path.string() + ".meta.json"), meta.dump(2) + "\n");
}

nlohmann::json to_json(const Poly2& p) {
    nlohmann::json out = nlohmann::json::object();
    const auto keys = monomials(p.min_degree(), p.max_degree());
    for (std::size_t j = 0; j < keys.size(); ++j)
        out[exponent_key(keys[j])] = to_json(Eigen::VectorXd(p.coeffs().col(static_cast<Eigen::Index>(j))));
    return out;
}

nlohmann::json to_json(const SsmExpansion& e) {
    nlohmann::json lambda = nlohmann::json::array();
    for (const auto& l : e.frame.lambda) lambda.push_back({l.real(), l.imag()});
    return {
        {"schema_version", kSchemaVersion},
        {"order", e.order},
        {"S_u", to_json(e.frame.S_u)},
        {"A_u", to_json(Eigen::MatrixXd(e.frame.A_u))},
        {"eigenvalues", lambda},
        {"W", to_json(e.manifold)},
        {"R", to_json(e.reduced)},
    };
}

TrajectoryDataset read_dataset(const fs::path& path) {
    std::vector<std::string> header;
    const Eigen::MatrixXd table = read_matrix_csv(path, &header);
    if (table.cols() < 2) throw Error(ErrorCode::ParseError, "trajectory CSV needs a time column and states");
    if (table.rows() < 2) throw Error(ErrorCode::TooShort, "trajectory CSV needs at least two rows");
    TrajectoryDataset d;
    d.times = table.col(0);
    d.states = table.rightCols(table.cols() - 1);
    d.dt = d.times[1] - d.times[0];
    d.fixed_point = Eigen::VectorXd::Zero(d.states.cols());
    const fs::path meta_path(path.string() + ".meta.json");
    if (fs::exists(meta_path)) {
        const auto meta = nlohmann::json::parse(read_text(meta_path));
        d.mu = meta.at("mu").get<double>();
        if (meta.contains("fixed_point")) d.fixed_point = vector_from_json(meta["fixed_point"]);
        if (meta.contains("provenance")) {
            const auto& p = meta["provenance"];
            d.provenance.protocol = p.value("protocol", "");
            if (p.contains("initial_condition")) d.provenance.initial_condition = vector_from_json(p["initial_condition"]);
            d.provenance.seed = p.value("seed", std::uint64_t{0});
            d.provenance.discarded_rows = p.value("discarded_rows", 0);
            d.provenance.discarded_fraction = p.value("discarded_fraction", 0.0);
            d.provenance.settled = p.value("settled", true);
        }
    }
    d.validate();
    return d;
}

}  // namespace pssm
