#ifndef FREEMAX_IO_HPP
#define FREEMAX_IO_HPP

// CSV and JSON formats: CDF tables, sample files, law specs, partitions,
// dense matrices and eigenvalue dumps, report payloads.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "freemax/attraction.hpp"
#include "freemax/cdf.hpp"
#include "freemax/extreme_laws.hpp"
#include "freemax/free_poisson_lab.hpp"

namespace freemax::io {

using nlohmann::json;

/// Shortest representation that reads back to the same double.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view text, std::string_view where) {
    const auto s = trim(text);
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    double x = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), x);
    require(!s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::parse,
            std::string(where) + ": not a number: '" + std::string(s) + "'");
    return x;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write " + path.string());
    out << text;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::io, "write failed: " + path.string());
}

/// Non-empty lines split on commas, fields trimmed.
inline std::vector<std::vector<std::string>> csv_rows(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(pos, end - pos));
        if (!line.empty()) {
            std::vector<std::string> fields;
            std::size_t a = 0;
            while (true) {
                const auto c = line.find(',', a);
                fields.emplace_back(trim(line.substr(a, c == std::string_view::npos ? line.size() - a : c - a)));
                if (c == std::string_view::npos) break;
                a = c + 1;
            }
            rows.push_back(std::move(fields));
        }
        pos = end + 1;
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CDF tables: header `x,F`

inline std::string cdf_table_csv(const Cdf& f, std::span<const double> grid) {
    std::string out = "x,F\n";
    for (double x : grid) out += format_number(x) + "," + format_number(f(x)) + "\n";
    return out;
}

inline void emit_cdf_table(const Cdf& f, std::span<const double> grid, const std::filesystem::path& path) {
    write_text(path, cdf_table_csv(f, grid));
}

inline Cdf parse_cdf_table(std::string_view text) {
    const auto rows = csv_rows(text);
    require(!rows.empty() && rows[0].size() == 2 && rows[0][0] == "x" && rows[0][1] == "F", ErrorCode::parse,
            "CDF table: header must be 'x,F'");
    std::vector<double> xs, fs;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        require(rows[i].size() == 2, ErrorCode::parse, "CDF table: row " + std::to_string(i) + " needs 2 fields");
        xs.push_back(parse_number(rows[i][0], "CDF table"));
        fs.push_back(parse_number(rows[i][1], "CDF table"));
        require(std::isfinite(xs.back()), ErrorCode::parse, "CDF table: x must be finite");
        require(fs.back() >= 0.0 && fs.back() <= 1.0, ErrorCode::parse, "CDF table: F outside [0, 1]");
        if (i > 1) {
            require(xs[i - 1] > xs[i - 2], ErrorCode::parse, "CDF table: x must be strictly increasing");
            require(fs[i - 1] >= fs[i - 2], ErrorCode::parse, "CDF table: F must be nondecreasing");
        }
    }
    require(!xs.empty(), ErrorCode::parse, "CDF table: no rows");
    return tabulated_cdf(std::move(xs), std::move(fs));
}

inline Cdf read_cdf_table(const std::filesystem::path& path) { return parse_cdf_table(read_text(path)); }

// ---------------------------------------------------------------------------
// Samples: one number per line, or CSV with a `value` column

inline std::vector<double> parse_samples(std::string_view text) {
    const auto rows = csv_rows(text);
    require(!rows.empty(), ErrorCode::parse, "samples: empty file");
    std::size_t column = 0;
    std::size_t first = 0;
    const auto& head = rows[0];
    const auto named = std::find(head.begin(), head.end(), "value");
    if (named != head.end()) {
        column = static_cast<std::size_t>(named - head.begin());
        first = 1;
    } else {
        require(head.size() == 1, ErrorCode::parse, "samples: multi-column file without a 'value' column");
    }
    std::vector<double> out;
    for (std::size_t i = first; i < rows.size(); ++i) {
        require(column < rows[i].size(), ErrorCode::parse, "samples: short row " + std::to_string(i));
        out.push_back(parse_number(rows[i][column], "samples"));
        require(std::isfinite(out.back()), ErrorCode::parse, "samples: non-finite value");
    }
    require(!out.empty(), ErrorCode::parse, "samples: no values");
    return out;
}

inline std::vector<double> read_samples(const std::filesystem::path& path) { return parse_samples(read_text(path)); }

// ---------------------------------------------------------------------------
// JSON documents

inline json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, std::string(what) + ": " + e.what());
    }
}

inline double json_number(const json& j, std::string_view what) {
    require(j.is_number(), ErrorCode::parse, std::string(what) + " must be a number");
    return j.get<double>();
}

/// {kind, shape, location, scale}; everything but kind is optional.
inline LawSpec law_spec_from_json(const json& j) {
    require(j.is_object(), ErrorCode::parse, "law spec must be a JSON object");
    for (const auto& [key, value] : j.items())
        require(key == "kind" || key == "shape" || key == "location" || key == "scale", ErrorCode::parse,
                "law spec: unknown field '" + key + "'");
    require(j.contains("kind") && j["kind"].is_string(), ErrorCode::parse, "law spec: 'kind' must be a string");
    LawSpec spec;
    spec.kind = parse_law_kind(j["kind"].get<std::string>());
    if (j.contains("shape") && !j["shape"].is_null()) spec.shape = json_number(j["shape"], "law spec: shape");
    if (j.contains("location")) spec.location = json_number(j["location"], "law spec: location");
    if (j.contains("scale")) spec.scale = json_number(j["scale"], "law spec: scale");
    return spec;
}

inline LawSpec parse_law_spec(std::string_view text) { return law_spec_from_json(parse_json(text, "law spec")); }

inline json to_json(const LawSpec& s) {
    json j = {{"kind", std::string(to_string(s.kind))}, {"location", s.location}, {"scale", s.scale}};
    j["shape"] = s.shape ? json(*s.shape) : json(nullptr);
    return j;
}

/// {atoms: [{id, mass}]}; ids may be strings or integers.
inline Partition partition_from_json(const json& j) {
    require(j.is_object() && j.contains("atoms") && j["atoms"].is_array(), ErrorCode::parse,
            "partition: expected {\"atoms\": [...]}");
    std::vector<Atom> atoms;
    for (const auto& a : j["atoms"]) {
        require(a.is_object() && a.contains("id") && a.contains("mass"), ErrorCode::parse,
                "partition: each atom needs id and mass");
        std::string id;
        if (a["id"].is_string())
            id = a["id"].get<std::string>();
        else if (a["id"].is_number_integer())
            id = std::to_string(a["id"].get<long long>());
        else
            throw Error(ErrorCode::parse, "partition: id must be a string or an integer");
        atoms.push_back({id, json_number(a["mass"], "partition: mass")});
    }
    return Partition(std::move(atoms));
}

inline Partition read_partition(const std::filesystem::path& path) {
    return partition_from_json(parse_json(read_text(path), "partition " + path.string()));
}

// ---------------------------------------------------------------------------
// Matrices

inline Eigen::MatrixXd parse_matrix_csv(std::string_view text) {
    const auto rows = csv_rows(text);
    require(!rows.empty(), ErrorCode::parse, "matrix: empty file");
    const auto cols = rows[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == cols, ErrorCode::parse, "matrix: ragged row " + std::to_string(i));
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = parse_number(rows[i][k], "matrix");
    }
    return m;
}

inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) { return parse_matrix_csv(read_text(path)); }

inline std::string matrix_csv(const Eigen::MatrixXd& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) out += (k ? "," : "") + format_number(m(i, k));
        out += "\n";
    }
    return out;
}

inline std::string eigenvalues_csv(const Eigen::VectorXd& values) {
    std::string out = "index,lambda\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) out += std::to_string(i) + "," + format_number(values(i)) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Report payloads

inline json to_json(const ConvergenceRow& r) {
    return {{"n", r.n}, {"a_n", r.a_n}, {"b_n", r.b_n}, {"sup_distance", r.sup_distance}};
}

inline json to_json(const GpdFit& f) {
    return {{"gamma_hat", f.gamma_hat},
            {"sigma_hat", f.sigma_hat},
            {"n_exceedances", f.n_exceedances},
            {"log_likelihood", f.log_likelihood}};
}

inline json to_json(const BdhRow& r) { return {{"u", r.u}, {"sigma_u", r.sigma_u}, {"sup_distance", r.sup_distance}}; }

inline json to_json(const SubsetRecord& r) {
    return {{"subset", r.subset.to_string()},
            {"N", r.n},
            {"tau_Y", r.tau_y},
            {"expected", r.expected},
            {"join_additivity_ok", r.join_additivity_ok},
            {"ks_distance", r.ks_distance},
            {"mu", r.mu},
            {"mu_N", r.mu_n},
            {"norm_gap", r.norm_gap},
            {"tau_trials", r.tau_trials}};
}

inline json to_json(const ProcessReport& r) {
    json records = json::array();
    for (const auto& rec : r.records) records.push_back(to_json(rec));
    return {{"records", records}, {"warnings", r.warnings}};
}

/// FNV-1a, 64-bit.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace freemax::io

#endif  // FREEMAX_IO_HPP
