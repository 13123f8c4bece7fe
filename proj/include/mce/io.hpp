#pragma once

// Dataset CSV (`y,x1,...,xn`, one row per sample), its JSON sidecar with the
// generation record, and the round-trippable number format used by every CSV
// this project writes.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mce/dataset.hpp"

namespace mce {

class IoError : public Error {
public:
    using Error::Error;
};

/// 17 significant digits; "inf", "-inf" and "nan" for non-finite values.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string{};
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const {
        std::string out;
        const auto put = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        put(header);
        for (const auto& r : rows) put(r);
        return out;
    }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        std::string_view cell = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
        while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
        cells.emplace_back(cell);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

inline double parse_number(const std::string& s, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw IoError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
    return v;
}

inline std::string dataset_csv(const RegressionDataset& ds) {
    CsvTable table;
    table.header.push_back("y");
    for (std::size_t i = 0; i < ds.dim(); ++i) table.header.push_back("x" + std::to_string(i + 1));
    for (std::size_t t = 0; t < ds.size(); ++t) {
        std::vector<std::string> row{format_number(ds.y[t])};
        for (double v : ds.x.row(t)) row.push_back(format_number(v));
        table.rows.push_back(std::move(row));
    }
    return table.to_string();
}

/// Parses `y,x1,...,xn`. Only the regressors and outputs are read; see
/// read_sidecar for the rest.
inline RegressionDataset parse_dataset_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw IoError("empty dataset file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "y") throw IoError("dataset header must be y,x1,...,xn");
    for (std::size_t i = 1; i < header.size(); ++i)
        if (header[i] != "x" + std::to_string(i)) throw IoError("dataset header must be y,x1,...,xn");
    const std::size_t n = header.size() - 1;

    std::vector<double> y;
    std::vector<double> xs;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != n + 1)
            throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(n + 1) + " fields");
        y.push_back(parse_number(cells[0], line_no));
        for (std::size_t i = 1; i <= n; ++i) xs.push_back(parse_number(cells[i], line_no));
    }
    if (y.empty()) throw EmptyDataset();

    RegressionDataset ds;
    ds.x = Matrix(y.size(), n);
    for (std::size_t t = 0; t < y.size(); ++t)
        for (std::size_t i = 0; i < n; ++i) ds.x(t, i) = xs[t * n + i];
    ds.y = std::move(y);
    return ds;
}

inline std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

inline nlohmann::json sidecar_json(const RegressionDataset& ds) {
    nlohmann::json j;
    j["seed"] = ds.seed;
    if (ds.theta_true) j["theta_true"] = *ds.theta_true;
    if (ds.v) j["v"] = *ds.v;
    if (ds.outlier_mask) j["outlier_mask"] = *ds.outlier_mask;
    if (ds.noise) {
        const auto& nm = *ds.noise;
        j["noise"] = {{"epsilon", nm.epsilon},         {"outlier_frac", nm.outlier_frac},
                      {"outlier_mean", nm.outlier_mean}, {"outlier_sd", nm.outlier_sd},
                      {"eiv_sd", nm.eiv_sd},             {"symmetric_outliers", nm.symmetric_outliers}};
    }
    return j;
}

inline void apply_sidecar(RegressionDataset& ds, const nlohmann::json& j) {
    try {
        if (j.contains("seed")) ds.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("theta_true")) ds.theta_true = j.at("theta_true").get<Vector>();
        if (j.contains("v")) ds.v = j.at("v").get<Vector>();
        if (j.contains("outlier_mask")) ds.outlier_mask = j.at("outlier_mask").get<std::vector<bool>>();
        if (j.contains("noise")) {
            const auto& nj = j.at("noise");
            NoiseModel nm;
            nm.epsilon = nj.value("epsilon", 0.0);
            nm.outlier_frac = nj.value("outlier_frac", 0.0);
            nm.outlier_mean = nj.value("outlier_mean", 50.0);
            nm.outlier_sd = nj.value("outlier_sd", 10.0);
            nm.eiv_sd = nj.value("eiv_sd", 0.0);
            nm.symmetric_outliers = nj.value("symmetric_outliers", false);
            ds.noise = nm;
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed sidecar: ") + e.what());
    }
    ds.validate();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline void write_dataset(const std::string& path, const RegressionDataset& ds) {
    write_text_file(path, dataset_csv(ds));
    write_text_file(sidecar_path(path), sidecar_json(ds).dump(2) + "\n");
}

/// Reads a dataset CSV and, when present, its sidecar.
inline RegressionDataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    RegressionDataset ds = parse_dataset_csv(in);
    std::ifstream meta(sidecar_path(path), std::ios::binary);
    if (meta) {
        nlohmann::json j;
        try {
            meta >> j;
        } catch (const nlohmann::json::exception& e) {
            throw IoError(std::string("malformed sidecar: ") + e.what());
        }
        apply_sidecar(ds, j);
    }
    ds.validate();
    return ds;
}

}  // namespace mce
