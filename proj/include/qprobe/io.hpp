#pragma once

// Plain-text output helpers: 12-significant-digit numbers, CSV tables, JSON
// values, and the ReadoutGrid CSV reader used by `certify --grid-file`.

#include "qprobe/readout.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprobe::io {

using Json = nlohmann::ordered_json;

/// %.12g with negative zero folded to 0; infinities as inf / -inf.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    std::string out(buf);
    if (out == "-0") return "0";
    return out;
}

/// Rounded to 12 significant digits; non-finite values become null.
inline Json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    const double rounded = std::stod(format_number(x));
    return rounded == 0.0 ? 0.0 : rounded;
}

inline Json json_number(const std::optional<double>& x) { return x ? json_number(*x) : Json(nullptr); }

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : width_(header.size()) { add(header); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_number(v));
        add(cells);
    }

    const std::string& str() const { return text_; }

private:
    void add(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw std::logic_error("CSV row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }

    std::size_t width_;
    std::string text_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Reads a `theta,n,p` table back into a grid. N is inferred from the largest
/// |n|; theta values must form a uniform grid over [0, 2 pi).
inline ReadoutGrid parse_grid_csv(const std::string& text, Provenance provenance) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "theta,n,p") throw std::invalid_argument("grid CSV must start with theta,n,p");
    std::map<double, std::map<int, double>> cells;  // theta -> (2n -> p)
    int max_twice = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
            throw std::invalid_argument("grid CSV line " + std::to_string(line_no) + " is malformed");
        double theta, n, p;
        try {
            theta = std::stod(a);
            n = std::stod(b);
            p = std::stod(c);
        } catch (const std::exception&) {
            throw std::invalid_argument("grid CSV line " + std::to_string(line_no) + " has a non-numeric cell");
        }
        const int twice = static_cast<int>(std::lround(2.0 * n));
        if (std::abs(2.0 * n - twice) > 1e-9) throw std::invalid_argument("n must be a half-integer");
        if (!cells[theta].emplace(twice, p).second)
            throw std::invalid_argument("duplicate cell at line " + std::to_string(line_no));
        max_twice = std::max(max_twice, std::abs(twice));
    }
    const int n_qubits = max_twice;
    if (n_qubits < 1 || cells.empty()) throw std::invalid_argument("grid CSV has no data");
    ReadoutGrid grid{n_qubits, {}, RealMatrix(n_qubits + 1, static_cast<Eigen::Index>(cells.size())), provenance};
    int j = 0;
    for (const auto& [theta, column] : cells) {
        if (static_cast<int>(column.size()) != n_qubits + 1)
            throw std::invalid_argument("grid CSV column at theta " + format_number(theta) + " is incomplete");
        grid.theta.push_back(theta);
        for (const auto& [twice, p] : column) {
            if ((n_qubits - twice) % 2 != 0) throw std::invalid_argument("n values inconsistent with N");
            grid.p((n_qubits - twice) / 2, j) = p;
        }
        ++j;
    }
    const int nt = grid.n_theta();
    for (int i = 0; i < nt; ++i)
        if (std::abs(grid.theta[i] - 2.0 * pi * i / nt) > 1e-9)
            throw std::invalid_argument("theta values do not form a uniform grid on [0, 2 pi)");
    if (nt < 2 * n_qubits + 2) throw std::invalid_argument("grid needs at least 2N+2 theta points");
    grid.validate();
    return grid;
}

}  // namespace qprobe::io
