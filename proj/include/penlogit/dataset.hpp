#pragma once

// Dataset ingestion, validation, and covariate standardization.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace penlogit {

enum class Standardize { None, UnitVariance, GelmanBinaryRange };

struct Standardization {
    Standardize kind = Standardize::None;
    Eigen::VectorXd centers; // length K
    Eigen::VectorXd scales;  // length K, all > 0
};

struct Dataset {
    Eigen::VectorXd y;               // binary responses, length N
    Eigen::MatrixXd X;               // N x K covariates
    std::vector<std::string> names;  // K column labels
    std::vector<std::string> warnings;

    int n() const { return static_cast<int>(y.size()); }
    int k() const { return static_cast<int>(X.cols()); }

    void validate() const {
        if (y.size() < 1) throw std::invalid_argument("dataset: N must be >= 1");
        if (X.cols() < 1) throw std::invalid_argument("dataset: K must be >= 1");
        if (X.rows() != y.size()) throw std::invalid_argument("dataset: X/y row mismatch");
        for (int i = 0; i < y.size(); ++i)
            if (y[i] != 0.0 && y[i] != 1.0)
                throw std::invalid_argument("dataset: non-binary response");
        if (!X.allFinite()) throw std::invalid_argument("dataset: non-finite covariate value");
        std::set<std::string> uniq(names.begin(), names.end());
        if (names.size() != static_cast<std::size_t>(X.cols()) || uniq.size() != names.size())
            throw std::invalid_argument("dataset: column labels must be unique, one per column");
    }
};

// Design matrix with a leading constant-1 intercept column.
inline Eigen::MatrixXd design_matrix(const Dataset& d) {
    Eigen::MatrixXd Z(d.X.rows(), d.X.cols() + 1);
    Z.col(0).setOnes();
    Z.rightCols(d.X.cols()) = d.X;
    return Z;
}

namespace detail {
inline double parse_cell(const std::string& s, int line_no) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw std::invalid_argument("csv: non-numeric cell '" + s + "' on line " +
                                    std::to_string(line_no));
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && cell[b] == ' ') ++b;
        out.push_back(cell.substr(b));
    }
    return out;
}
} // namespace detail

// Comma-delimited file with a header row; the response column is removed
// from the covariate block and must be binary.
inline Dataset load_csv(const std::string& path, const std::string& response_column) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file");
    const auto header = detail::split_csv_line(line);
    int ycol = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == response_column) ycol = static_cast<int>(j);
    if (ycol < 0)
        throw std::invalid_argument("csv: response column '" + response_column + "' not found");

    std::vector<double> yv;
    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("csv: wrong cell count on line " + std::to_string(line_no));
        std::vector<double> row;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const double v = detail::parse_cell(cells[j], line_no);
            if (static_cast<int>(j) == ycol) yv.push_back(v);
            else row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("csv: no data rows");

    Dataset d;
    d.y = Eigen::Map<Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
    d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (Eigen::Index i = 0; i < d.X.rows(); ++i)
        for (Eigen::Index j = 0; j < d.X.cols(); ++j) d.X(i, j) = rows[i][j];
    for (std::size_t j = 0; j < header.size(); ++j)
        if (static_cast<int>(j) != ycol) d.names.push_back(header[j]);
    for (int j = 0; j < d.k(); ++j) {
        const double lo = d.X.col(j).minCoeff(), hi = d.X.col(j).maxCoeff();
        if (lo == hi) d.warnings.push_back("column '" + d.names[j] + "' is constant");
    }
    d.validate();
    return d;
}

// A column is binary when it takes exactly two distinct finite values.
inline bool is_binary_column(const Eigen::VectorXd& col) {
    std::set<double> vals;
    for (int i = 0; i < col.size(); ++i) {
        vals.insert(col[i]);
        if (vals.size() > 2) return false;
    }
    return vals.size() == 2;
}

// Column standard deviation with the N-1 denominator.
inline double column_sd(const Eigen::VectorXd& col) {
    const double m = col.mean();
    return std::sqrt((col.array() - m).square().sum() / (col.size() - 1));
}

inline std::pair<Dataset, Standardization> standardize(const Dataset& d, Standardize kind) {
    d.validate();
    Standardization s;
    s.kind = kind;
    s.centers = Eigen::VectorXd::Zero(d.k());
    s.scales = Eigen::VectorXd::Ones(d.k());
    Dataset out = d;
    if (kind == Standardize::None) return {out, s};
    for (int j = 0; j < d.k(); ++j) {
        const Eigen::VectorXd col = d.X.col(j);
        s.centers[j] = col.mean();
        if (kind == Standardize::UnitVariance) {
            const double sd = column_sd(col);
            if (sd <= 0.0)
                throw std::invalid_argument("standardize: zero-variance column '" + d.names[j] + "'");
            s.scales[j] = sd;
        } else { // GelmanBinaryRange
            if (is_binary_column(col)) {
                s.scales[j] = col.maxCoeff() - col.minCoeff();
            } else {
                const double sd = column_sd(col);
                if (sd <= 0.0)
                    throw std::invalid_argument("standardize: zero-variance column '" + d.names[j] + "'");
                s.scales[j] = 2.0 * sd;
            }
        }
        out.X.col(j) = (col.array() - s.centers[j]) / s.scales[j];
    }
    return {out, s};
}

// Map coefficients fitted on the standardized scale (intercept first) back
// to the original covariate scale.
inline Eigen::VectorXd destandardize_coefficients(const Eigen::VectorXd& beta_std,
                                                  const Standardization& s) {
    if (beta_std.size() != s.scales.size() + 1)
        throw std::invalid_argument("destandardize: dimension mismatch");
    Eigen::VectorXd b = beta_std;
    for (int j = 0; j < s.scales.size(); ++j) {
        b[j + 1] = beta_std[j + 1] / s.scales[j];
        b[0] -= beta_std[j + 1] * s.centers[j] / s.scales[j];
    }
    return b;
}

} // namespace penlogit
