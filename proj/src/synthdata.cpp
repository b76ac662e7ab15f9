#include "xferlab/synthdata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "xferlab/rng.hpp"

namespace xferlab {

Vector RbfTarget::features(const Vector& x) const {
    if (x.size() != in_dim()) throw InvalidInput("RbfTarget: input dimension");
    Vector phi(centers.rows());
    for (std::size_t i = 0; i < centers.rows(); ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < centers.cols(); ++j) {
            double diff = x[j] - centers(i, j);
            d2 += diff * diff;
        }
        phi[i] = std::exp(-d2 / sigma_sq[i]);
    }
    return phi;
}

Vector RbfTarget::eval(const Vector& x) const {
    Vector phi = features(x);
    Vector y = matvec(w, phi);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return y;
}

RbfTarget make_target(std::size_t n, std::size_t count, std::size_t d, std::uint64_t seed,
                      double sigma_sq_floor) {
    if (n == 0 || count == 0 || d == 0) throw InvalidInput("make_target: zero dimension");
    if (sigma_sq_floor <= 0.0 || sigma_sq_floor >= 100.0)
        throw InvalidInput("make_target: width floor out of range");
    Rng rng(seed);
    RbfTarget t;
    t.sigma_sq_floor = sigma_sq_floor;
    t.centers = Matrix(count, n);
    for (std::size_t i = 0; i < t.centers.size(); ++i)
        t.centers.data()[i] = rng.uniform(-0.5, 0.5);
    t.sigma_sq = Vector(count);
    for (std::size_t i = 0; i < count; ++i) t.sigma_sq[i] = rng.uniform(sigma_sq_floor, 100.0);
    t.w = Matrix(d, count);
    for (std::size_t i = 0; i < t.w.size(); ++i) t.w.data()[i] = rng.uniform(-0.5, 0.5);
    t.b = Vector(d);
    for (std::size_t i = 0; i < d; ++i) t.b[i] = rng.uniform(-0.5, 0.5);
    return t;
}

MixtureSpec make_mixture(std::size_t k, std::size_t n, std::uint64_t seed) {
    if (k == 0 || n == 0) throw InvalidInput("make_mixture: zero dimension");
    Rng rng(seed);
    MixtureSpec spec;
    spec.centers = Matrix(k, n);
    for (std::size_t i = 0; i < spec.centers.size(); ++i)
        spec.centers.data()[i] = rng.uniform(-0.5, 0.5);
    return spec;
}

Dataset sample_dataset(const RbfTarget& target, const MixtureSpec& mixture, std::size_t count,
                       std::uint64_t seed) {
    if (count < 2) throw InvalidInput("sample_dataset: need at least two rows");
    if (mixture.dim() != target.in_dim())
        throw InvalidInput("sample_dataset: mixture and target dimensions disagree");
    std::size_t n = target.in_dim(), d = target.out_dim(), k = mixture.components();

    Rng rng(seed);
    Matrix x(count, n), y(count, d);
    for (std::size_t r = 0; r < count; ++r) {
        auto comp = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(k));
        if (comp >= k) comp = k - 1;
        Vector row(n);
        for (std::size_t j = 0; j < n; ++j) row[j] = mixture.centers(comp, j) + rng.gaussian();
        Vector t = target.eval(row);
        for (std::size_t j = 0; j < n; ++j) x(r, j) = row[j];
        for (std::size_t j = 0; j < d; ++j) y(r, j) = t[j];
    }
    return Dataset(std::move(x), std::move(y));
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void save_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_dataset: cannot open " + path);
    for (std::size_t j = 0; j < data.in_dim(); ++j) {
        if (j) out << ',';
        out << 'x' << j;
    }
    for (std::size_t j = 0; j < data.target_dim(); ++j) out << ",y" << j;
    out << '\n';
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t j = 0; j < data.in_dim(); ++j) {
            if (j) out << ',';
            out << fmt17(data.x()(r, j));
        }
        for (std::size_t j = 0; j < data.target_dim(); ++j) out << ',' << fmt17(data.y()(r, j));
        out << '\n';
    }
    if (!out) throw IoError("save_dataset: write failure on " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_dataset: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("load_dataset: empty file " + path);

    std::size_t n = 0, d = 0;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col.size() > 1 && col[0] == 'x' && col == "x" + std::to_string(n) && d == 0) {
                ++n;
            } else if (col.size() > 1 && col[0] == 'y' && col == "y" + std::to_string(d)) {
                ++d;
            } else {
                throw IoError("load_dataset: malformed header column '" + col + "'");
            }
        }
        if (n == 0) throw IoError("load_dataset: header has no input columns");
    }

    std::vector<double> xs, ys;
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw IoError("load_dataset: bad number '" + cell + "'");
            }
            if (col < n)
                xs.push_back(v);
            else
                ys.push_back(v);
            ++col;
        }
        if (col != n + d) throw IoError("load_dataset: row width disagrees with header");
        ++rows;
    }
    if (rows == 0) throw IoError("load_dataset: no data rows in " + path);

    Matrix x(rows, n), y(d > 0 ? rows : 0, d);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < n; ++j) x(r, j) = xs[r * n + j];
        for (std::size_t j = 0; j < d; ++j) y(r, j) = ys[r * d + j];
    }
    return Dataset(std::move(x), std::move(y));
}

namespace {

nlohmann::json matrix_rows_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_rows_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw IoError(std::string("target json: bad matrix for ") + what);
    std::size_t rows = j.size(), cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw IoError(std::string("target json: ragged matrix for ") + what);
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

}  // namespace

void save_target(const RbfTarget& target, const std::string& path) {
    nlohmann::json j;
    j["centers"] = matrix_rows_json(target.centers);
    j["sigma_sq"] = target.sigma_sq;
    j["w"] = matrix_rows_json(target.w);
    j["b"] = target.b;
    j["metadata"] = {{"sigma_sq_floor", target.sigma_sq_floor},
                     {"mixture_weights", "uniform"}};
    std::ofstream out(path);
    if (!out) throw IoError("save_target: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("save_target: write failure on " + path);
}

RbfTarget load_target(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_target: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("load_target: parse failure: ") + e.what());
    }
    for (const char* key : {"centers", "sigma_sq", "w", "b", "metadata"})
        if (!j.contains(key)) throw IoError(std::string("load_target: missing field ") + key);

    RbfTarget t;
    t.centers = matrix_rows_from_json(j["centers"], "centers");
    t.sigma_sq = j["sigma_sq"].get<Vector>();
    t.w = matrix_rows_from_json(j["w"], "w");
    t.b = j["b"].get<Vector>();
    t.sigma_sq_floor = j["metadata"].value("sigma_sq_floor", 1e-3);

    if (t.sigma_sq.size() != t.centers.rows() || t.w.cols() != t.centers.rows() ||
        t.b.size() != t.w.rows())
        throw IoError("load_target: inconsistent shapes in " + path);
    return t;
}

}  // namespace xferlab
