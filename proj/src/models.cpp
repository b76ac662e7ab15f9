#include "xferlab/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "xferlab/rng.hpp"

namespace xferlab {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void fill_uniform(Rng& rng, Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-0.5, 0.5);
}

void fill_uniform(Rng& rng, Vector& v) {
    for (double& x : v) x = rng.uniform(-0.5, 0.5);
}

}  // namespace

MlpOneHidden::MlpOneHidden(Matrix w1, Vector b1, Matrix w2, Vector b2)
    : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {
    if (w1_.rows() == 0 || w1_.cols() == 0 || w2_.rows() == 0)
        throw InvalidInput("MlpOneHidden: empty layer");
    if (b1_.size() != w1_.rows() || w2_.cols() != w1_.rows() || b2_.size() != w2_.rows())
        throw InvalidInput("MlpOneHidden: layer shape mismatch");
    require_finite(w1_, "MlpOneHidden w1");
    require_finite(b1_, "MlpOneHidden b1");
    require_finite(w2_, "MlpOneHidden w2");
    require_finite(b2_, "MlpOneHidden b2");
}

MlpOneHidden MlpOneHidden::random(std::size_t n, std::size_t h, std::size_t m,
                                  std::uint64_t seed) {
    if (n == 0 || h == 0 || m == 0) throw InvalidInput("MlpOneHidden::random: zero dimension");
    Rng rng(seed);
    Matrix w1(h, n), w2(m, h);
    Vector b1(h), b2(m);
    fill_uniform(rng, w1);
    fill_uniform(rng, b1);
    fill_uniform(rng, w2);
    fill_uniform(rng, b2);
    return MlpOneHidden(std::move(w1), std::move(b1), std::move(w2), std::move(b2));
}

Vector MlpOneHidden::forward(const Vector& x) const {
    if (x.size() != in_dim()) throw InvalidInput("MlpOneHidden::forward: input dimension");
    std::size_t h = hidden_dim(), m = out_dim(), n = in_dim();
    Vector a(h);
    for (std::size_t k = 0; k < h; ++k) {
        const double* row = w1_.data() + k * n;
        double z = b1_[k];
        for (std::size_t j = 0; j < n; ++j) z += row[j] * x[j];
        a[k] = sigmoid(z);
    }
    Vector out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = w2_.data() + i * h;
        double s = b2_[i];
        for (std::size_t k = 0; k < h; ++k) s += row[k] * a[k];
        out[i] = s;
    }
    return out;
}

Matrix MlpOneHidden::jacobian(const Vector& x) const {
    if (x.size() != in_dim()) throw InvalidInput("MlpOneHidden::jacobian: input dimension");
    std::size_t h = hidden_dim(), m = out_dim(), n = in_dim();
    Vector dz(h);  // sigmoid'(w1 x + b1)
    for (std::size_t k = 0; k < h; ++k) {
        const double* row = w1_.data() + k * n;
        double z = b1_[k];
        for (std::size_t j = 0; j < n; ++j) z += row[j] * x[j];
        double s = sigmoid(z);
        dz[k] = s * (1.0 - s);
    }
    // (i, j) = d f_j / d x_i = sum_k w2(j, k) dz_k w1(k, i)
    Matrix jac(n, m);
    for (std::size_t k = 0; k < h; ++k) {
        const double* w1row = w1_.data() + k * n;
        double d = dz[k];
        for (std::size_t j = 0; j < m; ++j) {
            double wd = w2_(j, k) * d;
            if (wd == 0.0) continue;
            for (std::size_t i = 0; i < n; ++i) jac(i, j) += wd * w1row[i];
        }
    }
    return jac;
}

Vector Analytic1D::forward(const Vector& x) const {
    if (x.size() != 1) throw InvalidInput("Analytic1D::forward: input dimension");
    double v = x[0];
    if (kind_ == Kind::Square) return {v * v};
    return {v >= 0.0 ? v * v : -v * v};
}

Matrix Analytic1D::jacobian(const Vector& x) const {
    if (x.size() != 1) throw InvalidInput("Analytic1D::jacobian: input dimension");
    Matrix j(1, 1);
    j(0, 0) = kind_ == Kind::Square ? 2.0 * x[0] : 2.0 * std::fabs(x[0]);
    return j;
}

namespace {

double mean_loss(const MlpOneHidden& m, const Dataset& data) {
    Vector per_row(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vector out = m.forward(data.input_row(i));
        Vector tgt = data.target_row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < out.size(); ++j) {
            double r = out[j] - tgt[j];
            s += r * r;
        }
        per_row[i] = s;
    }
    return pairwise_sum(per_row) / static_cast<double>(data.size());
}

struct Grads {
    Matrix w1, w2;
    Vector b1, b2;
};

Grads batch_gradient(const MlpOneHidden& m, const Dataset& data) {
    std::size_t h = m.hidden_dim(), mo = m.out_dim(), n = m.in_dim(), cnt = data.size();
    Grads g{Matrix(h, n), Matrix(mo, h), Vector(h, 0.0), Vector(mo, 0.0)};
    double inv = 2.0 / static_cast<double>(cnt);
    Vector a(h), z(h), gout(mo), ghid(h);
    for (std::size_t r = 0; r < cnt; ++r) {
        Vector x = data.input_row(r);
        Vector y = data.target_row(r);
        for (std::size_t k = 0; k < h; ++k) {
            const double* row = m.w1().data() + k * n;
            double s = m.b1()[k];
            for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
            a[k] = sigmoid(s);
        }
        for (std::size_t i = 0; i < mo; ++i) {
            const double* row = m.w2().data() + i * h;
            double s = m.b2()[i];
            for (std::size_t k = 0; k < h; ++k) s += row[k] * a[k];
            gout[i] = inv * (s - y[i]);
        }
        for (std::size_t i = 0; i < mo; ++i) {
            double gi = gout[i];
            g.b2[i] += gi;
            double* grow = g.w2.data() + i * h;
            for (std::size_t k = 0; k < h; ++k) grow[k] += gi * a[k];
        }
        for (std::size_t k = 0; k < h; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < mo; ++i) s += m.w2()(i, k) * gout[i];
            ghid[k] = s * a[k] * (1.0 - a[k]);
        }
        for (std::size_t k = 0; k < h; ++k) {
            double gk = ghid[k];
            if (gk == 0.0) continue;
            g.b1[k] += gk;
            double* grow = g.w1.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) grow[j] += gk * x[j];
        }
    }
    return g;
}

MlpOneHidden apply_step(const MlpOneHidden& m, const Grads& g, double lr) {
    Matrix w1 = m.w1(), w2 = m.w2();
    Vector b1 = m.b1(), b2 = m.b2();
    for (std::size_t i = 0; i < w1.size(); ++i) w1.data()[i] -= lr * g.w1.data()[i];
    for (std::size_t i = 0; i < w2.size(); ++i) w2.data()[i] -= lr * g.w2.data()[i];
    for (std::size_t i = 0; i < b1.size(); ++i) b1[i] -= lr * g.b1[i];
    for (std::size_t i = 0; i < b2.size(); ++i) b2[i] -= lr * g.b2[i];
    return MlpOneHidden(std::move(w1), std::move(b1), std::move(w2), std::move(b2));
}

}  // namespace

TrainResult train_full_batch(const MlpOneHidden& start, const Dataset& data, double lr,
                             std::size_t epochs) {
    if (!data.has_targets()) throw InvalidInput("train_full_batch: dataset has no targets");
    if (data.in_dim() != start.in_dim() || data.target_dim() != start.out_dim())
        throw InvalidInput("train_full_batch: dataset dimensions disagree with model");
    if (lr < 0.0 || !std::isfinite(lr)) throw InvalidInput("train_full_batch: bad learning rate");

    MlpOneHidden model = start;
    double loss = mean_loss(model, data);
    if (!std::isfinite(loss)) throw TrainingDiverged("train_full_batch: initial loss not finite");
    Vector history{loss};
    history.reserve(epochs + 1);

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Grads g = batch_gradient(model, data);
        MlpOneHidden next = apply_step(model, g, lr);
        double next_loss = mean_loss(next, data);
        // Committed losses must not increase; a bad step halves the rate
        // (kept for later epochs) rather than being accepted.
        int halvings = 0;
        while (!(next_loss <= loss + 1e-12 * (1.0 + std::fabs(loss))) && halvings < 60) {
            lr *= 0.5;
            next = apply_step(model, g, lr);
            next_loss = mean_loss(next, data);
            ++halvings;
        }
        if (!std::isfinite(next_loss))
            throw TrainingDiverged("train_full_batch: loss became non-finite");
        model = std::move(next);
        loss = next_loss;
        history.push_back(loss);
    }
    return TrainResult{std::move(model), std::move(history)};
}

TrainResult train_from_seed(std::size_t n, std::size_t h, std::size_t m, const Dataset& data,
                            double lr, std::size_t epochs, std::uint64_t seed) {
    return train_full_batch(MlpOneHidden::random(n, h, m, seed), data, lr, epochs);
}

MlpOneHidden perturb_weights(const MlpOneHidden& model, double t, std::uint64_t seed) {
    if (!std::isfinite(t)) throw InvalidInput("perturb_weights: t not finite");
    Rng rng(seed);
    Matrix v1(model.w1().rows(), model.w1().cols());
    Vector vb1(model.b1().size());
    Matrix v2(model.w2().rows(), model.w2().cols());
    Vector vb2(model.b2().size());
    fill_uniform(rng, v1);
    fill_uniform(rng, vb1);
    fill_uniform(rng, v2);
    fill_uniform(rng, vb2);

    Matrix w1 = model.w1(), w2 = model.w2();
    Vector b1 = model.b1(), b2 = model.b2();
    for (std::size_t i = 0; i < w1.size(); ++i) w1.data()[i] += t * v1.data()[i];
    for (std::size_t i = 0; i < w2.size(); ++i) w2.data()[i] += t * v2.data()[i];
    for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += t * vb1[i];
    for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += t * vb2[i];
    return MlpOneHidden(std::move(w1), std::move(b1), std::move(w2), std::move(b2));
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                        const char* what) {
    if (!j.is_array() || j.size() != rows)
        throw InvalidInput(std::string("model json: bad row count for ") + what);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || row.size() != cols)
            throw InvalidInput(std::string("model json: bad column count for ") + what);
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = row[c].get<double>();
    }
    return m;
}

Vector vector_from_json(const nlohmann::json& j, std::size_t len, const char* what) {
    if (!j.is_array() || j.size() != len)
        throw InvalidInput(std::string("model json: bad length for ") + what);
    Vector v(len);
    for (std::size_t i = 0; i < len; ++i) v[i] = j[i].get<double>();
    return v;
}

}  // namespace

std::string MlpOneHidden::to_json() const {
    nlohmann::json j;
    j["n"] = in_dim();
    j["h"] = hidden_dim();
    j["m"] = out_dim();
    j["w1"] = matrix_to_json(w1_);
    j["b1"] = b1_;
    j["w2"] = matrix_to_json(w2_);
    j["b2"] = b2_;
    return j.dump(2);
}

MlpOneHidden MlpOneHidden::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("model json: parse failure: ") + e.what());
    }
    static const char* keys[] = {"n", "h", "m", "w1", "b1", "w2", "b2"};
    for (const char* k : keys)
        if (!j.contains(k)) throw InvalidInput(std::string("model json: missing field ") + k);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw InvalidInput("model json: unknown field " + it.key());
    }
    auto n = j["n"].get<std::size_t>();
    auto h = j["h"].get<std::size_t>();
    auto m = j["m"].get<std::size_t>();
    return MlpOneHidden(matrix_from_json(j["w1"], h, n, "w1"), vector_from_json(j["b1"], h, "b1"),
                        matrix_from_json(j["w2"], m, h, "w2"), vector_from_json(j["b2"], m, "b2"));
}

void save_model(const MlpOneHidden& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_model: cannot open " + path);
    out << model.to_json() << "\n";
    if (!out) throw IoError("save_model: write failure on " + path);
}

MlpOneHidden load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_model: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return MlpOneHidden::from_json(ss.str());
}

}  // namespace xferlab
