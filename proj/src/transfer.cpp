#include "xferlab/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "xferlab/rng.hpp"

namespace xferlab {

namespace {

// Collects one value batch per dataset row, then reduces each entry with the
// same balanced tree regardless of how callers might parallelize row work.
class MeanBuffer {
  public:
    MeanBuffer(std::size_t entries, std::size_t count)
        : entries_(entries), count_(count), buf_(entries * count, 0.0) {}

    double* row(std::size_t i) { return buf_.data() + i * entries_; }

    Vector means() const {
        Vector scratch(count_), out(entries_);
        for (std::size_t e = 0; e < entries_; ++e) {
            for (std::size_t i = 0; i < count_; ++i) scratch[i] = buf_[i * entries_ + e];
            out[e] = pairwise_sum(scratch) / static_cast<double>(count_);
        }
        return out;
    }

    double mean_single() const {
        Vector scratch(count_);
        for (std::size_t i = 0; i < count_; ++i) scratch[i] = buf_[i * entries_];
        return pairwise_sum(scratch) / static_cast<double>(count_);
    }

  private:
    std::size_t entries_, count_;
    std::vector<double> buf_;
};

Matrix matrix_from_means(const Vector& flat, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = flat[i * cols + j];
    return m;
}

void check_model_on_data(const DifferentiableModel& f, const MetricSpace& ms,
                         const Dataset& data, const char* what) {
    if (f.in_dim() != data.in_dim())
        throw InvalidInput(std::string(what) + ": model input dimension disagrees with data");
    if (ms.dim() != f.out_dim())
        throw InvalidInput(std::string(what) + ": metric dimension disagrees with model output");
}

double sqrt_clamped(double radicand, double scale_sq, const char* what) {
    if (radicand < -1e-6 * (1.0 + std::fabs(scale_sq)))
        throw NumericalInconsistency(std::string(what) +
                                     ": radicand materially negative, evaluation routes disagree");
    return std::sqrt(std::max(radicand, 0.0));
}

}  // namespace

PairStats pair_stats(const DifferentiableModel& f_star, const DifferentiableModel& f_dia,
                     const MetricSpace& ms_star, const Dataset& data) {
    check_model_on_data(f_star, ms_star, data, "pair_stats");
    if (f_dia.in_dim() != data.in_dim())
        throw InvalidInput("pair_stats: second model input dimension disagrees with data");
    std::size_t n_rows = data.size();
    std::size_t ms = f_star.out_dim(), md = f_dia.out_dim();

    MeanBuffer pbuf(ms * md, n_rows), jbuf(md * md, n_rows), sbuf(1, n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        Vector x = data.input_row(r);
        Matrix jac_s = f_star.jacobian(x);  // n x ms
        Matrix jac_d = f_dia.jacobian(x);   // n x md
        Matrix a = transpose(jac_s);        // ms x n
        Matrix p_i = matmul(a, jac_d);      // a b^T
        Matrix j_i = matmul(transpose(jac_d), jac_d);
        double* pr = pbuf.row(r);
        for (std::size_t e = 0; e < p_i.size(); ++e) pr[e] = p_i.data()[e];
        double* jr = jbuf.row(r);
        for (std::size_t e = 0; e < j_i.size(); ++e) jr[e] = j_i.data()[e];
        sbuf.row(r)[0] = trace_inner(a, ms_star.h(), a);
    }

    PairStats st;
    st.p = matrix_from_means(pbuf.means(), ms, md);
    st.j = matrix_from_means(jbuf.means(), md, md);
    st.grad_norm_sq = sbuf.mean_single();
    st.j_pinv = pinv(st.j);

    // ker(j) annihilates p exactly in exact arithmetic; report the residual.
    EigResult eig = sym_eig(st.j);
    double lmax = eig.values.empty() ? 0.0 : std::max(eig.values[0], 0.0);
    for (std::size_t i = 0; i < eig.values.size(); ++i) {
        if (eig.values[i] > lmax * 1e-12) continue;
        Vector v(md);
        for (std::size_t k = 0; k < md; ++k) v[k] = eig.vectors(k, i);
        st.null_residual = std::max(st.null_residual, norm2(matvec(st.p, v)));
    }
    return st;
}

namespace {

struct DeviationRow {
    Vector u;  // euclidean-unit self deviation, zeros when flagged
    Vector v;  // euclidean-unit cross deviation
    bool zero = false;
    double a1 = 0.0;  // per-row transfer ratio, clamped at 1
};

std::vector<DeviationRow> deviation_rows(const DifferentiableModel& f1, const MetricSpace& ms1,
                                         const DifferentiableModel& f2, const MetricSpace& ms2,
                                         const Dataset& data, std::size_t order,
                                         const char* what) {
    check_model_on_data(f1, ms1, data, what);
    check_model_on_data(f2, ms2, data, what);
    if (order == 0 || order > f1.in_dim())
        throw InvalidInput(std::string(what) + ": attack order out of range");

    std::vector<DeviationRow> rows(data.size());
    for (std::size_t r = 0; r < data.size(); ++r) {
        Vector x = data.input_row(r);
        AttackSpectrum spec1 = leading_attacks(f1, ms1, x, order);
        Vector delta(f1.in_dim());
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = spec1.deltas(i, order - 1);

        Vector d11 = matvec_transposed(f1.jacobian(x), delta);
        Vector d12 = matvec_transposed(f2.jacobian(x), delta);

        DeviationRow& out = rows[r];
        NormalizedVector nu = normalize_euclidean(d11);
        NormalizedVector nv = normalize_euclidean(d12);
        out.zero = nu.is_zero || nv.is_zero;
        out.u = std::move(nu.v);
        out.v = std::move(nv.v);

        double sigma1 = leading_attacks(f2, ms2, x, 1).sigma[0];
        double num = ms2.norm_vec(d12);
        out.a1 = sigma1 == 0.0 ? 0.0 : std::min(num / sigma1, 1.0);
    }
    return rows;
}

double outer_mean_norm(const std::vector<DeviationRow>& rows, std::size_t m1, std::size_t m2,
                       bool weight_by_a1) {
    MeanBuffer buf(m1 * m2, rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        double* dst = buf.row(r);
        const DeviationRow& row = rows[r];
        if (row.zero) continue;  // buffer rows start zeroed
        double w = weight_by_a1 ? row.a1 : 1.0;
        for (std::size_t i = 0; i < m1; ++i)
            for (std::size_t j = 0; j < m2; ++j) dst[i * m2 + j] = w * row.u[i] * row.v[j];
    }
    return frobenius(matrix_from_means(buf.means(), m1, m2));
}

}  // namespace

double alpha1_small_eps(const DifferentiableModel& f1, const MetricSpace& ms1,
                        const DifferentiableModel& f2, const MetricSpace& ms2,
                        const Dataset& data, std::size_t order) {
    auto rows = deviation_rows(f1, ms1, f2, ms2, data, order, "alpha1_small_eps");
    MeanBuffer buf(1, rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) buf.row(r)[0] = rows[r].a1;
    return buf.mean_single();
}

double alpha2(const DifferentiableModel& f1, const MetricSpace& ms1,
              const DifferentiableModel& f2, const MetricSpace& ms2, const Dataset& data,
              std::size_t order) {
    auto rows = deviation_rows(f1, ms1, f2, ms2, data, order, "alpha2");
    return outer_mean_norm(rows, f1.out_dim(), f2.out_dim(), false);
}

double alpha1_alpha2(const DifferentiableModel& f1, const MetricSpace& ms1,
                     const DifferentiableModel& f2, const MetricSpace& ms2, const Dataset& data,
                     std::size_t order) {
    auto rows = deviation_rows(f1, ms1, f2, ms2, data, order, "alpha1_alpha2");
    return outer_mean_norm(rows, f1.out_dim(), f2.out_dim(), true);
}

double alpha2_pairwise(const DifferentiableModel& f1, const MetricSpace& ms1,
                       const DifferentiableModel& f2, const MetricSpace& ms2,
                       const Dataset& data, std::size_t order) {
    auto rows = deviation_rows(f1, ms1, f2, ms2, data, order, "alpha2_pairwise");
    std::size_t n = rows.size();
    Vector outer(n), inner(n);
    for (std::size_t a = 0; a < n; ++a) {
        if (rows[a].zero) {
            outer[a] = 0.0;
            continue;
        }
        for (std::size_t b = 0; b < n; ++b)
            inner[b] = rows[b].zero
                           ? 0.0
                           : dot(rows[a].u, rows[b].u) * dot(rows[a].v, rows[b].v);
        outer[a] = pairwise_sum(inner);
    }
    double total = pairwise_sum(outer) / (static_cast<double>(n) * static_cast<double>(n));
    return std::sqrt(std::max(total, 0.0));
}

FiniteEpsAlpha1 alpha1_finite_eps(const DifferentiableModel& f1, const MetricSpace& ms1,
                                  const DifferentiableModel& f2, const MetricSpace& ms2,
                                  const Dataset& data, double eps, std::size_t steps,
                                  double step_size, std::uint64_t seed) {
    check_model_on_data(f1, ms1, data, "alpha1_finite_eps");
    check_model_on_data(f2, ms2, data, "alpha1_finite_eps");

    MeanBuffer buf(1, data.size());
    FiniteEpsAlpha1 result;
    for (std::size_t r = 0; r < data.size(); ++r) {
        Vector x = data.input_row(r);
        // Same per-row key for both models, so identical models get
        // identical attacks and the ratio is exactly one.
        std::uint64_t row_seed = Rng::mix(seed, r);
        Vector d1 = pgd_attack(f1, ms1, x, eps, steps, step_size, row_seed);
        Vector d2 = pgd_attack(f2, ms2, x, eps, steps, step_size, row_seed);

        Vector base = f2.forward(x);
        Vector moved(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) moved[i] = x[i] + d1[i];
        Vector num_vec = f2.forward(moved);
        for (std::size_t i = 0; i < num_vec.size(); ++i) num_vec[i] -= base[i];
        for (std::size_t i = 0; i < x.size(); ++i) moved[i] = x[i] + d2[i];
        Vector den_vec = f2.forward(moved);
        for (std::size_t i = 0; i < den_vec.size(); ++i) den_vec[i] -= base[i];

        double num = ms2.norm_vec(num_vec);
        double den = ms2.norm_vec(den_vec);
        double ratio = den == 0.0 ? 0.0 : num / den;
        if (ratio > 1.0) {
            if (ratio > 1.0 + 1e-6) ++result.clipped;
            ratio = 1.0;
        }
        buf.row(r)[0] = ratio;
    }
    result.value = buf.mean_single();
    return result;
}

Vector generalized_a1(const DifferentiableModel& f_star, const MetricSpace& ms_star,
                      const DifferentiableModel& f_dia, const MetricSpace& ms_dia,
                      const Vector& x) {
    if (f_star.in_dim() != f_dia.in_dim())
        throw InvalidInput("generalized_a1: input dimensions disagree");
    AttackSpectrum spec = attack_spectrum(f_star, ms_star, x);
    double sigma1 = leading_attacks(f_dia, ms_dia, x, 1).sigma[0];
    Matrix jac_d = f_dia.jacobian(x);

    std::size_t n = f_star.in_dim();
    Vector out(n, 0.0);
    if (sigma1 == 0.0) return out;
    Vector delta(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) delta[k] = spec.deltas(k, i);
        out[i] = ms_dia.norm_vec(matvec_transposed(jac_d, delta)) / sigma1;
    }
    return out;
}

double grad_match_closed(const DifferentiableModel& f_star, const DifferentiableModel& f_dia,
                         const MetricSpace& ms_star, const Dataset& data) {
    PairStats st = pair_stats(f_star, f_dia, ms_star, data);
    Matrix pj = matmul(st.p, st.j_pinv);
    double cross = trace_inner(st.p, ms_star.h(), pj);
    return sqrt_clamped(st.grad_norm_sq - cross, st.grad_norm_sq, "grad_match_closed");
}

double grad_match_residual(const DifferentiableModel& f_star, const DifferentiableModel& f_dia,
                           const MetricSpace& ms_star, const Dataset& data) {
    PairStats st = pair_stats(f_star, f_dia, ms_star, data);
    Matrix w = matmul(st.p, st.j_pinv);
    MeanBuffer buf(1, data.size());
    for (std::size_t r = 0; r < data.size(); ++r) {
        Vector x = data.input_row(r);
        Matrix a = transpose(f_star.jacobian(x));
        Matrix wb = matmul(w, transpose(f_dia.jacobian(x)));
        Matrix res = sub(a, wb);
        buf.row(r)[0] = std::max(trace_inner(res, ms_star.h(), res), 0.0);
    }
    return std::sqrt(std::max(buf.mean_single(), 0.0));
}

SpectralGradMatch grad_match_spectral(const DifferentiableModel& f_star,
                                      const MetricSpace& ms_star,
                                      const DifferentiableModel& f_dia,
                                      const MetricSpace& ms_dia, const Dataset& data) {
    check_model_on_data(f_star, ms_star, data, "grad_match_spectral");
    check_model_on_data(f_dia, ms_dia, data, "grad_match_spectral");

    std::size_t n_rows = data.size();
    std::size_t n = f_star.in_dim(), ms = f_star.out_dim(), md = f_dia.out_dim();

    std::vector<Matrix> ahat(n_rows), bhat(n_rows);
    std::vector<Vector> weight(n_rows);
    MeanBuffer jbuf(md * md, n_rows), sbuf(1, n_rows);

    Vector delta(n);
    for (std::size_t r = 0; r < n_rows; ++r) {
        Vector x = data.input_row(r);
        AttackSpectrum spec = attack_spectrum(f_star, ms_star, x);
        Matrix jac_s = f_star.jacobian(x);
        Matrix jac_d = f_dia.jacobian(x);

        ahat[r] = Matrix(ms, n);
        bhat[r] = Matrix(md, n);
        weight[r] = Vector(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) delta[k] = spec.deltas(k, i);
            Vector d_ss = matvec_transposed(jac_s, delta);
            Vector d_sd = matvec_transposed(jac_d, delta);
            NormalizedVector na = ms_star.normalize(d_ss);
            NormalizedVector nb = ms_dia.normalize(d_sd);
            if (!na.is_zero)
                for (std::size_t k = 0; k < ms; ++k) ahat[r](k, i) = na.v[k];
            if (!nb.is_zero)
                for (std::size_t k = 0; k < md; ++k) bhat[r](k, i) = nb.v[k];
            weight[r][i] = spec.sigma[i] * ms_dia.norm_vec(d_sd);
        }

        Matrix a = transpose(jac_s);
        Matrix j_i = matmul(transpose(jac_d), jac_d);
        double* jr = jbuf.row(r);
        for (std::size_t e = 0; e < j_i.size(); ++e) jr[e] = j_i.data()[e];
        sbuf.row(r)[0] = trace_inner(a, ms_star.h(), a);
    }

    SpectralGradMatch out;
    out.grad_norm_sq = sbuf.mean_single();

    Matrix j = matrix_from_means(jbuf.means(), md, md);
    Matrix j_pinv = pinv(j);
    out.j_pinv_norm = ms_dia.norm_mat(j_pinv);

    if (out.j_pinv_norm > 0.0) {
        Matrix k = scale(j_pinv, 1.0 / out.j_pinv_norm);
        std::vector<Matrix> ha(n_rows), kb(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r) {
            ha[r] = matmul(ms_star.h(), ahat[r]);
            kb[r] = matmul(k, bhat[r]);
        }
        Vector outer(n_rows), inner(n_rows);
        for (std::size_t r1 = 0; r1 < n_rows; ++r1) {
            for (std::size_t r2 = 0; r2 < n_rows; ++r2) {
                Matrix m1 = matmul(transpose(ahat[r1]), ha[r2]);
                Matrix m2 = matmul(transpose(bhat[r1]), kb[r2]);
                double term = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double wi = weight[r1][i];
                    if (wi == 0.0) continue;
                    double rowsum = 0.0;
                    for (std::size_t jj = 0; jj < n; ++jj)
                        rowsum += m1(i, jj) * m2(i, jj) * weight[r2][jj];
                    term += wi * rowsum;
                }
                inner[r2] = term;
            }
            outer[r1] = pairwise_sum(inner);
        }
        double pair_mean = pairwise_sum(outer) /
                           (static_cast<double>(n_rows) * static_cast<double>(n_rows));
        out.cross_term = pair_mean * out.j_pinv_norm;
    }

    out.value = sqrt_clamped(out.grad_norm_sq - out.cross_term, out.grad_norm_sq,
                             "grad_match_spectral");
    out.fraction = out.grad_norm_sq > 0.0 ? out.cross_term / out.grad_norm_sq : 0.0;
    return out;
}

Vector AffineMap::apply(const Vector& v) const {
    Vector out = matvec(w, v);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

AffineMap affine_fit(const Matrix& src_rows, const Matrix& tgt_rows) {
    if (src_rows.rows() == 0 || src_rows.rows() != tgt_rows.rows())
        throw InvalidInput("affine_fit: row counts disagree");
    if (src_rows.cols() == 0 || tgt_rows.cols() == 0) throw InvalidInput("affine_fit: empty rows");
    require_finite(src_rows, "affine_fit source");
    require_finite(tgt_rows, "affine_fit target");

    std::size_t n_rows = src_rows.rows(), p = src_rows.cols(), q = tgt_rows.cols();
    MeanBuffer smean(p, n_rows), tmean(q, n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t c = 0; c < p; ++c) smean.row(r)[c] = src_rows(r, c);
        for (std::size_t c = 0; c < q; ++c) tmean.row(r)[c] = tgt_rows(r, c);
    }
    Vector mu_s = smean.means(), mu_t = tmean.means();

    MeanBuffer css(p * p, n_rows), cts(q * p, n_rows);
    Vector ds(p), dt(q);
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t c = 0; c < p; ++c) ds[c] = src_rows(r, c) - mu_s[c];
        for (std::size_t c = 0; c < q; ++c) dt[c] = tgt_rows(r, c) - mu_t[c];
        double* cr = css.row(r);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) cr[i * p + j] = ds[i] * ds[j];
        double* tr = cts.row(r);
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < p; ++j) tr[i * p + j] = dt[i] * ds[j];
    }

    Matrix c_ss = matrix_from_means(css.means(), p, p);
    Matrix c_ts = matrix_from_means(cts.means(), q, p);

    AffineMap map;
    map.w = matmul(c_ts, pinv(c_ss));
    Vector wmu = matvec(map.w, mu_s);
    map.b = mu_t;
    for (std::size_t i = 0; i < q; ++i) map.b[i] -= wmu[i];
    return map;
}

namespace {

// sqrt of the mean weighted squared residual ||tgt - map(src)||^2_h per row.
double affine_residual(const Matrix& src_rows, const Matrix& tgt_rows, const AffineMap& map,
                       const MetricSpace* ms) {
    std::size_t n_rows = src_rows.rows(), q = tgt_rows.cols();
    MeanBuffer buf(1, n_rows);
    Vector s(src_rows.cols()), res(q);
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t c = 0; c < s.size(); ++c) s[c] = src_rows(r, c);
        Vector mapped = map.apply(s);
        for (std::size_t c = 0; c < q; ++c) res[c] = tgt_rows(r, c) - mapped[c];
        buf.row(r)[0] = ms ? std::pow(ms->norm_vec(res), 2) : dot(res, res);
    }
    return std::sqrt(std::max(buf.mean_single(), 0.0));
}

Matrix model_outputs(const DifferentiableModel& f, const Dataset& data) {
    Matrix out(data.size(), f.out_dim());
    for (std::size_t r = 0; r < data.size(); ++r) {
        Vector y = f.forward(data.input_row(r));
        for (std::size_t c = 0; c < y.size(); ++c) out(r, c) = y[c];
    }
    return out;
}

bool full_column_rank(const Matrix& w) {
    if (w.rows() < w.cols()) return false;
    SvdResult s = svd(w);
    double smax = s.sigma.empty() ? 0.0 : s.sigma[0];
    double smin = s.sigma.empty() ? 0.0 : s.sigma[s.sigma.size() - 1];
    return smax > 0.0 && smin / smax > 1e-8;
}

double reversal_constant(const Matrix& w, const MetricSpace& ms) {
    Matrix gram_inv = pinv(matmul(transpose(w), w));
    return std::sqrt(frobenius(gram_inv) * frobenius(ms.h()));
}

}  // namespace

double func_match(const DifferentiableModel& f_star, const DifferentiableModel& f_dia,
                  const MetricSpace& ms_star, const Dataset& data) {
    check_model_on_data(f_star, ms_star, data, "func_match");
    if (f_dia.in_dim() != data.in_dim())
        throw InvalidInput("func_match: second model input dimension disagrees with data");
    Matrix src = model_outputs(f_dia, data);
    Matrix tgt = model_outputs(f_star, data);
    AffineMap map = affine_fit(src, tgt);
    return affine_residual(src, tgt, map, &ms_star);
}

double knowledge_dist(const DifferentiableModel& f_src, const MetricSpace& ms_tgt,
                      const Dataset& data) {
    if (!data.has_targets()) throw InvalidInput("knowledge_dist: dataset has no targets");
    if (f_src.in_dim() != data.in_dim())
        throw InvalidInput("knowledge_dist: model input dimension disagrees with data");
    if (ms_tgt.dim() != data.target_dim())
        throw InvalidInput("knowledge_dist: metric dimension disagrees with targets");
    Matrix src = model_outputs(f_src, data);
    AffineMap map = affine_fit(src, data.y());
    return affine_residual(src, data.y(), map, &ms_tgt);
}

SurrogateBound surrogate_transfer_bound(const DifferentiableModel& f_src,
                                        const DifferentiableModel& f_tgt,
                                        const MetricSpace& ms_tgt, const Dataset& data) {
    if (!data.has_targets()) throw InvalidInput("surrogate_transfer_bound: no targets");
    if (ms_tgt.dim() != f_tgt.out_dim() || ms_tgt.dim() != data.target_dim())
        throw InvalidInput("surrogate_transfer_bound: dimension mismatch");

    SurrogateBound out;
    out.knowledge = knowledge_dist(f_src, ms_tgt, data);
    out.func = func_match(f_tgt, f_src, ms_tgt, data);

    MeanBuffer buf(1, data.size());
    Vector res(ms_tgt.dim());
    for (std::size_t r = 0; r < data.size(); ++r) {
        Vector y = f_tgt.forward(data.input_row(r));
        Vector t = data.target_row(r);
        for (std::size_t c = 0; c < res.size(); ++c) res[c] = y[c] - t[c];
        buf.row(r)[0] = std::pow(ms_tgt.norm_vec(res), 2);
    }
    out.budget = std::sqrt(std::max(buf.mean_single(), 0.0));
    out.holds = std::fabs(out.knowledge - out.func) <= out.budget + 1e-9;
    return out;
}

ReversalBound direction_reversal_bound(const DifferentiableModel& f_t, const MetricSpace& ms_t,
                                       const DifferentiableModel& f_s, const MetricSpace& ms_s,
                                       const Dataset& data) {
    if (ms_t.dim() != f_t.out_dim() || ms_s.dim() != f_s.out_dim())
        throw InvalidInput("direction_reversal_bound: metric dimension mismatch");
    if (f_t.in_dim() != data.in_dim() || f_s.in_dim() != data.in_dim())
        throw InvalidInput("direction_reversal_bound: model input dimension disagrees with data");

    std::size_t d = f_t.out_dim(), m = f_s.out_dim();
    Matrix out_t = model_outputs(f_t, data);
    Matrix out_s = model_outputs(f_s, data);
    AffineMap fit_ts = affine_fit(out_s, out_t);  // maps f_s outputs onto f_t outputs
    AffineMap fit_st = affine_fit(out_t, out_s);

    ReversalBound out;
    if (d <= m && full_column_rank(fit_st.w)) {
        out.has_low = true;
        out.low.lhs = affine_residual(out_s, out_t, fit_ts, &ms_t);
        out.low.rhs = reversal_constant(fit_st.w, ms_t) *
                      affine_residual(out_t, out_s, fit_st, nullptr);
        out.low.holds = out.low.lhs <= out.low.rhs + 1e-9;
    }
    if (d >= m && full_column_rank(fit_ts.w)) {
        out.has_high = true;
        out.high.lhs = affine_residual(out_t, out_s, fit_st, &ms_s);
        out.high.rhs = reversal_constant(fit_ts.w, ms_s) *
                       affine_residual(out_s, out_t, fit_ts, nullptr);
        out.high.holds = out.high.lhs <= out.high.rhs + 1e-9;
    }
    out.skipped = !out.has_low && !out.has_high;
    return out;
}

TransferReport compute_report(const DifferentiableModel& f1, const MetricSpace& ms1,
                              const DifferentiableModel& f2, const MetricSpace& ms2,
                              const Dataset& data, const std::string& direction,
                              std::size_t order) {
    TransferReport rep;
    rep.alpha1 = alpha1_small_eps(f1, ms1, f2, ms2, data, order);
    rep.alpha2 = alpha2(f1, ms1, f2, ms2, data, order);
    rep.alpha1x2 = alpha1_alpha2(f1, ms1, f2, ms2, data, order);
    rep.grad_match = grad_match_residual(f1, f2, ms1, data);
    rep.func_match = func_match(f1, f2, ms1, data);
    rep.knowledge_dist =
        data.has_targets() && data.target_dim() == ms1.dim() ? knowledge_dist(f2, ms1, data) : 0.0;
    rep.direction = direction;
    rep.rows = data.size();
    rep.order = order;
    return rep;
}

std::string report_to_json(const TransferReport& report) {
    nlohmann::json j;
    j["alpha1"] = report.alpha1;
    j["alpha2"] = report.alpha2;
    j["alpha1x2"] = report.alpha1x2;
    j["grad_match"] = report.grad_match;
    j["func_match"] = report.func_match;
    j["knowledge_dist"] = report.knowledge_dist;
    j["direction"] = report.direction;
    j["metadata"] = {{"rows", report.rows}, {"order", report.order}};
    return j.dump(2);
}

}  // namespace xferlab
