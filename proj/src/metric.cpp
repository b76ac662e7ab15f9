#include "xferlab/metric.hpp"

#include <cmath>

namespace xferlab {

MetricSpace MetricSpace::from_psd(const Matrix& h) {
    require_finite(h, "MetricSpace::from_psd");
    if (h.rows() != h.cols()) throw InvalidInput("MetricSpace::from_psd: matrix not square");
    std::size_t n = h.rows();
    if (n == 0) throw InvalidInput("MetricSpace::from_psd: empty matrix");

    EigResult eig = sym_eig(h);  // also enforces symmetry to 1e-9
    double scale = frobenius(h);
    for (double lam : eig.values)
        if (lam < -1e-6 * scale)
            throw NotPsd("MetricSpace::from_psd: eigenvalue below PSD tolerance");

    // t = q diag(sqrt(max(lambda, 0))) q^T, the symmetric PSD square root.
    Vector root(n);
    for (std::size_t i = 0; i < n; ++i) root[i] = std::sqrt(std::max(eig.values[i], 0.0));
    Matrix t(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += eig.vectors(i, k) * root[k] * eig.vectors(j, k);
            t(i, j) = s;
        }

    Matrix hs(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hs(i, j) = 0.5 * (h(i, j) + h(j, i));
    return MetricSpace(std::move(hs), std::move(t));
}

MetricSpace MetricSpace::identity(std::size_t dim) {
    if (dim == 0) throw InvalidInput("MetricSpace::identity: zero dimension");
    return MetricSpace(Matrix::identity(dim), Matrix::identity(dim));
}

double MetricSpace::inner_vec(const Vector& a, const Vector& b) const {
    if (a.size() != dim() || b.size() != dim())
        throw InvalidInput("MetricSpace::inner_vec: dimension mismatch");
    return dot(a, matvec(h_, b));
}

double MetricSpace::norm_vec(const Vector& v) const {
    if (v.size() != dim()) throw InvalidInput("MetricSpace::norm_vec: dimension mismatch");
    // v^T h v can dip below zero by roundoff for degenerate h.
    return std::sqrt(std::max(dot(v, matvec(h_, v)), 0.0));
}

double MetricSpace::norm_mat(const Matrix& w) const {
    if (w.rows() != dim()) throw InvalidInput("MetricSpace::norm_mat: row count mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) {
            double hij_wj = 0.0;
            for (std::size_t k = 0; k < dim(); ++k) hij_wj += h_(i, k) * w(k, j);
            col += w(i, j) * hij_wj;
        }
        acc += std::max(col, 0.0);
    }
    return std::sqrt(acc);
}

NormalizedVector MetricSpace::normalize(const Vector& v, double zero_tol) const {
    if (zero_tol <= 0.0) zero_tol = 1e-12 * static_cast<double>(dim());
    double nrm = norm_vec(v);
    NormalizedVector out;
    out.norm_used = nrm;
    if (nrm <= zero_tol) {
        out.v.assign(v.size(), 0.0);
        out.is_zero = true;
        return out;
    }
    out.v = v;
    for (double& x : out.v) x /= nrm;
    out.is_zero = false;
    return out;
}

NormalizedVector normalize_euclidean(const Vector& v, double zero_tol) {
    if (zero_tol <= 0.0) zero_tol = 1e-12 * static_cast<double>(v.size());
    double nrm = norm2(v);
    NormalizedVector out;
    out.norm_used = nrm;
    if (nrm <= zero_tol) {
        out.v.assign(v.size(), 0.0);
        out.is_zero = true;
        return out;
    }
    out.v = v;
    for (double& x : out.v) x /= nrm;
    out.is_zero = false;
    return out;
}

}  // namespace xferlab
