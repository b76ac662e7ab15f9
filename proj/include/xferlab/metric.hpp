#pragma once

#include "xferlab/linalg.hpp"

namespace xferlab {

// Result of normalizing under a (possibly degenerate) metric. When the norm
// falls at or below the zero tolerance the vector is flagged and zeroed;
// downstream code treats flagged vectors as contributing nothing.
struct NormalizedVector {
    Vector v;
    double norm_used = 0.0;
    bool is_zero = true;
};

// Output-space geometry: a PSD matrix h defining <a,b>_h = a^T h b, together
// with a symmetric factor t satisfying t^T t = h (used to map deviations into
// a space where plain Euclidean geometry applies).
class MetricSpace {
  public:
    // h must be square, symmetric to 1e-9, with eigenvalues >= -1e-6 * ||h||_F
    // (negatives inside that band are clamped to zero).
    static MetricSpace from_psd(const Matrix& h);
    static MetricSpace identity(std::size_t dim);

    std::size_t dim() const { return h_.rows(); }
    const Matrix& h() const { return h_; }
    const Matrix& factor() const { return t_; }

    double norm_vec(const Vector& v) const;
    double norm_mat(const Matrix& w) const;  // sqrt(tr(w^T h w))
    double inner_vec(const Vector& a, const Vector& b) const;

    // zero_tol <= 0 selects the default 1e-12 * dim.
    NormalizedVector normalize(const Vector& v, double zero_tol = 0.0) const;

  private:
    MetricSpace(Matrix h, Matrix t) : h_(std::move(h)), t_(std::move(t)) {}
    Matrix h_, t_;
};

// Euclidean counterpart of MetricSpace::normalize, same zero-flag convention.
NormalizedVector normalize_euclidean(const Vector& v, double zero_tol = 0.0);

}  // namespace xferlab
