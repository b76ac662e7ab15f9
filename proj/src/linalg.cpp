#include "xferlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace xferlab {

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidInput("matmul: inner dimensions disagree");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.data() + k * b.cols();
            double* crow = c.data() + i * c.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("sub: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix scale(const Matrix& a, double c) {
    Matrix r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] *= c;
    return r;
}

Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw InvalidInput("matvec: shape mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* row = a.data() + i * a.cols();
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
    if (a.rows() != x.size()) throw InvalidInput("matvec_transposed: shape mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* row = a.data() + i * a.cols();
        double xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += row[j] * xi;
    }
    return y;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInput("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
    return std::sqrt(s);
}

double trace(const Matrix& a) {
    if (a.rows() != a.cols()) throw InvalidInput("trace: matrix not square");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
    return s;
}

bool all_finite(const Matrix& a) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a.data()[i])) return false;
    return true;
}

bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void require_finite(const Matrix& a, const char* what) {
    if (!all_finite(a)) throw InvalidInput(std::string(what) + ": non-finite entry");
}

void require_finite(const Vector& v, const char* what) {
    if (!all_finite(v)) throw InvalidInput(std::string(what) + ": non-finite entry");
}

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 32) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

double pairwise_sum(const Vector& v) { return pairwise_sum(v.data(), v.size()); }

namespace {

void check_symmetric(const Matrix& a, const char* what) {
    if (a.rows() != a.cols()) throw InvalidInput(std::string(what) + ": matrix not square");
    double amax = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) amax = std::max(amax, std::fabs(a.data()[i]));
    double tol = 1e-9 * (1.0 + amax);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::fabs(a(i, j) - a(j, i)) > tol)
                throw InvalidInput(std::string(what) + ": matrix not symmetric");
}

double offdiag_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

EigResult sym_eig(const Matrix& a_in) {
    require_finite(a_in, "sym_eig");
    check_symmetric(a_in, "sym_eig");
    std::size_t n = a_in.rows();
    if (n == 0) return {Matrix(0, 0), Vector{}};

    // Work on the symmetrized copy so tiny asymmetries cannot bias rotations.
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (a_in(i, j) + a_in(j, i));
    Matrix v = Matrix::identity(n);

    const double stop = 1e-14 * frobenius(a);
    for (int sweep = 0; sweep < 100; ++sweep) {
        if (offdiag_norm(a) <= stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (apq == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::fabs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);

                double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = akp - s * (akq + tau * akp);
                    a(p, k) = a(k, p);
                    a(k, q) = akq + s * (akp - tau * akq);
                    a(q, k) = a(k, q);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp - s * (vkq + tau * vkp);
                    v(k, q) = vkq + s * (vkp - tau * vkq);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigResult res{Matrix(n, n), Vector(n)};
    for (std::size_t j = 0; j < n; ++j) {
        res.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, j) = v(i, order[j]);
    }
    return res;
}

namespace {

Vector column(const Matrix& m, std::size_t j) {
    Vector c(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) c[i] = m(i, j);
    return c;
}

void set_column(Matrix& m, std::size_t j, const Vector& c) {
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = c[i];
}

// Orthonormalize columns [0, k) in place (two projection passes), replacing
// columns that collapse with canonical-basis completions.
void orthonormalize_columns(Matrix& m, std::size_t k) {
    std::size_t dim = m.rows();
    for (std::size_t j = 0; j < k; ++j) {
        Vector cj = column(m, j);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < j; ++i) {
                Vector ci = column(m, i);
                double proj = dot(ci, cj);
                for (std::size_t r = 0; r < dim; ++r) cj[r] -= proj * ci[r];
            }
        }
        double nrm = norm2(cj);
        if (nrm < 1e-8) {
            // Degenerate direction; replace with the canonical vector least
            // represented in the current span.
            std::size_t best = 0;
            double best_resid = -1.0;
            for (std::size_t e = 0; e < dim; ++e) {
                Vector cand(dim, 0.0);
                cand[e] = 1.0;
                for (std::size_t i = 0; i < j; ++i) {
                    Vector ci = column(m, i);
                    double proj = dot(ci, cand);
                    for (std::size_t r = 0; r < dim; ++r) cand[r] -= proj * ci[r];
                }
                double resid = norm2(cand);
                if (resid > best_resid) {
                    best_resid = resid;
                    best = e;
                }
            }
            cj.assign(dim, 0.0);
            cj[best] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t i = 0; i < j; ++i) {
                    Vector ci = column(m, i);
                    double proj = dot(ci, cj);
                    for (std::size_t r = 0; r < dim; ++r) cj[r] -= proj * ci[r];
                }
            }
            nrm = norm2(cj);
        }
        for (std::size_t r = 0; r < dim; ++r) cj[r] /= nrm;
        set_column(m, j, cj);
    }
}

void canonicalize_sign(Matrix& lead, Matrix* partner, std::size_t j) {
    std::size_t arg = 0;
    double mx = -1.0;
    for (std::size_t i = 0; i < lead.rows(); ++i) {
        double v = std::fabs(lead(i, j));
        if (v > mx) {
            mx = v;
            arg = i;
        }
    }
    if (lead(arg, j) < 0.0) {
        for (std::size_t i = 0; i < lead.rows(); ++i) lead(i, j) = -lead(i, j);
        if (partner && j < partner->cols())
            for (std::size_t i = 0; i < partner->rows(); ++i) (*partner)(i, j) = -(*partner)(i, j);
    }
}

}  // namespace

SvdResult svd(const Matrix& a) {
    require_finite(a, "svd");
    std::size_t m = a.rows(), n = a.cols();
    if (m == 0 || n == 0) throw InvalidInput("svd: empty matrix");

    bool tall = m >= n;
    Matrix b = tall ? a : transpose(a);  // rows >= cols
    std::size_t rows = b.rows(), cols = b.cols();
    Matrix w = Matrix::identity(cols);  // accumulated right rotations

    // Rotate column pairs of the tall factor until all pairs are orthogonal
    // to working precision. Working on the columns directly (never on the
    // Gram matrix) keeps small singular values fully accurate.
    const double ortho_tol = 1e-14;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t r = 0; r < rows; ++r) {
                    double bp = b(r, p), bq = b(r, q);
                    alpha += bp * bp;
                    beta += bq * bq;
                    gamma += bp * bq;
                }
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::fabs(gamma) <= ortho_tol * std::sqrt(alpha * beta)) continue;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t;
                if (std::fabs(zeta) > 1e150) {
                    t = 1.0 / (2.0 * zeta);
                } else {
                    t = 1.0 / (std::fabs(zeta) + std::sqrt(zeta * zeta + 1.0));
                    if (zeta < 0.0) t = -t;
                }
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = c * t;
                for (std::size_t r = 0; r < rows; ++r) {
                    double bp = b(r, p), bq = b(r, q);
                    b(r, p) = c * bp - s * bq;
                    b(r, q) = s * bp + c * bq;
                }
                for (std::size_t r = 0; r < cols; ++r) {
                    double wp = w(r, p), wq = w(r, q);
                    w(r, p) = c * wp - s * wq;
                    w(r, q) = s * wp + c * wq;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }

    Vector raw_sigma(cols);
    for (std::size_t j = 0; j < cols; ++j) raw_sigma[j] = norm2(column(b, j));

    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return raw_sigma[i] > raw_sigma[j]; });

    Vector sigma(cols);
    Matrix shortf(cols, cols);  // rotation accumulate, columns reordered
    for (std::size_t j = 0; j < cols; ++j) {
        sigma[j] = raw_sigma[order[j]];
        for (std::size_t i = 0; i < cols; ++i) shortf(i, j) = w(i, order[j]);
    }

    double smax = cols > 0 ? sigma[0] : 0.0;
    double drop = smax * 1e-13;
    Matrix longf(rows, rows);
    for (std::size_t j = 0; j < cols; ++j) {
        if (sigma[j] > drop) {
            for (std::size_t i = 0; i < rows; ++i) longf(i, j) = b(i, order[j]) / sigma[j];
        }
        // Columns for dropped/zero sigmas are filled by the completion below.
    }
    orthonormalize_columns(longf, rows);

    SvdResult res;
    if (tall) {
        res.u = std::move(longf);
        res.v = std::move(shortf);
        res.sigma = std::move(sigma);
        for (std::size_t j = 0; j < n; ++j) canonicalize_sign(res.v, &res.u, j);
        for (std::size_t j = n; j < m; ++j) canonicalize_sign(res.u, nullptr, j);
    } else {
        res.u = std::move(shortf);
        res.v = std::move(longf);
        res.sigma = std::move(sigma);
        for (std::size_t j = 0; j < m; ++j) canonicalize_sign(res.v, &res.u, j);
        for (std::size_t j = m; j < n; ++j) canonicalize_sign(res.v, nullptr, j);
    }
    return res;
}

Matrix pinv(const Matrix& a, double rel_tol) {
    if (rel_tol <= 0.0) throw InvalidInput("pinv: rel_tol must be positive");
    SvdResult s = svd(a);
    std::size_t m = a.rows(), n = a.cols(), k = s.sigma.size();
    double cutoff = (k > 0 ? s.sigma[0] : 0.0) * rel_tol;
    Matrix r(n, m);
    for (std::size_t i = 0; i < k; ++i) {
        if (s.sigma[i] <= cutoff || s.sigma[i] == 0.0) continue;
        double inv = 1.0 / s.sigma[i];
        for (std::size_t p = 0; p < n; ++p) {
            double vp = s.v(p, i) * inv;
            if (vp == 0.0) continue;
            for (std::size_t q = 0; q < m; ++q) r(p, q) += vp * s.u(q, i);
        }
    }
    return r;
}

double trace_inner(const Matrix& w, const Matrix& s, const Matrix& m) {
    if (w.rows() != s.rows() || s.cols() != m.rows() || m.cols() != w.cols())
        throw InvalidInput("trace_inner: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t c = 0; c < s.cols(); ++c) {
            double sic = s(i, c);
            if (sic == 0.0) continue;
            for (std::size_t j = 0; j < m.cols(); ++j) acc += w(i, j) * sic * m(c, j);
        }
    return acc;
}

}  // namespace xferlab
