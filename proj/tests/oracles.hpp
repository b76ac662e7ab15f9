#pragma once

// Independent optimality oracles for the affine fitting programs. The library
// evaluates those through moment closed forms; here the same convex objectives
// are minimized by accelerated first-order descent, so agreement certifies the
// closed forms rather than restating them.

#include <cmath>
#include <vector>

#include "xferlab/dataset.hpp"
#include "xferlab/linalg.hpp"
#include "xferlab/matrix.hpp"
#include "xferlab/metric.hpp"
#include "xferlab/models.hpp"

namespace testutil {

// min over w of mean_i ||u_i - w v_i||^2_h, solved with Nesterov steps on the
// moment form. An offset column is handled by augmenting v with a constant 1
// before calling. Returns the residual (square root of the objective).
inline double descend_affine(const std::vector<xferlab::Vector>& us,
                             const std::vector<xferlab::Vector>& vs, const xferlab::Matrix& h,
                             std::size_t iters = 50000) {
    using namespace xferlab;
    const std::size_t count = us.size();
    const std::size_t p = us.front().size();
    const std::size_t q = vs.front().size();
    const double inv_n = 1.0 / static_cast<double>(count);

    Matrix muv(p, q), mvv(q, q);
    double c0 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const Vector& u = us[i];
        const Vector& v = vs[i];
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < q; ++b) muv(a, b) += u[a] * v[b] * inv_n;
        }
        for (std::size_t a = 0; a < q; ++a) {
            for (std::size_t b = 0; b < q; ++b) mvv(a, b) += v[a] * v[b] * inv_n;
        }
        Vector hu = matvec(h, u);
        c0 += dot(u, hu) * inv_n;
    }

    auto objective = [&](const Matrix& w) {
        Matrix hw = matmul(h, w);
        return c0 - 2.0 * trace_inner(w, h, muv) + trace_inner(w, hw, mvv);
    };
    auto gradient = [&](const Matrix& w) {
        Matrix r = sub(matmul(w, mvv), muv);
        return scale(matmul(h, r), 2.0);
    };

    // Exact curvature bound: the gradient map is w -> 2 h w mvv, so its
    // Lipschitz constant is twice the product of the top eigenvalues.
    double lh = sym_eig(h).values.front();
    double lm = sym_eig(mvv).values.front();
    double lip = 2.0 * std::max(lh, 0.0) * std::max(lm, 0.0) + 1e-12;
    const double eta = 1.0 / lip;

    // Accelerated descent with function-value restart: momentum resets
    // whenever a step fails to decrease the objective, which recovers a
    // linear rate on the strongly convex instances without knowing their
    // smallest curvature.
    Matrix w(p, q), y(p, q), w_prev(p, q);
    double tk = 1.0;
    double best = objective(w);
    double last = best;
    for (std::size_t k = 0; k < iters; ++k) {
        Matrix g = gradient(y);
        w_prev = w;
        w = sub(y, scale(g, eta));
        double val = objective(w);
        if (val > last) {
            tk = 1.0;
            y = w;
        } else {
            double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
            Matrix momentum = scale(sub(w, w_prev), (tk - 1.0) / t_next);
            y = add(w, momentum);
            tk = t_next;
        }
        last = val;
        best = std::min(best, val);
        if (frobenius(g) <= 1e-14 * lip * (1.0 + frobenius(w))) break;
    }
    return std::sqrt(std::max(best, 0.0));
}

// Gradient matching residual by descent: every jacobian column is one sample
// pair, and the per-input column sum makes the objective n times the sample
// mean.
inline double oracle_grad_match(const xferlab::DifferentiableModel& f_star,
                                const xferlab::DifferentiableModel& f_dia,
                                const xferlab::MetricSpace& ms_star,
                                const xferlab::Dataset& data, std::size_t iters = 50000) {
    using namespace xferlab;
    std::vector<Vector> us, vs;
    const std::size_t n = data.in_dim();
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vector x = data.input_row(i);
        Matrix ja = f_star.jacobian(x);
        Matrix jb = f_dia.jacobian(x);
        for (std::size_t col = 0; col < n; ++col) {
            Vector u(f_star.out_dim()), v(f_dia.out_dim());
            for (std::size_t r = 0; r < u.size(); ++r) u[r] = ja(col, r);
            for (std::size_t r = 0; r < v.size(); ++r) v[r] = jb(col, r);
            us.push_back(std::move(u));
            vs.push_back(std::move(v));
        }
    }
    double per_sample = descend_affine(us, vs, ms_star.h(), iters);
    return per_sample * std::sqrt(static_cast<double>(n));
}

// Output matching residual by descent, offset included via augmentation.
inline double oracle_func_match(const xferlab::DifferentiableModel& f_star,
                                const xferlab::DifferentiableModel& f_dia,
                                const xferlab::MetricSpace& ms_star,
                                const xferlab::Dataset& data, std::size_t iters = 50000) {
    using namespace xferlab;
    std::vector<Vector> us, vs;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vector x = data.input_row(i);
        us.push_back(f_star.forward(x));
        Vector v = f_dia.forward(x);
        v.push_back(1.0);
        vs.push_back(std::move(v));
    }
    return descend_affine(us, vs, ms_star.h(), iters);
}

// Label fitting residual by descent.
inline double oracle_knowledge_dist(const xferlab::DifferentiableModel& f_src,
                                    const xferlab::MetricSpace& ms_tgt,
                                    const xferlab::Dataset& data, std::size_t iters = 50000) {
    using namespace xferlab;
    std::vector<Vector> us, vs;
    for (std::size_t i = 0; i < data.size(); ++i) {
        us.push_back(data.target_row(i));
        Vector v = f_src.forward(data.input_row(i));
        v.push_back(1.0);
        vs.push_back(std::move(v));
    }
    return descend_affine(us, vs, ms_tgt.h(), iters);
}

}  // namespace testutil
