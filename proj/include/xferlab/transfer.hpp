#pragma once

#include <cstdint>
#include <string>

#include "xferlab/attacks.hpp"
#include "xferlab/dataset.hpp"
#include "xferlab/metric.hpp"
#include "xferlab/models.hpp"

namespace xferlab {

// Second-moment statistics of a model pair over a dataset, in the *-then-
// diamond convention: with a = jac_star^T and b = jac_dia^T per row,
//   p = E[a b^T], j = E[b b^T], grad_norm_sq = E[tr(a^T h_star a)].
// ker(j) is contained in ker(p) up to roundoff; null_residual reports the
// worst ||p v|| over numerical null vectors v of j.
struct PairStats {
    Matrix p;
    Matrix j;
    Matrix j_pinv;
    double grad_norm_sq = 0.0;
    double null_residual = 0.0;
};

PairStats pair_stats(const DifferentiableModel& f_star, const DifferentiableModel& f_dia,
                     const MetricSpace& ms_star, const Dataset& data);

// Transfer ratio of the leading (or order-th) attack, small-perturbation
// form: mean over rows of ||jac_dia^T delta_f1^(order)||_{h2} / sigma1_f2(x),
// with 0/0 read as 0 and roundoff overshoot clamped at 1.
double alpha1_small_eps(const DifferentiableModel& f1, const MetricSpace& ms1,
                        const DifferentiableModel& f2, const MetricSpace& ms2,
                        const Dataset& data, std::size_t order = 1);

struct FiniteEpsAlpha1 {
    double value = 0.0;
    std::size_t clipped = 0;  // rows whose ratio exceeded 1 + 1e-6 before clipping
};

// Finite-radius form using ascent-found attacks on both models. Per-row
// ratios above 1 are clipped to 1 (whitebox optimum can only be missed, not
// beaten, so any overshoot is optimizer noise); `clipped` counts rows whose
// overshoot exceeded 1 + 1e-6.
FiniteEpsAlpha1 alpha1_finite_eps(const DifferentiableModel& f1, const MetricSpace& ms1,
                                  const DifferentiableModel& f2, const MetricSpace& ms2,
                                  const Dataset& data, double eps, std::size_t steps,
                                  double step_size, std::uint64_t seed);

// Frobenius norm of the mean outer product of euclidean-unit deviation pairs;
// rows with a zero-flagged deviation contribute zero outer products.
double alpha2(const DifferentiableModel& f1, const MetricSpace& ms1,
              const DifferentiableModel& f2, const MetricSpace& ms2, const Dataset& data,
              std::size_t order = 1);

// Same quantity through the ordered-pair expectation of inner-product
// products (O(N^2), meant for cross-checks on small datasets).
double alpha2_pairwise(const DifferentiableModel& f1, const MetricSpace& ms1,
                       const DifferentiableModel& f2, const MetricSpace& ms2,
                       const Dataset& data, std::size_t order = 1);

// Pointwise-alpha1-weighted variant of alpha2.
double alpha1_alpha2(const DifferentiableModel& f1, const MetricSpace& ms1,
                     const DifferentiableModel& f2, const MetricSpace& ms2, const Dataset& data,
                     std::size_t order = 1);

// Transfer ratio of every attack order at one input: entry i is
// ||jac_dia^T delta_star^(i)||_{h_dia} / sigma1_dia(x), zeros when the
// denominator vanishes.
Vector generalized_a1(const DifferentiableModel& f_star, const MetricSpace& ms_star,
                      const DifferentiableModel& f_dia, const MetricSpace& ms_dia,
                      const Vector& x);

// Best-affine gradient-matching distance via the moment closed form
//   sqrt( E||a||^2_{h_star} - tr(p^T h_star p j^+) ).
// Radicand within -1e-6 relative of zero is clamped; below that the two
// terms disagree materially and NumericalInconsistency is thrown.
double grad_match_closed(const DifferentiableModel& f_star, const DifferentiableModel& f_dia,
                         const MetricSpace& ms_star, const Dataset& data);

// Same minimizer w = p j^+, evaluated by its definition residual
// sqrt(E||a - w b||^2_{h_star}). Free of the closed form's cancellation, so
// it stays accurate when the distance is near zero.
double grad_match_residual(const DifferentiableModel& f_star, const DifferentiableModel& f_dia,
                           const MetricSpace& ms_star, const Dataset& data);

// Spectral route: the cross term is rebuilt from attack spectra as
//   E_{x1,x2}[ v(x1)^T a2(x1,x2) v(x2) ] * ||j^+||_{h_dia}
// where v(x) = sigma_star(x) elementwise-times the h_dia-norms of the
// transferred deviations, and a2 couples normalized self- and cross-
// deviations of the two rows. Agrees with grad_match_closed to roundoff.
struct SpectralGradMatch {
    double value = 0.0;         // distance
    double fraction = 0.0;      // cross_term / grad_norm_sq, in [0, 1]
    double cross_term = 0.0;
    double grad_norm_sq = 0.0;
    double j_pinv_norm = 0.0;   // ||j^+||_{h_dia}
};

SpectralGradMatch grad_match_spectral(const DifferentiableModel& f_star,
                                      const MetricSpace& ms_star,
                                      const DifferentiableModel& f_dia,
                                      const MetricSpace& ms_dia, const Dataset& data);

struct AffineMap {
    Matrix w;
    Vector b;
    Vector apply(const Vector& v) const;
};

// Least-squares affine map src -> tgt over rows (centered second moments,
// pseudoinverse solve). The minimizer is metric-independent whenever the
// moment system is consistent, which it is by construction.
AffineMap affine_fit(const Matrix& src_rows, const Matrix& tgt_rows);

// min over affine g of sqrt(E||f_star(x) - g(f_dia(x))||^2_{h_star}).
double func_match(const DifferentiableModel& f_star, const DifferentiableModel& f_dia,
                  const MetricSpace& ms_star, const Dataset& data);

// min over affine g of sqrt(E||y - g(f_src(x))||^2_{h_tgt}).
double knowledge_dist(const DifferentiableModel& f_src, const MetricSpace& ms_tgt,
                      const Dataset& data);

// |knowledge_dist - func_match| <= ||f_tgt - y||_{D, h_tgt}: how far the
// model-to-model distance can sit from the model-to-truth distance.
struct SurrogateBound {
    double knowledge = 0.0;
    double func = 0.0;
    double budget = 0.0;
    bool holds = false;
};

SurrogateBound surrogate_transfer_bound(const DifferentiableModel& f_src,
                                        const DifferentiableModel& f_tgt,
                                        const MetricSpace& ms_tgt, const Dataset& data);

// Fitting direction reversal: each applicable case bounds one direction's
// weighted residual by the other direction's euclidean residual scaled by
// sqrt(||(w^T w)^{-1}||_F ||h||_F) for the reverse fitted map w. Needs that
// map to have full column rank (sigma_min / sigma_max > 1e-8), otherwise the
// check is reported as skipped.
struct ReversalCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

struct ReversalBound {
    bool skipped = false;
    bool has_low = false;   // case out(f_t) <= out(f_s)
    bool has_high = false;  // case out(f_t) >= out(f_s)
    ReversalCheck low;
    ReversalCheck high;
};

ReversalBound direction_reversal_bound(const DifferentiableModel& f_t, const MetricSpace& ms_t,
                                       const DifferentiableModel& f_s, const MetricSpace& ms_s,
                                       const Dataset& data);

// One direction's metrics bundled for serialization: attacker = f1 = the
// model whose attacks are transferred, f2 = the model they land on.
struct TransferReport {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha1x2 = 0.0;
    double grad_match = 0.0;
    double func_match = 0.0;
    double knowledge_dist = 0.0;  // NaN-free: zero when the dataset has no targets
    std::string direction;
    std::size_t rows = 0;
    std::size_t order = 1;
};

TransferReport compute_report(const DifferentiableModel& f1, const MetricSpace& ms1,
                              const DifferentiableModel& f2, const MetricSpace& ms2,
                              const Dataset& data, const std::string& direction,
                              std::size_t order = 1);

std::string report_to_json(const TransferReport& report);

}  // namespace xferlab
