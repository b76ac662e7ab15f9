#pragma once

#include <cstdint>

#include "xferlab/metric.hpp"
#include "xferlab/models.hpp"

namespace xferlab {

// Full attack basis at one input: sigma holds the singular values of
// t * jacobian(x)^T descending and zero-padded to the input dimension;
// column i of deltas is the matching unit input direction. Columns past the
// rank complete an orthonormal basis. Signs follow the svd convention
// (largest-magnitude entry of each direction positive).
struct AttackSpectrum {
    Vector x;
    Vector sigma;   // length n
    Matrix deltas;  // n x n
};

AttackSpectrum attack_spectrum(const DifferentiableModel& f, const MetricSpace& ms,
                               const Vector& x);

// First k directions only, computed through the output-side Gram matrix.
// Falls back to the full spectrum when the requested directions reach into
// the numerical null space. Agrees with attack_spectrum on the shared columns.
AttackSpectrum leading_attacks(const DifferentiableModel& f, const MetricSpace& ms,
                               const Vector& x, std::size_t k);

// Output-space displacement a unit attack direction induces on a target
// model: raw = jacobian(x)^T delta, unit = euclidean-normalized raw (flagged
// zero below tolerance), h_norm = ||raw|| under the target metric.
struct Deviation {
    Vector delta;
    Vector raw;
    NormalizedVector unit;
    double h_norm = 0.0;
};

// delta must be euclidean-unit within 1e-8.
Deviation deviation(const Vector& delta, const DifferentiableModel& target,
                    const MetricSpace& ms_target, const Vector& x);

// Projected gradient ascent of ||f(x + d) - f(x)||_h on the eps-sphere,
// with backtracking: a step that fails to improve halves the step size.
// step_size <= 0 selects eps / 10 as the starting step. The returned point
// is the best objective value seen across: the scaled top spectral
// direction, an ascent run started there, and one ascent run from a seeded
// random direction; it therefore never does worse than the spectral
// candidate.
Vector pgd_attack(const DifferentiableModel& f, const MetricSpace& ms, const Vector& x,
                  double eps, std::size_t steps, double step_size, std::uint64_t seed);

}  // namespace xferlab
