#include "xferlab/attacks.hpp"

#include <cmath>

#include "xferlab/rng.hpp"

namespace xferlab {

namespace {

// t * jacobian(x)^T, the map whose right singular vectors are the attacks.
Matrix attack_operator(const DifferentiableModel& f, const MetricSpace& ms, const Vector& x) {
    if (x.size() != f.in_dim()) throw InvalidInput("attack_spectrum: input dimension");
    if (ms.dim() != f.out_dim()) throw InvalidInput("attack_spectrum: metric dimension");
    require_finite(x, "attack_spectrum input");
    return matmul(ms.factor(), transpose(f.jacobian(x)));
}

void canonicalize_column(Matrix& m, std::size_t j) {
    std::size_t arg = 0;
    double mx = -1.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double v = std::fabs(m(i, j));
        if (v > mx) {
            mx = v;
            arg = i;
        }
    }
    if (m(arg, j) < 0.0)
        for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = -m(i, j);
}

}  // namespace

AttackSpectrum attack_spectrum(const DifferentiableModel& f, const MetricSpace& ms,
                               const Vector& x) {
    Matrix a = attack_operator(f, ms, x);  // m x n
    std::size_t n = f.in_dim();
    SvdResult s = svd(a);

    AttackSpectrum out;
    out.x = x;
    out.sigma.assign(n, 0.0);
    for (std::size_t i = 0; i < s.sigma.size(); ++i) out.sigma[i] = s.sigma[i];
    out.deltas = std::move(s.v);
    return out;
}

AttackSpectrum leading_attacks(const DifferentiableModel& f, const MetricSpace& ms,
                               const Vector& x, std::size_t k) {
    std::size_t n = f.in_dim(), m = f.out_dim();
    if (k == 0 || k > n) throw InvalidInput("leading_attacks: bad direction count");
    if (m >= n || k >= m) return attack_spectrum(f, ms, x);

    Matrix a = attack_operator(f, ms, x);  // m x n, wide
    EigResult eig = sym_eig(matmul(a, transpose(a)));
    Vector sigma(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) sigma[i] = std::sqrt(std::max(eig.values[i], 0.0));

    // Requested directions must sit safely above the null space; otherwise the
    // completed-basis semantics of the full decomposition are needed.
    if (sigma[k - 1] <= sigma[0] * 1e-13) return attack_spectrum(f, ms, x);

    AttackSpectrum out;
    out.x = x;
    out.sigma = std::move(sigma);
    out.deltas = Matrix(n, k);
    Vector u(m);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t r = 0; r < m; ++r) u[r] = eig.vectors(r, i);
        Vector v = matvec_transposed(a, u);
        double inv = 1.0 / out.sigma[i];
        for (std::size_t r = 0; r < n; ++r) out.deltas(r, i) = v[r] * inv;
        canonicalize_column(out.deltas, i);
    }
    return out;
}

Deviation deviation(const Vector& delta, const DifferentiableModel& target,
                    const MetricSpace& ms_target, const Vector& x) {
    if (delta.size() != target.in_dim()) throw InvalidInput("deviation: direction dimension");
    if (ms_target.dim() != target.out_dim()) throw InvalidInput("deviation: metric dimension");
    require_finite(delta, "deviation direction");
    double nrm = norm2(delta);
    if (std::fabs(nrm - 1.0) > 1e-8)
        throw InvalidInput("deviation: direction is not euclidean-unit");

    Deviation d;
    d.delta = delta;
    d.raw = matvec_transposed(target.jacobian(x), delta);
    d.unit = normalize_euclidean(d.raw);
    d.h_norm = ms_target.norm_vec(d.raw);
    return d;
}

namespace {

double adv_objective(const DifferentiableModel& f, const MetricSpace& ms, const Vector& x,
                     const Vector& base, const Vector& delta) {
    Vector moved(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) moved[i] = x[i] + delta[i];
    Vector out = f.forward(moved);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= base[i];
    return ms.norm_vec(out);
}

void ascend(const DifferentiableModel& f, const MetricSpace& ms, const Vector& x,
            const Vector& base, Vector delta, double eps, std::size_t steps, double step_size,
            Vector& best, double& best_val) {
    std::size_t n = x.size();
    double val = adv_objective(f, ms, x, base, delta);
    if (val > best_val) {
        best_val = val;
        best = delta;
    }
    // Hill climb on the sphere with backtracking: an improving step is kept,
    // a failing one halves the step, so iterates settle onto the maximizer
    // instead of orbiting it at a fixed step scale.
    double step = step_size;
    const double step_floor = step_size * 1e-12;
    Vector moved(n), cand(n);
    for (std::size_t it = 0; it < steps; ++it) {
        for (std::size_t i = 0; i < n; ++i) moved[i] = x[i] + delta[i];
        Vector diff = f.forward(moved);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= base[i];
        // Gradient of the squared objective: 2 * jac(x+d) * h * diff. The
        // direction is all that matters; the step is renormalized anyway.
        Vector g = matvec(f.jacobian(moved), matvec(ms.h(), diff));
        double gn = norm2(g);
        if (gn == 0.0) break;
        for (std::size_t i = 0; i < n; ++i) cand[i] = delta[i] + step * g[i] / gn;
        double dn = norm2(cand);
        if (dn > 0.0)
            for (std::size_t i = 0; i < n; ++i) cand[i] *= eps / dn;
        double cand_val = adv_objective(f, ms, x, base, cand);
        if (cand_val > val) {
            delta = cand;
            val = cand_val;
            if (val > best_val) {
                best_val = val;
                best = delta;
            }
        } else {
            step *= 0.5;
            if (step < step_floor) break;
        }
    }
}

}  // namespace

Vector pgd_attack(const DifferentiableModel& f, const MetricSpace& ms, const Vector& x,
                  double eps, std::size_t steps, double step_size, std::uint64_t seed) {
    if (eps <= 0.0 || !std::isfinite(eps)) throw InvalidInput("pgd_attack: eps must be positive");
    if (steps == 0) throw InvalidInput("pgd_attack: steps must be at least 1");
    if (step_size <= 0.0) step_size = eps / 10.0;
    if (x.size() != f.in_dim()) throw InvalidInput("pgd_attack: input dimension");
    require_finite(x, "pgd_attack input");

    std::size_t n = x.size();
    Vector base = f.forward(x);

    AttackSpectrum spec = leading_attacks(f, ms, x, 1);
    Vector spectral(n);
    for (std::size_t i = 0; i < n; ++i) spectral[i] = eps * spec.deltas(i, 0);

    Vector best = spectral;
    double best_val = adv_objective(f, ms, x, base, spectral);

    ascend(f, ms, x, base, spectral, eps, steps, step_size, best, best_val);

    Rng rng(Rng::mix(seed, 0x70676431ull));
    Vector random_dir(n);
    for (std::size_t i = 0; i < n; ++i) random_dir[i] = rng.gaussian();
    double rn = norm2(random_dir);
    if (rn == 0.0) {
        random_dir.assign(n, 0.0);
        random_dir[0] = 1.0;
        rn = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) random_dir[i] *= eps / rn;
    ascend(f, ms, x, base, random_dir, eps, steps, step_size, best, best_val);

    return best;
}

}  // namespace xferlab
