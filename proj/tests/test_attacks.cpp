#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "xferlab/attacks.hpp"

using namespace xferlab;
using testutil::max_abs_diff;
using testutil::rand_psd;
using testutil::rand_vec;

TEST_CASE("attack spectrum: orthonormal basis, ordered gains, matching norms") {
    Rng rng(41);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 2 + rng.next_u64() % 5;
        std::size_t m = 1 + rng.next_u64() % 4;
        MlpOneHidden f = MlpOneHidden::random(n, 4, m, rng.next_u64());
        MetricSpace ms = MetricSpace::from_psd(rand_psd(rng, m));
        Vector x = rand_vec(rng, n);
        AttackSpectrum s = attack_spectrum(f, ms, x);

        CHECK(s.sigma.size() == n);
        CHECK(s.deltas.rows() == n);
        CHECK(s.deltas.cols() == n);
        CHECK(max_abs_diff(matmul(transpose(s.deltas), s.deltas), Matrix::identity(n)) <= 1e-10);
        for (std::size_t i = 0; i + 1 < n; ++i) CHECK(s.sigma[i] >= s.sigma[i + 1]);

        Matrix jac = f.jacobian(x);
        for (std::size_t i = 0; i < n; ++i) {
            Vector delta(n);
            for (std::size_t r = 0; r < n; ++r) delta[r] = s.deltas(r, i);
            double gain = ms.norm_vec(matvec_transposed(jac, delta));
            CHECK(std::abs(gain - s.sigma[i]) <= 1e-9 * (1.0 + s.sigma[0]));
        }

        // no direction beats the leading one
        for (int probe = 0; probe < 100; ++probe) {
            Vector u = rand_vec(rng, n);
            double nu = norm2(u);
            if (nu == 0.0) continue;
            for (double& c : u) c /= nu;
            CHECK(ms.norm_vec(matvec_transposed(jac, u)) <= s.sigma[0] + 1e-9);
        }
    }
}

TEST_CASE("leading attacks agree with the full spectrum") {
    Rng rng(42);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 4 + rng.next_u64() % 4;
        std::size_t m = 1 + rng.next_u64() % 3;  // wide jacobians take the fast path
        MlpOneHidden f = MlpOneHidden::random(n, 5, m, rng.next_u64());
        MetricSpace ms = MetricSpace::from_psd(rand_psd(rng, m));
        Vector x = rand_vec(rng, n);
        AttackSpectrum full = attack_spectrum(f, ms, x);
        for (std::size_t k = 1; k <= std::min<std::size_t>(n, m + 1); ++k) {
            AttackSpectrum lead = leading_attacks(f, ms, x, k);
            for (std::size_t i = 0; i < k; ++i) {
                CHECK(std::abs(lead.sigma[i] - full.sigma[i]) <= 1e-9 * (1.0 + full.sigma[0]));
                for (std::size_t r = 0; r < n; ++r) {
                    CHECK(std::abs(lead.deltas(r, i) - full.deltas(r, i)) <= 1e-8);
                }
            }
        }
        CHECK_THROWS_AS(leading_attacks(f, ms, x, 0), InvalidInput);
        CHECK_THROWS_AS(leading_attacks(f, ms, x, n + 1), InvalidInput);
    }
}

TEST_CASE("deviation bookkeeping") {
    Rng rng(43);
    MlpOneHidden f = MlpOneHidden::random(4, 5, 3, 7);
    MetricSpace ms = MetricSpace::from_psd(rand_psd(rng, 3));
    Vector x = rand_vec(rng, 4);
    Vector delta = rand_vec(rng, 4);
    double nd = norm2(delta);
    for (double& c : delta) c /= nd;

    Deviation dev = deviation(delta, f, ms, x);
    Matrix jac = f.jacobian(x);
    CHECK(max_abs_diff(dev.raw, matvec_transposed(jac, delta)) <= 1e-12);
    CHECK(std::abs(dev.h_norm - ms.norm_vec(dev.raw)) <= 1e-12);
    CHECK(!dev.unit.is_zero);
    CHECK(std::abs(norm2(dev.unit.v) - 1.0) <= 1e-10);

    Vector bad(4, 0.7);  // euclidean norm 1.4, must be rejected
    CHECK_THROWS_AS(deviation(bad, f, ms, x), InvalidInput);
}

TEST_CASE("ascent attack: sphere feasibility, spectral floor, small-radius limit") {
    Rng rng(44);
    int checked = 0;
    for (int trial = 0; trial < 20 && checked < 10; ++trial) {
        std::size_t n = 3 + rng.next_u64() % 3;
        std::size_t m = 2 + rng.next_u64() % 3;
        MlpOneHidden f = MlpOneHidden::random(n, 5, m, rng.next_u64());
        MetricSpace ms = MetricSpace::identity(m);
        Vector x = rand_vec(rng, n);
        AttackSpectrum s = attack_spectrum(f, ms, x);
        if (s.sigma[0] < 0.05) continue;
        ++checked;

        double eps = 1e-4;
        Vector delta = pgd_attack(f, ms, x, eps, 50, 0.0, rng.next_u64());
        CHECK(std::abs(norm2(delta) - eps) <= 1e-9);

        auto objective = [&](const Vector& d) {
            Vector moved = x;
            for (std::size_t i = 0; i < n; ++i) moved[i] += d[i];
            Vector diff = f.forward(moved);
            Vector base = f.forward(x);
            for (std::size_t i = 0; i < m; ++i) diff[i] -= base[i];
            return ms.norm_vec(diff);
        };
        Vector spectral(n);
        for (std::size_t i = 0; i < n; ++i) spectral[i] = eps * s.deltas(i, 0);
        CHECK(objective(delta) >= objective(spectral) - 1e-12);
        CHECK(std::abs(objective(delta) / (eps * s.sigma[0]) - 1.0) <= 1e-2);

        Vector delta2 = pgd_attack(f, ms, x, eps, 50, 0.0, 1234);
        Vector delta3 = pgd_attack(f, ms, x, eps, 50, 0.0, 1234);
        CHECK(max_abs_diff(delta2, delta3) == 0.0);
    }
    REQUIRE(checked >= 10);

    MlpOneHidden f = MlpOneHidden::random(3, 4, 2, 1);
    MetricSpace ms = MetricSpace::identity(2);
    Vector x = {0.1, 0.2, 0.3};
    CHECK_THROWS_AS(pgd_attack(f, ms, x, 0.0, 50, 0.0, 1), InvalidInput);
    CHECK_THROWS_AS(pgd_attack(f, ms, x, 0.1, 0, 0.0, 1), InvalidInput);
}
