#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "xferlab/dataset.hpp"
#include "xferlab/matrix.hpp"
#include "xferlab/metric.hpp"
#include "xferlab/models.hpp"
#include "xferlab/rng.hpp"

namespace testutil {

inline xferlab::Matrix rand_mat(xferlab::Rng& rng, std::size_t rows, std::size_t cols) {
    xferlab::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian();
    return m;
}

inline xferlab::Vector rand_vec(xferlab::Rng& rng, std::size_t n) {
    xferlab::Vector v(n);
    for (double& x : v) x = rng.gaussian();
    return v;
}

// Positive definite with mild conditioning, randomized overall scale.
inline xferlab::Matrix rand_psd(xferlab::Rng& rng, std::size_t dim) {
    xferlab::Matrix g = rand_mat(rng, dim, dim);
    xferlab::Matrix h = xferlab::matmul(xferlab::transpose(g), g);
    double s = xferlab::frobenius(h);
    if (s > 0.0) h = xferlab::scale(h, 1.0 / s);
    h = xferlab::add(h, xferlab::scale(xferlab::Matrix::identity(dim), 0.3));
    return xferlab::scale(h, rng.uniform(0.5, 2.0));
}

inline double max_abs_diff(const xferlab::Matrix& a, const xferlab::Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

inline double max_abs_diff(const xferlab::Vector& a, const xferlab::Vector& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

inline xferlab::Dataset rand_inputs(xferlab::Rng& rng, std::size_t count, std::size_t n) {
    return xferlab::Dataset(rand_mat(rng, count, n), xferlab::Matrix());
}

// Central differences; step tuned for O(1) sigmoid nets.
inline xferlab::Matrix fd_jacobian(const xferlab::DifferentiableModel& f,
                                   const xferlab::Vector& x, double step = 1e-5) {
    xferlab::Matrix j(f.in_dim(), f.out_dim());
    for (std::size_t i = 0; i < f.in_dim(); ++i) {
        xferlab::Vector hi = x, lo = x;
        hi[i] += step;
        lo[i] -= step;
        xferlab::Vector fh = f.forward(hi), fl = f.forward(lo);
        for (std::size_t k = 0; k < f.out_dim(); ++k) {
            j(i, k) = (fh[k] - fl[k]) / (2.0 * step);
        }
    }
    return j;
}

// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               (tag + "_" + std::to_string(static_cast<unsigned>(std::rand())) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this) & 0xffff));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testutil
