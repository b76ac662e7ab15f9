#pragma once

#include <cstdint>
#include <string>

#include "xferlab/dataset.hpp"
#include "xferlab/matrix.hpp"

namespace xferlab {

// Ground-truth map: y(x) = w * phi(x) + b with radial features
// phi_i(x) = exp(-||x - center_i||^2 / sigma_sq_i). Widths are drawn uniform
// on (sigma_sq_floor, 100); the floor keeps features from collapsing to
// point masses and travels with the target for reproducibility.
struct RbfTarget {
    Matrix centers;   // count x n
    Vector sigma_sq;  // count
    Matrix w;         // d x count
    Vector b;         // d
    double sigma_sq_floor = 1e-3;

    std::size_t in_dim() const { return centers.cols(); }
    std::size_t out_dim() const { return w.rows(); }
    Vector features(const Vector& x) const;
    Vector eval(const Vector& x) const;
};

RbfTarget make_target(std::size_t n, std::size_t count, std::size_t d, std::uint64_t seed,
                      double sigma_sq_floor = 1e-3);

// Equal-weight Gaussian mixture with identity covariance; centers uniform
// on (-0.5, 0.5)^n.
struct MixtureSpec {
    Matrix centers;  // k x n

    std::size_t components() const { return centers.rows(); }
    std::size_t dim() const { return centers.cols(); }
};

MixtureSpec make_mixture(std::size_t k, std::size_t n, std::uint64_t seed);

// count >= 2 rows of x ~ mixture, y = target.eval(x).
Dataset sample_dataset(const RbfTarget& target, const MixtureSpec& mixture, std::size_t count,
                       std::uint64_t seed);

// CSV with header x0..x{n-1},y0..y{d-1} and 17-significant-digit values.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

void save_target(const RbfTarget& target, const std::string& path);
RbfTarget load_target(const std::string& path);

}  // namespace xferlab
