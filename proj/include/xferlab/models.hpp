#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "xferlab/dataset.hpp"
#include "xferlab/matrix.hpp"

namespace xferlab {

// Everything downstream needs from a model: evaluation and first derivatives.
// jacobian(x) uses the input-by-output orientation, entry (i, j) = d f_j / d x_i,
// so jacobian(x)^T maps input perturbations to output deviations.
class DifferentiableModel {
  public:
    virtual ~DifferentiableModel() = default;
    virtual std::size_t in_dim() const = 0;
    virtual std::size_t out_dim() const = 0;
    virtual Vector forward(const Vector& x) const = 0;
    virtual Matrix jacobian(const Vector& x) const = 0;
};

// One hidden sigmoid layer, linear output:
//   f(x) = w2 * sigmoid(w1 x + b1) + b2
// with w1 (h x n), b1 (h), w2 (m x h), b2 (m).
class MlpOneHidden : public DifferentiableModel {
  public:
    MlpOneHidden(Matrix w1, Vector b1, Matrix w2, Vector b2);

    // All entries i.i.d. uniform on (-0.5, 0.5); draw order is fixed
    // (w1 row-major, b1, w2 row-major, b2) so seeds are portable.
    static MlpOneHidden random(std::size_t n, std::size_t h, std::size_t m, std::uint64_t seed);

    std::size_t in_dim() const override { return w1_.cols(); }
    std::size_t out_dim() const override { return w2_.rows(); }
    std::size_t hidden_dim() const { return w1_.rows(); }

    Vector forward(const Vector& x) const override;
    Matrix jacobian(const Vector& x) const override;

    const Matrix& w1() const { return w1_; }
    const Vector& b1() const { return b1_; }
    const Matrix& w2() const { return w2_; }
    const Vector& b2() const { return b2_; }

    std::string to_json() const;
    static MlpOneHidden from_json(const std::string& text);

  private:
    Matrix w1_;
    Vector b1_;
    Matrix w2_;
    Vector b2_;
};

// Scalar models used by the sign-flip example: x^2 and sgn(x) * x^2. The pair
// has identical curvature magnitude everywhere but opposite derivative signs
// on the negative axis.
class Analytic1D : public DifferentiableModel {
  public:
    enum class Kind { Square, SignedSquare };
    explicit Analytic1D(Kind kind) : kind_(kind) {}

    std::size_t in_dim() const override { return 1; }
    std::size_t out_dim() const override { return 1; }
    Vector forward(const Vector& x) const override;
    Matrix jacobian(const Vector& x) const override;

  private:
    Kind kind_;
};

struct TrainResult {
    MlpOneHidden model;
    Vector losses;  // committed mean-squared-loss value per epoch, index 0 = initial
};

// Full-batch gradient descent on the mean squared euclidean loss. Committed
// losses never increase: a step that would raise the loss is retried with a
// halved rate (kept thereafter), so runs are deterministic with no RNG.
TrainResult train_full_batch(const MlpOneHidden& start, const Dataset& data, double lr,
                             std::size_t epochs);

// Convenience: random(n, h, m, seed) then train_full_batch.
TrainResult train_from_seed(std::size_t n, std::size_t h, std::size_t m, const Dataset& data,
                            double lr, std::size_t epochs, std::uint64_t seed);

// w + t * v for every weight block, v entries uniform on (-0.5, 0.5) drawn
// from seed in the same fixed order as random(); the direction depends only
// on the seed, so scaling t rescales the same displacement.
MlpOneHidden perturb_weights(const MlpOneHidden& model, double t, std::uint64_t seed);

void save_model(const MlpOneHidden& model, const std::string& path);
MlpOneHidden load_model(const std::string& path);

}  // namespace xferlab
