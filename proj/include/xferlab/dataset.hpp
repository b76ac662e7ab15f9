#pragma once

#include "xferlab/matrix.hpp"

namespace xferlab {

// Rows of inputs plus optional target rows. Targets are either absent
// (0 x 0) or have exactly one row per input row.
class Dataset {
  public:
    Dataset(Matrix x, Matrix y);

    std::size_t size() const { return x_.rows(); }
    std::size_t in_dim() const { return x_.cols(); }
    bool has_targets() const { return y_.rows() > 0; }
    std::size_t target_dim() const { return y_.cols(); }

    const Matrix& x() const { return x_; }
    const Matrix& y() const { return y_; }

    Vector input_row(std::size_t i) const;
    Vector target_row(std::size_t i) const;

  private:
    Matrix x_, y_;
};

}  // namespace xferlab
