#include "xferlab/dataset.hpp"

namespace xferlab {

Dataset::Dataset(Matrix x, Matrix y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() == 0 || x_.cols() == 0) throw InvalidInput("Dataset: no input rows");
    require_finite(x_, "Dataset inputs");
    if (y_.rows() > 0) {
        if (y_.rows() != x_.rows()) throw InvalidInput("Dataset: target row count mismatch");
        if (y_.cols() == 0) throw InvalidInput("Dataset: empty target rows");
        require_finite(y_, "Dataset targets");
    }
}

Vector Dataset::input_row(std::size_t i) const {
    Vector r(x_.cols());
    for (std::size_t j = 0; j < x_.cols(); ++j) r[j] = x_(i, j);
    return r;
}

Vector Dataset::target_row(std::size_t i) const {
    if (!has_targets()) throw InvalidInput("Dataset: no targets present");
    Vector r(y_.cols());
    for (std::size_t j = 0; j < y_.cols(); ++j) r[j] = y_(i, j);
    return r;
}

}  // namespace xferlab
