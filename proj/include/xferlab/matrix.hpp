#pragma once

#include <cstddef>
#include <vector>

#include "xferlab/errors.hpp"

namespace xferlab {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Kept deliberately small: storage,
// element access, and shape; algorithms live in linalg.
class Matrix {
  public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diag(const Vector& d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    const std::vector<double>& storage() const { return data_; }

  private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Vector matvec(const Matrix& a, const Vector& x);          // a * x
Vector matvec_transposed(const Matrix& a, const Vector& x);  // a^T * x

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double frobenius(const Matrix& a);
double trace(const Matrix& a);

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);
void require_finite(const Matrix& a, const char* what);
void require_finite(const Vector& v, const char* what);

// Sums with a fixed balanced-tree association so the result does not depend
// on how callers chunk a reduction.
double pairwise_sum(const double* x, std::size_t n);
double pairwise_sum(const Vector& v);

}  // namespace xferlab
