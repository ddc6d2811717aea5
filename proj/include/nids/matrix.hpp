#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nids {

// Dense row-major matrix. Values are immutable once a matrix has been
// handed to another component; builders mutate through at()/row() before
// sharing.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const;
    std::span<double> row(std::size_t r);

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    // Throws if any entry is NaN or infinite.
    void require_finite(const char* context) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

} // namespace nids
