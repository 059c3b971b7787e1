#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace gmacn {

// Dense row-major matrix of 64-bit floats. Once an operation has produced a
// matrix it is treated as immutable and may be shared across threads.
// Every public operation checks that its result is finite.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    const double* raw() const { return data_.data(); }
    double* raw() { return data_.data(); }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;
    std::string shape_str() const;  // e.g. "3x4"

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix relu(const Matrix& m);

// Row-wise softmax, stabilized by per-row max subtraction so huge logits do
// not overflow. Each output row sums to 1 within 1e-12.
Matrix softmax_rows(const Matrix& m);

Matrix scale(const Matrix& m, double s);
double sum_all(const Matrix& m);

// Maps a nonempty vector affinely onto [0,1]: min -> 0, max -> 1.
// A constant vector maps to all zeros.
std::vector<double> minmax_normalize(const std::vector<double>& v);

}  // namespace gmacn
