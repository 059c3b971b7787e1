#include "gmacn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmacn/errors.hpp"

namespace gmacn {

namespace {

void ensure_finite(const Matrix& m, const char* op) {
    if (!m.all_finite()) {
        throw Error(std::string(op) + ": produced a non-finite entry");
    }
}

void ensure_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != m.cols()) {
            throw ShapeError("from_rows: ragged initializer");
        }
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " * " +
                         b.shape_str());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix c(m, n);
    // ikj order keeps the inner loop contiguous over both b and c.
    const double* pa = a.raw();
    const double* pb = b.raw();
    double* pc = c.raw();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = pa[i * k + kk];
            if (aik == 0.0) continue;
            const double* brow = pb + kk * n;
            double* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    ensure_finite(c, "matmul");
    return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
    ensure_same_shape(a, b, "add");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    ensure_finite(c, "add");
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    ensure_same_shape(a, b, "sub");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    ensure_finite(c, "sub");
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    ensure_same_shape(a, b, "hadamard");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
    ensure_finite(c, "hadamard");
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

Matrix relu(const Matrix& m) {
    Matrix r = m;
    for (double& v : r.data()) v = v > 0.0 ? v : 0.0;
    return r;
}

Matrix softmax_rows(const Matrix& m) {
    Matrix r(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            r(i, j) = std::exp(m(i, j) - mx);
            sum += r(i, j);
        }
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) /= sum;
    }
    ensure_finite(r, "softmax_rows");
    return r;
}

Matrix scale(const Matrix& m, double s) {
    Matrix r = m;
    for (double& v : r.data()) v *= s;
    ensure_finite(r, "scale");
    return r;
}

double sum_all(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v;
    return s;
}

std::vector<double> minmax_normalize(const std::vector<double>& v) {
    if (v.empty()) {
        throw ParamError("minmax_normalize: empty input");
    }
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(v.size(), 0.0);
    if (hi == lo) return out;  // degenerate range maps to all zeros
    const double range = hi - lo;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / range;
    return out;
}

}  // namespace gmacn
