#include "acvae/matrix.hpp"

#include <cmath>
#include <string>

#include "acvae/errors.hpp"

namespace acvae {

void Matrix::fill(double value) {
    for (double& v : data) v = value;
}

bool Matrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
    if (m.rows != rows || m.cols != cols) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + shape_str(m));
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: " + shape_str(a) + " * " + shape_str(b));
    }
    Matrix out(a.rows, b.cols, 0.0);
    const std::size_t k = a.cols;
    const std::size_t c = b.cols;
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b.row_ptr(kk);
            for (std::size_t j = 0; j < c; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw DimensionError("matmul_at_b: " + shape_str(a) + "^T * " + shape_str(b));
    }
    Matrix out(a.cols, b.cols, 0.0);
    const std::size_t c = b.cols;
    for (std::size_t s = 0; s < a.rows; ++s) {
        const double* arow = a.row_ptr(s);
        const double* brow = b.row_ptr(s);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            double* orow = out.row_ptr(i);
            for (std::size_t j = 0; j < c; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw DimensionError("matmul_a_bt: " + shape_str(a) + " * " + shape_str(b) + "^T");
    }
    Matrix out(a.rows, b.rows, 0.0);
    const std::size_t k = a.cols;
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            orow[j] = acc;
        }
    }
    return out;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
    if (b.cols == 0) return a;
    if (a.cols == 0) return b;
    if (a.rows != b.rows) {
        throw DimensionError("concat_cols: " + shape_str(a) + " ++ " + shape_str(b));
    }
    Matrix out(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* orow = out.row_ptr(i);
        const double* arow = a.row_ptr(i);
        const double* brow = b.row_ptr(i);
        for (std::size_t j = 0; j < a.cols; ++j) orow[j] = arow[j];
        for (std::size_t j = 0; j < b.cols; ++j) orow[a.cols + j] = brow[j];
    }
    return out;
}

void split_cols(const Matrix& m, std::size_t left_cols, Matrix& left, Matrix& right) {
    if (left_cols > m.cols) {
        throw DimensionError("split_cols: " + std::to_string(left_cols) + " > " + shape_str(m));
    }
    left = Matrix(m.rows, left_cols);
    right = Matrix(m.rows, m.cols - left_cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* mrow = m.row_ptr(i);
        for (std::size_t j = 0; j < left_cols; ++j) left(i, j) = mrow[j];
        for (std::size_t j = left_cols; j < m.cols; ++j) right(i, j - left_cols) = mrow[j];
    }
}

namespace {

void require_same(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": " + shape_str(a) + " vs " + shape_str(b));
    }
}

}  // namespace

Matrix add(const Matrix& a, const Matrix& b) {
    require_same(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data) v *= s;
    return out;
}

void add_row_inplace(Matrix& m, const Matrix& bias_row) {
    if (bias_row.rows != 1 || bias_row.cols != m.cols) {
        throw DimensionError("add_row_inplace: " + shape_str(m) + " += " + shape_str(bias_row));
    }
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* mrow = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) mrow[j] += bias_row.data[j];
    }
}

Matrix col_sums(const Matrix& m) {
    Matrix out(1, m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* mrow = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) out.data[j] += mrow[j];
    }
    return out;
}

double sum(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data) acc += v;
    return acc;
}

double mean(const Matrix& m) {
    if (m.empty()) return 0.0;
    return sum(m) / static_cast<double>(m.size());
}

}  // namespace acvae
