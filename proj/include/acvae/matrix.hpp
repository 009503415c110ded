#pragma once

#include <cstddef>
#include <vector>

namespace acvae {

// Dense row-major matrix of doubles. The whole pipeline runs in 64-bit
// precision; the networks are small and the gradient checks need it.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    void fill(double value);
    bool all_finite() const;
};

// out = a * b, shapes (r x k)(k x c).
Matrix matmul(const Matrix& a, const Matrix& b);

// out = a^T * b, shapes (k x r)^T (k x c) -> (r x c). Used for weight grads.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

// out = a * b^T, shapes (r x k)(c x k)^T -> (r x c). Used for input grads.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

// Column-wise concatenation; b may have zero columns.
Matrix concat_cols(const Matrix& a, const Matrix& b);

// Splits m into the first `left_cols` columns and the rest.
void split_cols(const Matrix& m, std::size_t left_cols, Matrix& left, Matrix& right);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

// Adds the 1 x cols bias row to every row of m.
void add_row_inplace(Matrix& m, const Matrix& bias_row);

// Sum of each column, returned as a 1 x cols matrix.
Matrix col_sums(const Matrix& m);

double sum(const Matrix& m);
double mean(const Matrix& m);

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what);

}  // namespace acvae
