#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace forge::kernel {

enum class KernelErrorCode { shape_mismatch, all_keys_masked, bad_argument };

class KernelError : public std::runtime_error {
public:
    KernelError(KernelErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    KernelErrorCode code() const { return code_; }

private:
    KernelErrorCode code_;
};

// Dense row-major matrix over a scalar type (double, or Var when recording a
// differentiation graph).
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols) {
        if (rows <= 0 || cols <= 0) throw KernelError(KernelErrorCode::bad_argument, "matrix dimensions must be positive");
        data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
    }
    Matrix(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows <= 0 || cols <= 0 || data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
            throw KernelError(KernelErrorCode::bad_argument, "matrix data does not match its shape");
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int r, int c) { return data_[index(r, c)]; }
    const T& operator()(int r, int c) const { return data_[index(r, c)]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Tensor2 = Matrix<double>;
// Attention mask: row = query, column = key, nonzero = allowed.
using Mask = Matrix<std::uint8_t>;

inline void require_shape(bool ok, const char* what) {
    if (!ok) throw KernelError(KernelErrorCode::shape_mismatch, what);
}

template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    require_shape(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Matrix<T> out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < b.cols(); ++j) {
            T acc = a(i, 0) * b(0, j);
            for (int k = 1; k < a.cols(); ++k) acc = acc + a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    }
    return out;
}

template <class T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b) {
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
    Matrix<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

// Rows of `top` followed by rows of `bottom`.
template <class T>
Matrix<T> concat_rows(const Matrix<T>& top, const Matrix<T>& bottom) {
    require_shape(top.cols() == bottom.cols(), "concat_rows: column counts differ");
    std::vector<T> data = top.data();
    data.insert(data.end(), bottom.data().begin(), bottom.data().end());
    return Matrix<T>(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

template <class T, class Fn>
Matrix<T> map(const Matrix<T>& a, Fn&& fn) {
    Matrix<T> out = a;
    for (auto& v : out.data()) v = fn(v);
    return out;
}

// 1 x cols mean over rows.
template <class T>
Matrix<T> mean_rows(const Matrix<T>& a) {
    Matrix<T> out(1, a.cols());
    for (int c = 0; c < a.cols(); ++c) {
        T acc = a(0, c);
        for (int r = 1; r < a.rows(); ++r) acc = acc + a(r, c);
        out(0, c) = acc / static_cast<double>(a.rows());
    }
    return out;
}

}  // namespace forge::kernel
