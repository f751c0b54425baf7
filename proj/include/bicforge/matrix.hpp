#pragma once

#include <cstddef>
#include <vector>

namespace bicforge {

// Dense row-major matrix, just large enough for the assignment and interim
// tables in this library.
template <typename T>
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, const T& init = T())
      : rows_(rows), cols_(cols), data_(rows * cols, init) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  T row_sum(std::size_t r) const {
    T s = T();
    for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c);
    return s;
  }
  T col_sum(std::size_t c) const {
    T s = T();
    for (std::size_t r = 0; r < rows_; ++r) s += (*this)(r, c);
    return s;
  }
  T sum() const {
    T s = T();
    for (const T& v : data_) s += v;
    return s;
  }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<T> data_;
};

template <typename From, typename To, typename Fn>
Matrix<To> map_matrix(const Matrix<From>& m, Fn fn) {
  Matrix<To> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = fn(m(r, c));
  return out;
}

}  // namespace bicforge
