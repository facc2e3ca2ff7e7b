#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "symgain/errors.hpp"

namespace symgain {

/// Dense row-major matrix for desk-scale linear algebra (n up to a few
/// hundred). Everything the certificate machinery needs lives here:
/// Cholesky, a cyclic Jacobi eigensolver for symmetric matrices, and the
/// few products built on top of them.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix eye(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix from_rows(std::vector<std::vector<double>> rows) {
    if (rows.empty()) return Matrix();
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < m.rows_; ++i) {
      if (rows[i].size() != m.cols_)
        throw DimensionMismatch("ragged matrix rows");
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw DimensionMismatch("matrix product shape");
    Matrix r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }

  Matrix operator+(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionMismatch("matrix sum shape");
    Matrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
  }
  Matrix operator-(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionMismatch("matrix difference shape");
    Matrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
  }
  Matrix scaled(double a) const {
    Matrix r = *this;
    for (double& v : r.data_) v *= a;
    return r;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    if (x.size() != cols_) throw DimensionMismatch("matrix-vector shape");
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Induced infinity norm (max absolute row sum).
  double inf_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
      m = std::max(m, s);
    }
    return m;
  }

  bool is_symmetric(double tol = 0.0) const {
    if (rows_ != cols_) return false;
    double scale = std::max(max_abs(), 1.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol * scale) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// Cholesky factorization A = L L^T. Returns false when A is not positive
/// definite (within roundoff).
inline bool cholesky(const Matrix& a, Matrix& l) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionMismatch("cholesky needs a square matrix");
  l = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(s > 0.0)) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return true;
}

inline bool is_positive_definite(const Matrix& a) {
  Matrix l;
  return cholesky(a, l);
}

struct EigenSym {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors, same order
};

/// Cyclic Jacobi iteration for a symmetric matrix. Relative off-diagonal
/// tolerance 1e-14 of the initial Frobenius scale; at desk scale this
/// converges in a handful of sweeps.
inline EigenSym jacobi_eigensym(Matrix a, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionMismatch("eigensym needs a square matrix");
  if (!a.is_symmetric(1e-12))
    throw NotSymmetric("jacobi_eigensym: matrix is not symmetric");
  Matrix v = Matrix::eye(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale += a(i, j) * a(i, j);
  scale = std::sqrt(scale);
  const double tol = (scale == 0.0 ? 0.0 : 1e-14 * scale);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= tol / (n * n + 1.0)) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenSym e;
  e.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) e.values[i] = a(i, i);
  // sort ascending, permuting eigenvector columns alongside
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return e.values[x] < e.values[y];
  });
  EigenSym out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = e.values[order[c]];
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

inline double lambda_min(const Matrix& a) { return jacobi_eigensym(a).values.front(); }
inline double lambda_max(const Matrix& a) { return jacobi_eigensym(a).values.back(); }

/// Symmetric square root of an SPD matrix via eigendecomposition.
inline Matrix sqrt_spd(const Matrix& a) {
  EigenSym e = jacobi_eigensym(a);
  const std::size_t n = a.rows();
  for (double lv : e.values)
    if (!(lv > 0.0)) throw NotPD("sqrt_spd: matrix not positive definite");
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) d(i, i) = std::sqrt(e.values[i]);
  return e.vectors * d * e.vectors.transpose();
}

/// Spectral norm of a (rectangular) matrix: sqrt(lambda_max(M^T M)).
inline double spectral_norm(const Matrix& m) {
  if (m.empty()) return 0.0;
  Matrix g = m.transpose() * m;
  double lm = lambda_max(g);
  return lm > 0.0 ? std::sqrt(lm) : 0.0;
}

}  // namespace symgain
