#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridopt {

/// Factorization/solve failure (singular system, dimension mismatch).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix with optional row/column labels.
///
/// Labels carry bus ids or line keys so that CSV emission and slack lookups
/// work without a side table. When present their length must match the
/// dimensions.
template <typename T>
class BasicMatrix {
 public:
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values)
      : rows_(rows), cols_(cols), data_(values) {
    if (data_.size() != rows * cols) throw std::invalid_argument("matrix initializer size mismatch");
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<T>& data() const { return data_; }

  std::vector<T> row(std::size_t i) const {
    return std::vector<T>(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                          data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
  }
  std::vector<T> col(std::size_t j) const {
    std::vector<T> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  BasicMatrix transposed() const {
    BasicMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    t.row_labels = col_labels;
    t.col_labels = row_labels;
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (const T& v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend bool operator==(const BasicMatrix& a, const BasicMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using CMatrix = BasicMatrix<std::complex<double>>;

template <typename T>
BasicMatrix<T> operator*(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) throw NumericalError("matrix product dimension mismatch");
  BasicMatrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  out.row_labels = a.row_labels;
  out.col_labels = b.col_labels;
  return out;
}

template <typename T>
std::vector<T> operator*(const BasicMatrix<T>& a, const std::vector<T>& x) {
  if (a.cols() != x.size()) throw NumericalError("matrix-vector dimension mismatch");
  std::vector<T> out(a.rows(), T{});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[i] += a(i, j) * x[j];
  return out;
}

/// PA = LU factorization with partial pivoting, combined L\U storage.
///
/// A pivot below kSingularTol * max|A| aborts with the offending column, so a
/// structurally singular system (e.g. a full bus susceptance matrix) is
/// reported instead of silently producing garbage.
struct LuFactors {
  Matrix lu;                  // unit-lower below the diagonal, upper on/above
  std::vector<std::size_t> perm;  // row permutation applied to A
  int parity = 1;

  std::size_t dim() const { return lu.rows(); }

  /// Solve A x = b.
  std::vector<double> solve(const std::vector<double>& b) const {
    const std::size_t n = dim();
    if (b.size() != n) throw NumericalError("lu_solve dimension mismatch");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu(ii, j) * x[j];
      x[ii] /= lu(ii, ii);
    }
    return x;
  }

  /// Solve A^T x = b (used for simplex dual prices).
  std::vector<double> solve_transposed(const std::vector<double>& b) const {
    const std::size_t n = dim();
    if (b.size() != n) throw NumericalError("lu_solve dimension mismatch");
    // A^T = U^T L^T P, so forward with U^T, back with L^T, then undo P.
    std::vector<double> y(b);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) y[i] -= lu(j, i) * y[j];
      y[i] /= lu(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;)
      for (std::size_t j = ii + 1; j < n; ++j) y[ii] -= lu(j, ii) * y[j];
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm[i]] = y[i];
    return x;
  }
};

inline constexpr double kSingularTol = 1e-12;

inline LuFactors lu_factor(const Matrix& a) {
  if (!a.square()) throw NumericalError("lu_factor requires a square matrix");
  const std::size_t n = a.rows();
  LuFactors f;
  f.lu = a;
  f.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  const double scale = std::max(a.max_abs(), 1e-300);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    double best = std::abs(f.lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(f.lu(i, k));
      if (v > best) {
        best = v;
        pivot = i;
      }
    }
    if (best < kSingularTol * scale)
      throw NumericalError("singular matrix (pivot column " + std::to_string(k) + ")");
    if (pivot != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(pivot, j));
      std::swap(f.perm[k], f.perm[pivot]);
      f.parity = -f.parity;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      f.lu(i, k) /= f.lu(k, k);
      const double m = f.lu(i, k);
      if (m == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
    }
  }
  return f;
}

inline std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& b) {
  return f.solve(b);
}

inline Matrix invert(const Matrix& a) {
  const LuFactors f = lu_factor(a);
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const std::vector<double> x = f.solve(e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
    e[j] = 0.0;
  }
  inv.row_labels = a.col_labels;
  inv.col_labels = a.row_labels;
  return inv;
}

/// 6 significant digits, '.' decimal separator; negative zero normalized.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string format_number(std::complex<double> v) {
  double re = v.real() == 0.0 ? 0.0 : v.real();
  double im = v.imag() == 0.0 ? 0.0 : v.imag();
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.6g%+.6gj", re, im);
  return buf;
}

/// CSV with a header row of column labels and one leading label per row.
/// LF line endings.
template <typename T>
std::string to_csv(const BasicMatrix<T>& m) {
  if (!m.col_labels.empty() && m.col_labels.size() != m.cols())
    throw std::invalid_argument("column label count mismatch");
  if (!m.row_labels.empty() && m.row_labels.size() != m.rows())
    throw std::invalid_argument("row label count mismatch");
  std::string out;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    out += ',';
    out += m.col_labels.empty() ? "c" + std::to_string(j) : m.col_labels[j];
  }
  out += '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += m.row_labels.empty() ? "r" + std::to_string(i) : m.row_labels[i];
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out += ',';
      out += format_number(m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace gridopt
