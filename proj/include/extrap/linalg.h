#ifndef EXTRAP_LINALG_H_
#define EXTRAP_LINALG_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace extrap {

// Dense row-major matrix of doubles.
//
// A default-constructed Matrix is empty (0x0) and only useful as a
// placeholder; every other constructor requires positive dimensions. Entries
// are checked for finiteness on construction and after each arithmetic
// kernel, which throw NonFiniteError on violation.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  static Matrix column(std::span<const double> values);
  static Matrix row(std::span<const double> values);
  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return entries_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return entries_[r * cols_ + c];
  }

  std::span<double> data() { return entries_; }
  std::span<const double> data() const { return entries_; }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double scale);

  // Adds scale * other in place.
  Matrix& add_scaled(const Matrix& other, double scale);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix m);
Matrix operator*(const Matrix& lhs, const Matrix& rhs);
Matrix operator*(double scale, Matrix m);
Matrix operator*(Matrix m, double scale);

Matrix transpose(const Matrix& m);
Matrix hadamard(const Matrix& lhs, const Matrix& rhs);
double trace(const Matrix& m);
double frobenius_norm(const Matrix& m);
double squared_norm(const Matrix& m);
double max_abs(const Matrix& m);
bool all_finite(const Matrix& m);

// A^power by binary exponentiation; A^0 = I.
Matrix mat_power(const Matrix& a, unsigned power);

// Throws DimensionError unless lhs and rhs have equal shape.
void require_same_shape(const Matrix& lhs, const Matrix& rhs,
                        const char* context);
void require_finite(const Matrix& m, const char* context);

// Symmetric eigendecomposition A = V diag(values) V^T.
struct SymEig {
  std::vector<double> values;  // sorted by descending |lambda|
  Matrix vectors;              // columns are the eigenvectors
  int sweeps = 0;
};

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiRelativeTolerance = 1e-12;

// Cyclic Jacobi. The input is symmetrized as (A + A^T)/2 first, after
// checking ||A - A^T||_F <= 1e-8 (1 + ||A||_F). Throws ConvergenceError
// carrying the final off-diagonal norm when the sweep budget runs out.
SymEig sym_eig(const Matrix& a);

inline constexpr std::size_t kCharPolyMaxDim = 32;

// Monic characteristic polynomial p(z) = z^d + sum_i coefficients[i] z^i.
struct CharPoly {
  std::vector<double> coefficients;  // rho_0 ... rho_{d-1}
  double residual = 0.0;             // ||p(A)||_F
};

// Faddeev-LeVerrier recursion; d <= 32.
CharPoly char_poly(const Matrix& a);

// Gelfand-formula estimate of the spectral radius via repeated squaring,
// lim ||A^(2^p)||^(1/2^p). Works for non-symmetric A.
double spectral_radius(const Matrix& a);

std::string to_string(const Matrix& m);

}  // namespace extrap

#endif  // EXTRAP_LINALG_H_
