#include "extrap/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "extrap/errors.h"

namespace extrap {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) {
    throw DimensionError(
        fmt::format("matrix dimensions must be positive, got {}x{}", rows,
                    cols));
  }
  if (!std::isfinite(fill)) throw NonFiniteError("non-finite fill value");
  entries_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows == 0 || cols == 0) {
    throw DimensionError(
        fmt::format("matrix dimensions must be positive, got {}x{}", rows,
                    cols));
  }
  if (entries_.size() != rows * cols) {
    throw DimensionError(fmt::format("{}x{} matrix given {} entries", rows,
                                     cols, entries_.size()));
  }
  require_finite(*this, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  require_finite(m, "Matrix::diagonal");
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1,
                std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::row(std::span<const double> values) {
  return Matrix(1, values.size(),
                std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged initializer rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(entries));
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < entries_.size(); ++i)
    entries_[i] += other.entries_[i];
  require_finite(*this, "operator+=");
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < entries_.size(); ++i)
    entries_[i] -= other.entries_[i];
  require_finite(*this, "operator-=");
  return *this;
}

Matrix& Matrix::operator*=(double scale) {
  for (double& e : entries_) e *= scale;
  require_finite(*this, "operator*=");
  return *this;
}

Matrix& Matrix::add_scaled(const Matrix& other, double scale) {
  require_same_shape(*this, other, "add_scaled");
  for (std::size_t i = 0; i < entries_.size(); ++i)
    entries_[i] += scale * other.entries_[i];
  require_finite(*this, "add_scaled");
  return *this;
}

Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }
Matrix operator-(Matrix m) { return m *= -1.0; }
Matrix operator*(double scale, Matrix m) { return m *= scale; }
Matrix operator*(Matrix m, double scale) { return m *= scale; }

Matrix operator*(const Matrix& lhs, const Matrix& rhs) {
  if (lhs.cols() != rhs.rows()) {
    throw DimensionError(fmt::format("cannot multiply {}x{} by {}x{}",
                                     lhs.rows(), lhs.cols(), rhs.rows(),
                                     rhs.cols()));
  }
  Matrix out(lhs.rows(), rhs.cols());
  const std::size_t inner = lhs.cols();
  const std::size_t n = rhs.cols();
  auto o = out.data();
  auto a = lhs.data();
  auto b = rhs.data();
  for (std::size_t i = 0; i < lhs.rows(); ++i) {
    double* orow = o.data() + i * n;
    for (std::size_t p = 0; p < inner; ++p) {
      const double aip = a[i * inner + p];
      if (aip == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  require_finite(out, "operator*");
  return out;
}

Matrix transpose(const Matrix& m) {
  if (m.empty()) return m;
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix hadamard(const Matrix& lhs, const Matrix& rhs) {
  require_same_shape(lhs, rhs, "hadamard");
  Matrix out = lhs;
  auto o = out.data();
  auto r = rhs.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= r[i];
  require_finite(out, "hadamard");
  return out;
}

double trace(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("trace of non-square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

double squared_norm(const Matrix& m) {
  double s = 0.0;
  for (double e : m.data()) s += e * e;
  return s;
}

double frobenius_norm(const Matrix& m) { return std::sqrt(squared_norm(m)); }

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double e : m.data()) best = std::max(best, std::abs(e));
  return best;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data().begin(), m.data().end(),
                     [](double e) { return std::isfinite(e); });
}

void require_same_shape(const Matrix& lhs, const Matrix& rhs,
                        const char* context) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw DimensionError(fmt::format("{}: shape {}x{} vs {}x{}", context,
                                     lhs.rows(), lhs.cols(), rhs.rows(),
                                     rhs.cols()));
  }
}

void require_finite(const Matrix& m, const char* context) {
  if (!all_finite(m)) {
    throw NonFiniteError(fmt::format("{}: non-finite matrix entry", context));
  }
}

Matrix mat_power(const Matrix& a, unsigned power) {
  if (!a.is_square()) throw DimensionError("mat_power of non-square matrix");
  Matrix result = Matrix::identity(a.rows());
  Matrix base = a;
  while (power > 0) {
    if (power & 1U) result = result * base;
    power >>= 1U;
    if (power > 0) base = base * base;
  }
  return result;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Applies the Jacobi rotation that annihilates a(p, q).
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymEig sym_eig(const Matrix& input) {
  if (!input.is_square()) {
    throw DimensionError(fmt::format("sym_eig of non-square {}x{} matrix",
                                     input.rows(), input.cols()));
  }
  const Matrix input_t = transpose(input);
  const double scale = frobenius_norm(input);
  const double asym = frobenius_norm(input - input_t);
  if (asym > 1e-8 * (1.0 + scale)) {
    throw PreconditionError(
        fmt::format("sym_eig requires a symmetric matrix, asymmetry {:g}",
                    asym),
        asym);
  }
  Matrix a = 0.5 * (input + input_t);
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);
  const double threshold = kJacobiRelativeTolerance * frobenius_norm(a);

  int sweep = 0;
  double off = off_diagonal_norm(a);
  while (off > threshold) {
    if (sweep == kJacobiMaxSweeps) {
      throw ConvergenceError(
          fmt::format("Jacobi did not converge in {} sweeps, off-diagonal {:g}",
                      kJacobiMaxSweeps, off),
          off);
    }
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        if (a(p, q) != 0.0) rotate(a, v, p, q);
    ++sweep;
    off = off_diagonal_norm(a);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&a](std::size_t i, std::size_t j) {
                     const double ai = std::abs(a(i, i));
                     const double aj = std::abs(a(j, j));
                     if (ai != aj) return ai > aj;
                     return a(i, i) > a(j, j);
                   });
  SymEig out{std::vector<double>(n), Matrix(n, n), sweep};
  for (std::size_t col = 0; col < n; ++col) {
    out.values[col] = a(order[col], order[col]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, col) = v(r, order[col]);
  }
  return out;
}

CharPoly char_poly(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("char_poly of non-square matrix");
  const std::size_t d = a.rows();
  if (d > kCharPolyMaxDim) {
    throw SizeLimitError(fmt::format(
        "char_poly limited to d <= {}, got {}", kCharPolyMaxDim, d));
  }
  // c[d] = 1; M_k = A M_{k-1} + c_{d-k+1} I; c_{d-k} = -tr(A M_k) / k.
  std::vector<double> c(d + 1, 0.0);
  c[d] = 1.0;
  const Matrix eye = Matrix::identity(d);
  Matrix m(d, d);
  for (std::size_t k = 1; k <= d; ++k) {
    m = a * m;
    m.add_scaled(eye, c[d - k + 1]);
    c[d - k] = -trace(a * m) / static_cast<double>(k);
  }
  CharPoly out;
  out.coefficients.assign(c.begin(), c.begin() + static_cast<long>(d));

  // Horner evaluation of p(A).
  Matrix p = eye;
  for (std::size_t i = d; i-- > 0;) {
    p = a * p;
    p.add_scaled(eye, c[i]);
  }
  out.residual = frobenius_norm(p);
  return out;
}

double spectral_radius(const Matrix& a) {
  if (!a.is_square()) {
    throw DimensionError("spectral_radius of non-square matrix");
  }
  double norm = frobenius_norm(a);
  if (norm == 0.0) return 0.0;
  // A^(2^p) = exp(log_scale) * b with ||b||_F = 1.
  Matrix b = a * (1.0 / norm);
  double log_scale = std::log(norm);
  double estimate = norm;
  constexpr int kSquarings = 60;
  for (int p = 1; p <= kSquarings; ++p) {
    b = b * b;
    norm = frobenius_norm(b);
    if (norm == 0.0) return 0.0;
    b *= 1.0 / norm;
    log_scale = 2.0 * log_scale + std::log(norm);
    estimate = std::exp(std::ldexp(log_scale, -p));
  }
  return estimate;
}

std::string to_string(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += "[";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ", ";
      out += fmt::format("{:.6g}", m(i, j));
    }
    out += "]\n";
  }
  return out;
}

}  // namespace extrap
