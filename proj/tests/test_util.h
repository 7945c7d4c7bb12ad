#ifndef EXTRAP_TESTS_TEST_UTIL_H_
#define EXTRAP_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "extrap/linalg.h"
#include "extrap/model.h"

namespace extrap::testing {

// Test-side randomness comes from std::mt19937_64, independent of the
// library's generator.
inline Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& gen,
                       double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(gen);
  return m;
}

inline Matrix random_symmetric(std::size_t d, std::mt19937_64& gen) {
  const Matrix g = gaussian(d, d, gen);
  return 0.5 * (g + transpose(g));
}

inline LinearRNN random_rnn(std::size_t d, std::size_t n, std::size_t m,
                            std::mt19937_64& gen, double a_scale = 0.8) {
  return LinearRNN(gaussian(d, d, gen, a_scale / std::sqrt(double(d))),
                   gaussian(d, n, gen), gaussian(m, d, gen));
}

// Naive triple loop, independent of the library kernel.
inline Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      out(i, j) = s;
    }
  return out;
}

// Central difference of f at every entry of `blocks`; returns one gradient
// block per parameter block.
inline std::vector<Matrix> numeric_gradient(
    std::vector<Matrix> blocks,
    const std::function<double(const std::vector<Matrix>&)>& f,
    double h = 1e-5) {
  std::vector<Matrix> grads;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    Matrix g(blocks[b].rows(), blocks[b].cols());
    for (std::size_t e = 0; e < blocks[b].size(); ++e) {
      const double saved = blocks[b].data()[e];
      blocks[b].data()[e] = saved + h;
      const double up = f(blocks);
      blocks[b].data()[e] = saved - h;
      const double down = f(blocks);
      blocks[b].data()[e] = saved;
      g.data()[e] = (up - down) / (2 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// Max over entries of |a - b| / max(|a|, |b|, floor).
inline double max_rel_gap(const std::vector<Matrix>& a,
                          const std::vector<Matrix>& b, double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t e = 0; e < a[k].size(); ++e) {
      const double x = a[k].data()[e];
      const double y = b[k].data()[e];
      worst = std::max(worst, std::abs(x - y) /
                                  std::max({std::abs(x), std::abs(y), floor}));
    }
  return worst;
}

// Root of f on [lo, hi] with a sign change, to width tol.
inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, double tol = 1e-13) {
  double flo = f(lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// All real roots of f on [lo, hi], located on a fine scan grid.
inline std::vector<double> scan_roots(const std::function<double(double)>& f,
                                      double lo, double hi,
                                      std::size_t cells = 20000) {
  std::vector<double> roots;
  const double w = (hi - lo) / double(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = lo + w * double(i);
    const double b = a + w;
    if ((f(a) < 0) != (f(b) < 0)) roots.push_back(bisect(f, a, b));
  }
  return roots;
}

// Brute-force output of (A, B, C) on one sequence (columns x_1..x_l):
// sum_i C A^{l-i} B x_i, powers formed by repeated naive products.
inline Matrix brute_force_output(const LinearRNN& m, const Matrix& x) {
  const std::size_t l = x.cols();
  Matrix y(m.C.rows(), 1);
  for (std::size_t i = 0; i < l; ++i) {
    Matrix p = Matrix::identity(m.A.rows());
    for (std::size_t r = 0; r < l - 1 - i; ++r) p = naive_product(p, m.A);
    Matrix xi(x.rows(), 1);
    for (std::size_t c = 0; c < x.rows(); ++c) xi(c, 0) = x(c, i);
    y += naive_product(naive_product(naive_product(m.C, p), m.B), xi);
  }
  return y;
}

}  // namespace extrap::testing

#endif  // EXTRAP_TESTS_TEST_UTIL_H_
