#pragma once

// Independent reference computations used only by the tests.

#include <cstdint>
#include <random>
#include <vector>

#include "sft/graded_linear.hpp"

namespace oracle {

// Fraction-free Bareiss elimination on an integer matrix.
inline size_t bareiss_rank(std::vector<std::vector<__int128>> a) {
  size_t rows = a.size();
  if (!rows) return 0;
  size_t cols = a[0].size();
  __int128 prev = 1;
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t p = r;
    while (p < rows && a[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(a[p], a[r]);
    for (size_t i = r + 1; i < rows; ++i) {
      for (size_t j = c + 1; j < cols; ++j) a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) / prev;
      a[i][c] = 0;
    }
    prev = a[r][c];
    ++r;
  }
  return r;
}

// Rank of a rational matrix: scale each row to integers, then Bareiss.
inline size_t rational_rank(const sft::Matrix& m) {
  std::vector<std::vector<__int128>> a(m.rows(), std::vector<__int128>(m.cols()));
  for (size_t i = 0; i < m.rows(); ++i) {
    mpz_class l = 1;
    for (size_t j = 0; j < m.cols(); ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(i, j).get_den_mpz_t());
    for (size_t j = 0; j < m.cols(); ++j) {
      mpz_class v = m(i, j).get_num() * (l / m(i, j).get_den());
      a[i][j] = static_cast<__int128>(v.get_si());
    }
  }
  return bareiss_rank(std::move(a));
}

// Random integer matrix with unit determinant: product of a permuted unit lower and a unit upper factor.
inline sft::Matrix random_unimodular(size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> small(-2, 2);
  sft::Matrix L = sft::Matrix::identity(n), U = sft::Matrix::identity(n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < i; ++j) {
      L(i, j) = small(rng);
      U(j, i) = small(rng);
    }
  std::vector<int> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  sft::Matrix P(n, n);
  for (size_t i = 0; i < n; ++i) P(i, perm[i]) = 1;
  return P * L * U;
}

// Random complex on degrees lo..lo+dims.size()-1: a direct sum of contractible pairs
// and isolated generators, conjugated by random unimodular basis changes.
inline sft::ChainComplex random_complex(int lo, const std::vector<size_t>& dims, std::mt19937_64& rng) {
  size_t n = dims.size();
  std::vector<size_t> next(n, 0);
  std::vector<sft::Matrix> std_d(n);
  for (size_t i = 0; i < n; ++i) std_d[i] = sft::Matrix(i ? dims[i - 1] : 0, dims[i]);
  for (size_t i = 1; i < n; ++i) {
    size_t maxp = std::min(dims[i] - next[i], dims[i - 1] - next[i - 1]);
    size_t pairs = std::uniform_int_distribution<size_t>(0, maxp)(rng);
    for (size_t p = 0; p < pairs; ++p) std_d[i](next[i - 1] + p, next[i] + p) = 1;
    next[i - 1] += pairs;
    next[i] += pairs;
  }
  std::vector<sft::Matrix> P(n), Pinv(n);
  for (size_t i = 0; i < n; ++i) {
    P[i] = random_unimodular(dims[i], rng);
    Pinv[i] = *sft::inverse(P[i]);
  }
  std::vector<sft::Matrix> d(n);
  for (size_t i = 0; i < n; ++i) d[i] = i ? P[i - 1] * std_d[i] * Pinv[i] : sft::Matrix(0, dims[i]);
  return sft::ChainComplex::from_dims(lo, dims, std::move(d));
}

inline sft::Matrix random_matrix(size_t r, size_t c, std::mt19937_64& rng, int lo = -2, int hi = 2) {
  std::uniform_int_distribution<int> dist(lo, hi);
  sft::Matrix m(r, c);
  for (size_t i = 0; i < r; ++i)
    for (size_t j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace oracle

namespace oracle {

// Random chain map A -> B: random point of the solution space of d f = f d.
inline sft::ChainMap random_chain_map(const sft::ChainComplex& A, const sft::ChainComplex& B, std::mt19937_64& rng) {
  int lo = std::min(A.lo(), B.lo()), hi = std::max(A.hi(), B.hi());
  std::vector<size_t> offset;
  size_t unknowns = 0;
  for (int k = lo; k <= hi; ++k) {
    offset.push_back(unknowns);
    unknowns += A.dim(k) * B.dim(k);
  }
  std::vector<std::vector<sft::Rational>> rows;
  for (int k = lo; k <= hi + 1; ++k) {
    // (d_B f_k - f_{k-1} d_A)(r, c) for r in B_{k-1}, c in A_k
    sft::Matrix dA = A.d(k), dB = B.d(k);
    for (size_t r = 0; r < B.dim(k - 1); ++r)
      for (size_t c = 0; c < A.dim(k); ++c) {
        std::vector<sft::Rational> row(unknowns);
        if (k <= hi)
          for (size_t t = 0; t < B.dim(k); ++t) row[offset[k - lo] + t * A.dim(k) + c] += dB(r, t);
        if (k - 1 >= lo)
          for (size_t t = 0; t < A.dim(k - 1); ++t) row[offset[k - 1 - lo] + r * A.dim(k - 1) + t] -= dA(t, c);
        rows.push_back(std::move(row));
      }
  }
  sft::Matrix M(rows.size(), unknowns);
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < unknowns; ++j) M(i, j) = rows[i][j];
  sft::Matrix K = sft::kernel(M);
  std::uniform_int_distribution<int> coef(-2, 2);
  std::vector<sft::Rational> x(unknowns);
  for (size_t j = 0; j < K.cols(); ++j) {
    int c = coef(rng);
    if (!c) continue;
    for (size_t i = 0; i < unknowns; ++i) x[i] += c * K(i, j);
  }
  std::map<int, sft::Matrix> comp;
  for (int k = lo; k <= hi; ++k) {
    sft::Matrix f(B.dim(k), A.dim(k));
    for (size_t r = 0; r < B.dim(k); ++r)
      for (size_t c = 0; c < A.dim(k); ++c) f(r, c) = x[offset[k - lo] + r * A.dim(k) + c];
    comp[k] = f;
  }
  return sft::ChainMap(A, B, std::move(comp));
}

inline std::vector<size_t> random_dims(size_t degrees, size_t maxdim, std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> d(0, maxdim);
  std::vector<size_t> v(degrees);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace oracle
