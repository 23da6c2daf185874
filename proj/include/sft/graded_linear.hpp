#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sft/errors.hpp"
#include "sft/rational.hpp"

namespace sft {

// Sign of rearranging (x_0..x_{n-1}) into (x_{perm[0]}..x_{perm[n-1]}).
inline int koszul_sign(const std::vector<int>& perm, const std::vector<int>& parities) {
  if (perm.size() != parities.size()) throw InvalidInput("koszul_sign: length mismatch");
  const int n = static_cast<int>(perm.size());
  std::vector<char> seen(n, 0);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]) throw InvalidInput("koszul_sign: not a permutation");
    seen[p] = 1;
  }
  int s = 1;
  for (int i = 0; i < n; ++i) {
    if (!(parities[perm[i]] & 1)) continue;
    for (int j = i + 1; j < n; ++j)
      if (perm[i] > perm[j] && (parities[perm[j]] & 1)) s = -s;
  }
  return s;
}

// Sign of stably sorting a sequence of keys, where only odd items anticommute.
template <class Key>
int sort_sign(std::vector<Key>& keys, const std::vector<int>& parities) {
  std::vector<int> idx(keys.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  int s = koszul_sign(idx, parities);
  std::vector<Key> sorted;
  sorted.reserve(keys.size());
  for (int i : idx) sorted.push_back(keys[i]);
  keys = std::move(sorted);
  return s;
}

class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t r, size_t c) : r_(r), c_(c), a_(r * c) {}

  static Matrix identity(size_t n) {
    Matrix m(n, n);
    for (size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  size_t rows() const { return r_; }
  size_t cols() const { return c_; }
  Rational& operator()(size_t i, size_t j) { return a_[i * c_ + j]; }
  const Rational& operator()(size_t i, size_t j) const { return a_[i * c_ + j]; }

  bool is_zero() const {
    for (const auto& x : a_)
      if (x != 0) return false;
    return true;
  }

  friend bool operator==(const Matrix& x, const Matrix& y) {
    return x.r_ == y.r_ && x.c_ == y.c_ && x.a_ == y.a_;
  }

  friend Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.c_ != y.r_) throw InvalidInput("matrix product: shape mismatch");
    Matrix z(x.r_, y.c_);
    for (size_t i = 0; i < x.r_; ++i)
      for (size_t k = 0; k < x.c_; ++k) {
        const Rational& a = x(i, k);
        if (a == 0) continue;
        for (size_t j = 0; j < y.c_; ++j)
          if (y(k, j) != 0) z(i, j) += a * y(k, j);
      }
    return z;
  }

  friend Matrix operator+(Matrix x, const Matrix& y) {
    if (x.r_ != y.r_ || x.c_ != y.c_) throw InvalidInput("matrix sum: shape mismatch");
    for (size_t i = 0; i < x.a_.size(); ++i) x.a_[i] += y.a_[i];
    return x;
  }

  friend Matrix operator-(Matrix x, const Matrix& y) {
    if (x.r_ != y.r_ || x.c_ != y.c_) throw InvalidInput("matrix difference: shape mismatch");
    for (size_t i = 0; i < x.a_.size(); ++i) x.a_[i] -= y.a_[i];
    return x;
  }

  Matrix operator-() const {
    Matrix z = *this;
    for (auto& x : z.a_) x = -x;
    return z;
  }

  Matrix scaled(const Rational& s) const {
    Matrix z = *this;
    for (auto& x : z.a_) x *= s;
    return z;
  }

  Matrix transpose() const {
    Matrix t(c_, r_);
    for (size_t i = 0; i < r_; ++i)
      for (size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  std::vector<Rational> apply(const std::vector<Rational>& v) const {
    if (v.size() != c_) throw InvalidInput("matrix apply: shape mismatch");
    std::vector<Rational> out(r_);
    for (size_t i = 0; i < r_; ++i)
      for (size_t j = 0; j < c_; ++j)
        if ((*this)(i, j) != 0 && v[j] != 0) out[i] += (*this)(i, j) * v[j];
    return out;
  }

  std::vector<Rational> column(size_t j) const {
    std::vector<Rational> v(r_);
    for (size_t i = 0; i < r_; ++i) v[i] = (*this)(i, j);
    return v;
  }

  static Matrix from_columns(size_t rows, const std::vector<std::vector<Rational>>& cols) {
    Matrix m(rows, cols.size());
    for (size_t j = 0; j < cols.size(); ++j)
      for (size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
    return m;
  }

  Matrix hstack(const Matrix& y) const {
    if (r_ != y.r_) throw InvalidInput("hstack: row mismatch");
    Matrix z(r_, c_ + y.c_);
    for (size_t i = 0; i < r_; ++i) {
      for (size_t j = 0; j < c_; ++j) z(i, j) = (*this)(i, j);
      for (size_t j = 0; j < y.c_; ++j) z(i, c_ + j) = y(i, j);
    }
    return z;
  }

  void set_block(size_t r0, size_t c0, const Matrix& b) {
    for (size_t i = 0; i < b.r_; ++i)
      for (size_t j = 0; j < b.c_; ++j) (*this)(r0 + i, c0 + j) = b(i, j);
  }

  Matrix block(size_t r0, size_t c0, size_t nr, size_t nc) const {
    Matrix b(nr, nc);
    for (size_t i = 0; i < nr; ++i)
      for (size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

 private:
  size_t r_ = 0, c_ = 0;
  std::vector<Rational> a_;
};

// Reduced row echelon form in place; returns pivot columns.
inline std::vector<size_t> rref(Matrix& m) {
  std::vector<size_t> pivots;
  size_t row = 0;
  for (size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
    size_t p = row;
    while (p < m.rows() && m(p, col) == 0) ++p;
    if (p == m.rows()) continue;
    if (p != row)
      for (size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(row, j));
    Rational inv = 1 / m(row, col);
    for (size_t j = col; j < m.cols(); ++j) m(row, j) *= inv;
    for (size_t i = 0; i < m.rows(); ++i) {
      if (i == row || m(i, col) == 0) continue;
      Rational f = m(i, col);
      for (size_t j = col; j < m.cols(); ++j)
        if (m(row, j) != 0) m(i, j) -= f * m(row, j);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

inline size_t rank(Matrix m) { return rref(m).size(); }

// Basis of the null space, one column per free variable.
inline Matrix kernel(const Matrix& a) {
  Matrix m = a;
  auto piv = rref(m);
  std::vector<char> is_piv(a.cols(), 0);
  for (auto p : piv) is_piv[p] = 1;
  std::vector<std::vector<Rational>> cols;
  for (size_t f = 0; f < a.cols(); ++f) {
    if (is_piv[f]) continue;
    std::vector<Rational> v(a.cols());
    v[f] = 1;
    for (size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m(r, f);
    cols.push_back(std::move(v));
  }
  return Matrix::from_columns(a.cols(), cols);
}

// Some x with a x = b, or nothing.
inline std::optional<std::vector<Rational>> solve(const Matrix& a, const std::vector<Rational>& b) {
  if (b.size() != a.rows()) throw InvalidInput("solve: shape mismatch");
  Matrix m(a.rows(), a.cols() + 1);
  m.set_block(0, 0, a);
  for (size_t i = 0; i < a.rows(); ++i) m(i, a.cols()) = b[i];
  auto piv = rref(m);
  if (!piv.empty() && piv.back() == a.cols()) return std::nullopt;
  std::vector<Rational> x(a.cols());
  for (size_t r = 0; r < piv.size(); ++r) x[piv[r]] = m(r, a.cols());
  return x;
}

// Solves a X = B column by column; nothing if any column is unsolvable.
inline std::optional<Matrix> solve_matrix(const Matrix& a, const Matrix& b) {
  if (b.rows() != a.rows()) throw InvalidInput("solve_matrix: shape mismatch");
  Matrix m = a.hstack(b);
  auto piv = rref(m);
  Matrix x(a.cols(), b.cols());
  for (size_t r = 0; r < piv.size(); ++r) {
    if (piv[r] >= a.cols()) return std::nullopt;
    for (size_t j = 0; j < b.cols(); ++j) x(piv[r], j) = m(r, a.cols() + j);
  }
  return x;
}

inline std::optional<Matrix> inverse(const Matrix& a) {
  if (a.rows() != a.cols()) return std::nullopt;
  if (rank(a) != a.rows()) return std::nullopt;
  return solve_matrix(a, Matrix::identity(a.rows()));
}

struct BasisElement {
  std::string label;
  int parity = 0;
  Rational weight = 0;
};

class GradedSpace {
 public:
  GradedSpace() = default;
  explicit GradedSpace(std::vector<BasisElement> basis) : basis_(std::move(basis)) {
    std::set<std::string> seen;
    for (auto& b : basis_) {
      if (!seen.insert(b.label).second) throw InvalidInput("duplicate basis label '" + b.label + "'");
      if (b.weight < 0) throw InvalidInput("negative filtration weight");
      b.parity &= 1;
    }
  }
  static GradedSpace anonymous(size_t n, const std::string& prefix = "e", int parity = 0) {
    std::vector<BasisElement> b;
    for (size_t i = 0; i < n; ++i) b.push_back({prefix + std::to_string(i), parity, 0});
    return GradedSpace(std::move(b));
  }
  size_t dim() const { return basis_.size(); }
  const std::vector<BasisElement>& basis() const { return basis_; }
  const BasisElement& operator[](size_t i) const { return basis_[i]; }

 private:
  std::vector<BasisElement> basis_;
};

// Homological convention: d_k maps C_k to C_{k-1}.
class ChainComplex {
 public:
  ChainComplex() = default;

  ChainComplex(int lo, std::vector<GradedSpace> spaces, std::vector<Matrix> d)
      : lo_(lo), spaces_(std::move(spaces)), d_(std::move(d)) {
    if (d_.size() != spaces_.size()) throw InvalidInput("chain complex: one differential per degree");
    for (size_t i = 0; i < spaces_.size(); ++i) {
      int k = lo_ + static_cast<int>(i);
      if (d_[i].cols() != dim(k) || d_[i].rows() != dim(k - 1))
        throw InvalidInput("chain complex: differential shape mismatch in degree " + std::to_string(k));
    }
    for (size_t i = 1; i < spaces_.size(); ++i)
      if (!(d_[i - 1] * d_[i]).is_zero())
        throw InvalidInput("chain complex: d^2 != 0 in degree " + std::to_string(lo_ + static_cast<int>(i)));
  }

  // Convenience: anonymous bases of the given dimensions.
  static ChainComplex from_dims(int lo, const std::vector<size_t>& dims, std::vector<Matrix> d) {
    std::vector<GradedSpace> sp;
    for (size_t i = 0; i < dims.size(); ++i)
      sp.push_back(GradedSpace::anonymous(dims[i], "c" + std::to_string(lo + static_cast<int>(i)) + "_",
                                          (lo + static_cast<int>(i)) & 1));
    return ChainComplex(lo, std::move(sp), std::move(d));
  }

  int lo() const { return lo_; }
  int hi() const { return lo_ + static_cast<int>(spaces_.size()) - 1; }
  bool empty_window() const { return spaces_.empty(); }

  size_t dim(int k) const {
    if (k < lo_ || k > hi()) return 0;
    return spaces_[k - lo_].dim();
  }

  const GradedSpace& space(int k) const {
    static const GradedSpace none;
    if (k < lo_ || k > hi()) return none;
    return spaces_[k - lo_];
  }

  Matrix d(int k) const {
    if (k < lo_ || k > hi()) return Matrix(dim(k - 1), dim(k));
    return d_[k - lo_];
  }

  size_t total_dim() const {
    size_t s = 0;
    for (auto& sp : spaces_) s += sp.dim();
    return s;
  }

 private:
  int lo_ = 0;
  std::vector<GradedSpace> spaces_;
  std::vector<Matrix> d_;
};

inline std::map<int, size_t> homology_dimensions(const ChainComplex& c) {
  std::map<int, size_t> h;
  for (int k = c.lo(); k <= c.hi(); ++k) {
    size_t rk = rank(c.d(k)), rk1 = rank(c.d(k + 1));
    h[k] = c.dim(k) - rk - rk1;
  }
  return h;
}

inline long euler_characteristic(const ChainComplex& c) {
  long e = 0;
  for (int k = c.lo(); k <= c.hi(); ++k) e += (k % 2 == 0 ? 1 : -1) * static_cast<long>(c.dim(k));
  return e;
}

inline bool is_acyclic(const ChainComplex& c) {
  for (auto& [k, h] : homology_dimensions(c))
    if (h) return false;
  return true;
}

class ChainMap {
 public:
  ChainMap() = default;

  // Missing degrees are zero.
  ChainMap(ChainComplex source, ChainComplex target, std::map<int, Matrix> components, bool check = true)
      : src_(std::move(source)), tgt_(std::move(target)), f_(std::move(components)) {
    for (auto& [k, m] : f_)
      if (m.rows() != tgt_.dim(k) || m.cols() != src_.dim(k))
        throw InvalidInput("chain map: component shape mismatch in degree " + std::to_string(k));
    if (check) {
      auto bad = first_noncommuting_degree();
      if (bad) throw NotAChainMap("chain map does not commute with d in degree " + std::to_string(*bad));
    }
  }

  const ChainComplex& source() const { return src_; }
  const ChainComplex& target() const { return tgt_; }

  Matrix at(int k) const {
    auto it = f_.find(k);
    if (it == f_.end()) return Matrix(tgt_.dim(k), src_.dim(k));
    return it->second;
  }

  int lo() const { return std::min(src_.lo(), tgt_.lo()); }
  int hi() const { return std::max(src_.hi(), tgt_.hi()); }

  std::optional<int> first_noncommuting_degree() const {
    for (int k = lo(); k <= hi() + 1; ++k)
      if (!(tgt_.d(k) * at(k) == at(k - 1) * src_.d(k))) return k;
    return std::nullopt;
  }

  static ChainMap identity(const ChainComplex& c) {
    std::map<int, Matrix> m;
    for (int k = c.lo(); k <= c.hi(); ++k) m[k] = Matrix::identity(c.dim(k));
    return ChainMap(c, c, std::move(m), false);
  }

  static ChainMap zero(const ChainComplex& s, const ChainComplex& t) { return ChainMap(s, t, {}, false); }

  bool equals(const ChainMap& g) const {
    int a = std::min(lo(), g.lo()), b = std::max(hi(), g.hi());
    for (int k = a; k <= b; ++k)
      if (!(at(k) == g.at(k))) return false;
    return true;
  }

 private:
  ChainComplex src_, tgt_;
  std::map<int, Matrix> f_;
};

// g after f.
inline ChainMap compose(const ChainMap& g, const ChainMap& f) {
  std::map<int, Matrix> m;
  int a = std::min(f.lo(), g.lo()), b = std::max(f.hi(), g.hi());
  for (int k = a; k <= b; ++k) m[k] = g.at(k) * f.at(k);
  return ChainMap(f.source(), g.target(), std::move(m), false);
}

// Cone(f)_n = A_{n-1} + B_n with d(a, b) = (-da, db - f a).
inline ChainComplex mapping_cone(const ChainMap& f) {
  const auto& A = f.source();
  const auto& B = f.target();
  int lo = std::min(A.lo() + 1, B.lo()), hi = std::max(A.hi() + 1, B.hi());
  std::vector<GradedSpace> sp;
  std::vector<Matrix> d;
  for (int n = lo; n <= hi; ++n) {
    std::vector<BasisElement> b;
    for (auto e : A.space(n - 1).basis()) b.push_back({"s" + e.label, e.parity ^ 1, e.weight});
    for (auto e : B.space(n).basis()) b.push_back({"t" + e.label, e.parity, e.weight});
    sp.emplace_back(std::move(b));
    size_t ra = A.dim(n - 2), rb = B.dim(n - 1), ca = A.dim(n - 1), cb = B.dim(n);
    Matrix m(n - 1 >= lo ? ra + rb : 0, ca + cb);
    if (n - 1 >= lo) {
      m.set_block(0, 0, -A.d(n - 1));
      m.set_block(ra, 0, -f.at(n - 1));
      m.set_block(ra, ca, B.d(n));
    }
    d.push_back(std::move(m));
  }
  return ChainComplex(lo, std::move(sp), std::move(d));
}

inline bool is_quasi_isomorphism(const ChainMap& f) { return is_acyclic(mapping_cone(f)); }

struct Cylinder {
  ChainComplex complex;
  ChainMap inclusion;   // A -> Cyl
  ChainMap projection;  // Cyl -> B
  ChainMap section;     // B -> Cyl, homotopy inverse of projection
};

// Cyl_n = A_n + A_{n-1} + B_n, d(a, a', b) = (da + a', -da', db - f a').
inline Cylinder mapping_cylinder(const ChainMap& f) {
  const auto& A = f.source();
  const auto& B = f.target();
  int lo = std::min(A.lo(), B.lo()), hi = std::max(A.hi() + 1, B.hi());
  if (A.empty_window()) lo = B.lo(), hi = B.hi();
  if (B.empty_window() && !A.empty_window()) lo = A.lo(), hi = A.hi() + 1;
  std::vector<GradedSpace> sp;
  std::vector<Matrix> d;
  auto off = [&](int n) { return std::array<size_t, 3>{A.dim(n), A.dim(n - 1), B.dim(n)}; };
  for (int n = lo; n <= hi; ++n) {
    std::vector<BasisElement> b;
    for (auto e : A.space(n).basis()) b.push_back({"a" + e.label, e.parity, e.weight});
    for (auto e : A.space(n - 1).basis()) b.push_back({"s" + e.label, e.parity ^ 1, e.weight});
    for (auto e : B.space(n).basis()) b.push_back({"b" + e.label, e.parity, e.weight});
    sp.emplace_back(std::move(b));
    auto c = off(n);
    auto r = off(n - 1);
    bool has_lower = n - 1 >= lo;
    Matrix m(has_lower ? r[0] + r[1] + r[2] : 0, c[0] + c[1] + c[2]);
    if (has_lower) {
      m.set_block(0, 0, A.d(n));
      m.set_block(0, c[0], Matrix::identity(c[1]));
      m.set_block(r[0], c[0], -A.d(n - 1));
      m.set_block(r[0] + r[1], c[0], -f.at(n - 1));
      m.set_block(r[0] + r[1], c[0] + c[1], B.d(n));
    }
    d.push_back(std::move(m));
  }
  ChainComplex cyl(lo, std::move(sp), std::move(d));
  std::map<int, Matrix> inc, proj, sec;
  for (int n = lo; n <= hi; ++n) {
    auto c = off(n);
    Matrix i(cyl.dim(n), A.dim(n));
    i.set_block(0, 0, Matrix::identity(c[0]));
    inc[n] = i;
    Matrix p(B.dim(n), cyl.dim(n));
    p.set_block(0, 0, f.at(n));
    p.set_block(0, c[0] + c[1], Matrix::identity(c[2]));
    proj[n] = p;
    Matrix s(cyl.dim(n), B.dim(n));
    s.set_block(c[0] + c[1], 0, Matrix::identity(c[2]));
    sec[n] = s;
  }
  return {cyl, ChainMap(A, cyl, inc), ChainMap(cyl, B, proj), ChainMap(B, cyl, sec)};
}

// Kernel of f as a subcomplex of its source; columns of `basis[k]` span ker f_k.
struct SubComplex {
  ChainComplex complex;
  std::map<int, Matrix> basis;
};

inline SubComplex kernel_complex(const ChainMap& f) {
  const auto& X = f.source();
  std::map<int, Matrix> K;
  for (int k = X.lo(); k <= X.hi(); ++k) K[k] = kernel(f.at(k));
  std::vector<GradedSpace> sp;
  std::vector<Matrix> d;
  for (int k = X.lo(); k <= X.hi(); ++k) {
    sp.push_back(GradedSpace::anonymous(K[k].cols(), "k" + std::to_string(k) + "_"));
    if (k == X.lo()) {
      d.emplace_back(0, K[k].cols());
      continue;
    }
    auto coords = solve_matrix(K[k - 1], X.d(k) * K[k]);
    if (!coords) throw HypothesisViolation("kernel is not a subcomplex");
    d.push_back(*coords);
  }
  return {ChainComplex(X.lo(), std::move(sp), std::move(d)), std::move(K)};
}

// Returns L with L i = top and p L = bottom, for i injective and p a surjective quasi-isomorphism.
inline ChainMap lift_against_acyclic_fibration(const ChainMap& i, const ChainMap& p, const ChainMap& top,
                                               const ChainMap& bottom) {
  const ChainComplex& B = i.target();
  const ChainComplex& X = p.source();
  const ChainComplex& Y = p.target();
  for (int k = i.lo(); k <= i.hi(); ++k)
    if (rank(i.at(k)) != i.source().dim(k))
      throw HypothesisViolation("i injective: fails in degree " + std::to_string(k));
  for (int k = p.lo(); k <= p.hi(); ++k)
    if (rank(p.at(k)) != Y.dim(k)) throw HypothesisViolation("p surjective: fails in degree " + std::to_string(k));
  auto K = kernel_complex(p);
  if (!is_acyclic(K.complex)) throw HypothesisViolation("ker p acyclic: kernel has homology");
  {
    int a = std::min(i.lo(), p.lo()), b = std::max(i.hi(), p.hi());
    for (int k = a; k <= b; ++k)
      if (!(p.at(k) * top.at(k) == bottom.at(k) * i.at(k)))
        throw HypothesisViolation("square commutes: p top != bottom i in degree " + std::to_string(k));
  }
  std::map<int, Matrix> L;
  auto Lat = [&](int k) -> Matrix {
    auto it = L.find(k);
    if (it == L.end()) return Matrix(X.dim(k), B.dim(k));
    return it->second;
  };
  for (int k = B.lo(); k <= B.hi(); ++k) {
    size_t n = B.dim(k);
    Matrix ik = i.at(k);
    std::vector<std::vector<Rational>> cols;
    for (size_t j = 0; j < ik.cols(); ++j) cols.push_back(ik.column(j));
    std::vector<std::vector<Rational>> complement;
    size_t r = ik.cols();
    for (size_t e = 0; e < n && r < n; ++e) {
      std::vector<Rational> v(n);
      v[e] = 1;
      auto trial = cols;
      trial.push_back(v);
      if (rank(Matrix::from_columns(n, trial)) == r + 1) {
        cols = std::move(trial);
        complement.push_back(v);
        ++r;
      }
    }
    Matrix M = Matrix::from_columns(n, cols);
    Matrix pk = p.at(k), dX = X.d(k), Kk = K.basis.count(k) ? K.basis[k] : Matrix(X.dim(k), 0);
    Matrix dKk = dX * Kk;
    Matrix below = Lat(k - 1) * B.d(k);
    Matrix bot = bottom.at(k);
    Matrix images(X.dim(k), complement.size());
    for (size_t c = 0; c < complement.size(); ++c) {
      auto y = bot.apply(complement[c]);
      auto x0 = solve(pk, y);
      if (!x0) throw HypothesisViolation("p surjective: no preimage in degree " + std::to_string(k));
      auto z = below.apply(complement[c]);
      auto dx0 = dX.apply(*x0);
      for (size_t t = 0; t < z.size(); ++t) z[t] -= dx0[t];
      auto w = solve(dKk, z);
      if (!w) throw HypothesisViolation("ker p acyclic: obstruction not a boundary in degree " + std::to_string(k));
      auto kw = Kk.apply(*w);
      for (size_t t = 0; t < kw.size(); ++t) images(t, c) = (*x0)[t] + kw[t];
    }
    Matrix lhs = top.at(k).hstack(images);
    auto Minv = inverse(M);
    L[k] = lhs * *Minv;
  }
  return ChainMap(B, X, std::move(L));
}

}  // namespace sft
