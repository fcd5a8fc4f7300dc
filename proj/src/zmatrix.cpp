#include "nilrand/zmatrix.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "nilrand/errors.hpp"

namespace nilrand {

std::int64_t to_int64(const Integer& x) {
  if (!x.fits_slong_p()) throw std::overflow_error("integer " + x.get_str() + " exceeds 64 bits");
  return x.get_si();
}

IntMatrix::IntMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

IntMatrix::IntMatrix(std::initializer_list<std::initializer_list<long>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
    for (long v : r) data_.emplace_back(v);
  }
}

IntMatrix IntMatrix::identity(std::size_t n) {
  IntMatrix id(n, n);
  for (std::size_t i = 0; i < n; ++i) id(i, i) = 1;
  return id;
}

IntMatrix IntMatrix::from_rows(const std::vector<IntVector>& rows, std::size_t cols) {
  IntMatrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw DimensionMismatch("row length differs from column count");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

IntVector IntMatrix::row_vector(std::size_t i) const {
  auto r = row(i);
  return {r.begin(), r.end()};
}

IntVector IntMatrix::col_vector(std::size_t j) const {
  IntVector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

IntMatrix IntMatrix::transposed() const {
  IntMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product shape mismatch");
  IntMatrix c(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i)
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const Integer& aik = a(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

std::string IntMatrix::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < rows_; ++i) {
    os << (i ? ",[" : "[");
    for (std::size_t j = 0; j < cols_; ++j) os << (j ? "," : "") << (*this)(i, j).get_str();
    os << ']';
  }
  os << ']';
  return os.str();
}

namespace {

// Applies elementary operations to the working matrix while mirroring them
// on U (rows) and V (columns) and appending them to the log.
class SmithWorker {
 public:
  explicit SmithWorker(const IntMatrix& m)
      : a_(m), u_(IntMatrix::identity(m.rows())), v_(IntMatrix::identity(m.cols())) {}

  void add_row(std::size_t src, std::size_t dst, const Integer& k) {
    if (k == 0) return;
    for (std::size_t j = 0; j < a_.cols(); ++j) a_(dst, j) += k * a_(src, j);
    for (std::size_t j = 0; j < u_.cols(); ++j) u_(dst, j) += k * u_(src, j);
    log_.push_back({ElementaryOp::Kind::AddRow, src, dst, k});
  }
  void add_col(std::size_t src, std::size_t dst, const Integer& k) {
    if (k == 0) return;
    for (std::size_t i = 0; i < a_.rows(); ++i) a_(i, dst) += k * a_(i, src);
    for (std::size_t i = 0; i < v_.rows(); ++i) v_(i, dst) += k * v_(i, src);
    log_.push_back({ElementaryOp::Kind::AddCol, src, dst, k});
  }
  void swap_rows(std::size_t i, std::size_t j) {
    if (i == j) return;
    for (std::size_t c = 0; c < a_.cols(); ++c) std::swap(a_(i, c), a_(j, c));
    for (std::size_t c = 0; c < u_.cols(); ++c) std::swap(u_(i, c), u_(j, c));
    log_.push_back({ElementaryOp::Kind::SwapRows, i, j, 1});
  }
  void swap_cols(std::size_t i, std::size_t j) {
    if (i == j) return;
    for (std::size_t r = 0; r < a_.rows(); ++r) std::swap(a_(r, i), a_(r, j));
    for (std::size_t r = 0; r < v_.rows(); ++r) std::swap(v_(r, i), v_(r, j));
    log_.push_back({ElementaryOp::Kind::SwapCols, i, j, 1});
  }
  void negate_row(std::size_t i) {
    for (std::size_t c = 0; c < a_.cols(); ++c) a_(i, c) = -a_(i, c);
    for (std::size_t c = 0; c < u_.cols(); ++c) u_(i, c) = -u_(i, c);
    log_.push_back({ElementaryOp::Kind::NegateRow, i, i, 1});
  }

  void run() {
    const std::size_t diag = std::min(a_.rows(), a_.cols());
    for (std::size_t t = 0; t < diag; ++t) {
      if (!bring_smallest_to(t)) break;
      reduce_at(t);
    }
    for (std::size_t t = 0; t < diag; ++t)
      if (a_(t, t) < 0) negate_row(t);
  }

  SmithDecomposition finish() && {
    SmithDecomposition out;
    const std::size_t diag = std::min(a_.rows(), a_.cols());
    for (std::size_t t = 0; t < diag; ++t) {
      out.invariant_factors.push_back(a_(t, t));
      if (a_(t, t) != 0) ++out.rank;
    }
    out.U = std::move(u_);
    out.D = std::move(a_);
    out.V = std::move(v_);
    out.log = std::move(log_);
    return out;
  }

 private:
  // Moves the smallest nonzero |entry| of the trailing submatrix to (t, t).
  bool bring_smallest_to(std::size_t t) {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (std::size_t i = t; i < a_.rows(); ++i)
      for (std::size_t j = t; j < a_.cols(); ++j) {
        if (a_(i, j) == 0) continue;
        if (!best || abs(a_(i, j)) < abs(a_(best->first, best->second))) best = {{i, j}};
      }
    if (!best) return false;
    swap_rows(t, best->first);
    swap_cols(t, best->second);
    return true;
  }

  void reduce_at(std::size_t t) {
    for (;;) {
      bool clean = true;
      for (std::size_t i = t + 1; i < a_.rows(); ++i) {
        if (a_(i, t) == 0) continue;
        Integer q = a_(i, t) / a_(t, t);  // truncating
        add_row(t, i, -q);
        if (a_(i, t) != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < a_.cols(); ++j) {
        if (a_(t, j) == 0) continue;
        Integer q = a_(t, j) / a_(t, t);
        add_col(t, j, -q);
        if (a_(t, j) != 0) clean = false;
      }
      if (!clean) {
        // A remainder is strictly smaller than the pivot: promote it.
        std::size_t bi = t, bj = t;
        for (std::size_t i = t + 1; i < a_.rows(); ++i)
          if (a_(i, t) != 0 && abs(a_(i, t)) < abs(a_(bi, bj))) bi = i, bj = t;
        for (std::size_t j = t + 1; j < a_.cols(); ++j)
          if (a_(t, j) != 0 && abs(a_(t, j)) < abs(a_(bi, bj))) bi = t, bj = j;
        swap_rows(t, bi);
        swap_cols(t, bj);
        continue;
      }
      // Row t and column t are clear; enforce d_t | every trailing entry.
      bool divisible = true;
      for (std::size_t i = t + 1; i < a_.rows() && divisible; ++i)
        for (std::size_t j = t + 1; j < a_.cols(); ++j)
          if (!mpz_divisible_p(a_(i, j).get_mpz_t(), a_(t, t).get_mpz_t())) {
            add_row(i, t, 1);
            divisible = false;
            break;
          }
      if (divisible) return;
    }
  }

  IntMatrix a_;
  IntMatrix u_;
  IntMatrix v_;
  std::vector<ElementaryOp> log_;
};

// Fraction-free elimination in place; returns the rank and leaves the last
// nonzero leading pivot as the (signed) determinant when square.
std::size_t bareiss(IntMatrix& a, Integer* det_out) {
  const std::size_t rows = a.rows(), cols = a.cols();
  std::size_t r = 0;
  Integer prev = 1;
  int sign = 1;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && a(p, c) == 0) ++p;
    if (p == rows) continue;
    if (p != r) {
      for (std::size_t j = 0; j < cols; ++j) std::swap(a(p, j), a(r, j));
      sign = -sign;
    }
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        a(i, j) = a(r, c) * a(i, j) - a(i, c) * a(r, j);
        mpz_divexact(a(i, j).get_mpz_t(), a(i, j).get_mpz_t(), prev.get_mpz_t());
      }
      a(i, c) = 0;
    }
    prev = a(r, c);
    ++r;
  }
  if (det_out) {
    if (rows != cols) throw DimensionMismatch("determinant of a non-square matrix");
    *det_out = (r == rows) ? Integer(sign * (rows == 0 ? Integer(1) : a(rows - 1, cols - 1))) : Integer(0);
  }
  return r;
}

}  // namespace

SmithDecomposition smith_normal_form(const IntMatrix& m) {
  SmithWorker w(m);
  w.run();
  return std::move(w).finish();
}

HermiteDecomposition hermite_normal_form(const IntMatrix& m) {
  IntMatrix h = m;
  IntMatrix u = IntMatrix::identity(m.rows());
  const std::size_t rows = m.rows(), cols = m.cols();

  auto add_row = [&](std::size_t src, std::size_t dst, const Integer& k) {
    if (k == 0) return;
    for (std::size_t j = 0; j < cols; ++j) h(dst, j) += k * h(src, j);
    for (std::size_t j = 0; j < rows; ++j) u(dst, j) += k * u(src, j);
  };
  auto swap_rows = [&](std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t j = 0; j < cols; ++j) std::swap(h(a, j), h(b, j));
    for (std::size_t j = 0; j < rows; ++j) std::swap(u(a, j), u(b, j));
  };

  HermiteDecomposition out;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    // Euclid on column c among rows r.. until a single nonzero remains.
    for (;;) {
      std::optional<std::size_t> best;
      for (std::size_t i = r; i < rows; ++i)
        if (h(i, c) != 0 && (!best || abs(h(i, c)) < abs(h(*best, c)))) best = i;
      if (!best) break;
      swap_rows(r, *best);
      bool done = true;
      for (std::size_t i = r + 1; i < rows; ++i) {
        if (h(i, c) == 0) continue;
        Integer q;
        mpz_fdiv_q(q.get_mpz_t(), h(i, c).get_mpz_t(), h(r, c).get_mpz_t());
        add_row(r, i, -q);
        if (h(i, c) != 0) done = false;
      }
      if (done) break;
    }
    if (h(r, c) == 0) continue;
    if (h(r, c) < 0) {
      for (std::size_t j = 0; j < cols; ++j) h(r, j) = -h(r, j);
      for (std::size_t j = 0; j < rows; ++j) u(r, j) = -u(r, j);
    }
    for (std::size_t i = 0; i < r; ++i) {
      Integer q;
      mpz_fdiv_q(q.get_mpz_t(), h(i, c).get_mpz_t(), h(r, c).get_mpz_t());
      add_row(r, i, -q);
    }
    out.pivot_cols.push_back(c);
    ++r;
  }
  out.rank = r;
  out.H = std::move(h);
  out.U = std::move(u);
  return out;
}

std::size_t rank(const IntMatrix& m) {
  IntMatrix a = m;
  return bareiss(a, nullptr);
}

Integer determinant(const IntMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("determinant of a non-square matrix");
  if (m.rows() == 0) return 1;
  IntMatrix a = m;
  Integer det;
  bareiss(a, &det);
  return det;
}

namespace {

// Calls f on every k-subset of {0..n-1}, in lexicographic order.
template <class F>
void for_each_combination(std::size_t n, std::size_t k, F&& f) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

Integer minor_polynomial(const IntMatrix& m) {
  const std::size_t k = std::min(m.rows(), m.cols());
  if (k == 0) return 1;
  const bool pick_rows = m.rows() > m.cols();
  const std::size_t n = pick_rows ? m.rows() : m.cols();
  Integer total = 0;
  IntMatrix sub(k, k);
  for_each_combination(n, k, [&](const std::vector<std::size_t>& pick) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        sub(i, j) = pick_rows ? m(pick[i], j) : m(i, pick[j]);
    Integer d = determinant(sub);
    total += d * d;
  });
  return total;
}

std::optional<IntVector> lattice_membership(const std::vector<IntVector>& basis,
                                            const IntVector& target) {
  const std::size_t dim = target.size();
  for (const auto& b : basis)
    if (b.size() != dim) throw DimensionMismatch("lattice basis vectors differ in dimension");
  if (basis.empty()) {
    for (const auto& t : target)
      if (t != 0) return std::nullopt;
    return IntVector{};
  }
  const auto hnf = hermite_normal_form(IntMatrix::from_rows(basis, dim));
  IntVector residual = target;
  IntVector y(basis.size());
  for (std::size_t p = 0; p < hnf.rank; ++p) {
    const std::size_t c = hnf.pivot_cols[p];
    for (std::size_t j = 0; j < c; ++j)
      if (residual[j] != 0) return std::nullopt;
    const Integer& piv = hnf.H(p, c);
    if (!mpz_divisible_p(residual[c].get_mpz_t(), piv.get_mpz_t())) return std::nullopt;
    y[p] = residual[c] / piv;
    for (std::size_t j = c; j < dim; ++j) residual[j] -= y[p] * hnf.H(p, j);
  }
  for (const auto& r : residual)
    if (r != 0) return std::nullopt;
  IntVector coeffs(basis.size());
  for (std::size_t p = 0; p < hnf.rank; ++p) {
    if (y[p] == 0) continue;
    for (std::size_t i = 0; i < basis.size(); ++i) coeffs[i] += y[p] * hnf.U(p, i);
  }
  return coeffs;
}

bool rational_membership(const std::vector<IntVector>& basis, const IntVector& target) {
  const std::size_t dim = target.size();
  if (basis.empty()) {
    return std::all_of(target.begin(), target.end(), [](const Integer& t) { return t == 0; });
  }
  auto with_target = basis;
  with_target.push_back(target);
  return rank(IntMatrix::from_rows(basis, dim)) == rank(IntMatrix::from_rows(with_target, dim));
}

std::vector<IntVector> integer_kernel(const IntMatrix& m) {
  std::vector<IntVector> basis;
  if (m.rows() == 0) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      IntVector e(m.cols());
      e[j] = 1;
      basis.push_back(std::move(e));
    }
    return basis;
  }
  const auto snf = smith_normal_form(m);
  for (std::size_t j = snf.rank; j < m.cols(); ++j) basis.push_back(snf.V.col_vector(j));
  return basis;
}

bool is_unimodular(const IntMatrix& m) {
  if (m.rows() != m.cols()) return false;
  return abs_value(determinant(m)) == 1;
}

}  // namespace nilrand
