#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nilrand/integer.hpp"

namespace nilrand {

// Dense row-major matrix over the integers. All arithmetic is exact.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols);
  IntMatrix(std::initializer_list<std::initializer_list<long>> rows);

  static IntMatrix identity(std::size_t n);
  static IntMatrix from_rows(const std::vector<IntVector>& rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  Integer& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Integer& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<Integer> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const Integer> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  IntVector row_vector(std::size_t i) const;
  IntVector col_vector(std::size_t j) const;

  IntMatrix transposed() const;

  friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b);
  friend bool operator==(const IntMatrix& a, const IntMatrix& b) = default;

  std::string to_string() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Integer> data_;
};

// One elementary unimodular operation performed during Smith reduction.
// AddRow:  row[target] += multiplier * row[source]
// AddCol:  col[target] += multiplier * col[source]
// Swap*:   exchange source and target
// Negate*: multiply target by -1 (source unused)
// This log is what words::nielsen_normalize replays as Nielsen moves.
struct ElementaryOp {
  enum class Kind { AddRow, AddCol, SwapRows, SwapCols, NegateRow, NegateCol };
  Kind kind;
  std::size_t source = 0;
  std::size_t target = 0;
  Integer multiplier = 1;

  bool is_row_op() const {
    return kind == Kind::AddRow || kind == Kind::SwapRows || kind == Kind::NegateRow;
  }
};

// U * M * V = D with U, V unimodular and D diagonal, d1 | d2 | ... , d_i >= 0.
struct SmithDecomposition {
  IntMatrix U;
  IntMatrix D;
  IntMatrix V;
  std::size_t rank = 0;
  // min(rows, cols) diagonal entries of D, zeros included.
  IntVector invariant_factors;
  std::vector<ElementaryOp> log;
};

SmithDecomposition smith_normal_form(const IntMatrix& m);

// Row-style Hermite normal form: H = U * M, H in row echelon form with
// positive pivots and entries above each pivot reduced into [0, pivot).
struct HermiteDecomposition {
  IntMatrix H;
  IntMatrix U;
  std::size_t rank = 0;
  std::vector<std::size_t> pivot_cols;
};

HermiteDecomposition hermite_normal_form(const IntMatrix& m);

// Rank over the rationals, by fraction-free (Bareiss) elimination.
std::size_t rank(const IntMatrix& m);

// Determinant of a square matrix (Bareiss). The 0x0 determinant is 1.
Integer determinant(const IntMatrix& m);

// Sum of det(M0)^2 over all maximal (min(r,m)-sized) minors M0.
// Zero exactly when the matrix is rank deficient.
Integer minor_polynomial(const IntMatrix& m);

// Integer coefficients c with sum_i c_i * basis[i] == target, or nullopt when
// target is outside the Z-span. Solved through the Hermite form of the basis.
std::optional<IntVector> lattice_membership(const std::vector<IntVector>& basis,
                                            const IntVector& target);

// True iff some nonzero multiple of target lies in the Z-span of basis.
bool rational_membership(const std::vector<IntVector>& basis, const IntVector& target);

// Basis (as columns) of the saturated lattice {x in Z^cols : m x = 0}.
std::vector<IntVector> integer_kernel(const IntMatrix& m);

bool is_unimodular(const IntMatrix& m);

}  // namespace nilrand
