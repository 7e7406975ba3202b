#pragma once

#include <vector>

#include "sbhdg/core.hpp"

namespace sbhdg {

/// Quadrature on the reference triangle {x >= 0, y >= 0, x + y <= 1} or on
/// the reference segment [0,1] (segment points carry y = 0).
///
/// Segment rules are Gauss-Legendre. Triangle rules are conical products of
/// a Gauss-Jacobi(1,0) rule with a Gauss-Legendre rule, so a rule of declared
/// exactness d integrates every polynomial of total degree <= d exactly.
struct QuadratureRule {
  enum class Domain { Triangle, Segment };
  Domain domain;
  int exactness;
  std::vector<Vec2> points;
  Vector weights;

  int size() const { return static_cast<int>(points.size()); }
};

QuadratureRule quadrature(QuadratureRule::Domain domain, int exactness);

inline int pk_dim_triangle(int k) { return (k + 1) * (k + 2) / 2; }

/// Scalar basis spanning P_k on the reference triangle.
///
/// Monomials in fixed order (by total degree, then descending x exponent),
/// orthonormalized against the exact monomial Gram matrix with a second
/// numerical re-orthonormalization pass so that the reference mass matrix is
/// the identity to machine precision.
class CellBasis {
 public:
  explicit CellBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return size_; }

  /// Tabulate values and reference gradients at the given points.
  /// Output matrices are (n_points x size); null outputs are skipped.
  void eval(const std::vector<Vec2>& pts, MatrixX* values, MatrixX* gx,
            MatrixX* gy) const;

  MatrixX values(const std::vector<Vec2>& pts) const;

 private:
  int degree_;
  int size_;
  std::vector<std::pair<int, int>> expo_;  // (x exponent, y exponent)
  MatrixX coeff_;  // basis i = sum_j coeff_(i,j) * monomial j
};

/// Basis spanning P_k on the reference segment [0,1]: normalized shifted
/// Legendre polynomials, orthonormal in L2(0,1) by construction.
class FacetBasis {
 public:
  explicit FacetBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return degree_ + 1; }

  void eval(const std::vector<double>& pts, MatrixX* values,
            MatrixX* derivs) const;

  MatrixX values(const std::vector<double>& pts) const;

 private:
  int degree_;
};

struct BasisTable {
  MatrixX values, gx, gy;
};

/// Values and reference gradients of the P_k cell basis; rejects k < 1
/// (the discretization requires k >= 1 so that P_{k-1} is nonempty).
BasisTable eval_cell_basis(int k, const std::vector<Vec2>& pts);

}  // namespace sbhdg
