#pragma once

#include <vector>

#include "sbhdg/data.hpp"
#include "sbhdg/fe_basis.hpp"
#include "sbhdg/mesh.hpp"

namespace sbhdg {

/// Global unknown layout.
///
/// Cell blocks: u (vector P_k, all cells), p (P_{k-1}, all cells; the Biot
/// part is the total pressure), z (vector P_k, Biot cells), p^p (P_{k-1},
/// Biot cells). Facet blocks: u-bar and p-bar traces per subdomain plus the
/// pore-pressure trace; interface facets carry the traces of both sides.
/// Constrained entries: u-bar on velocity-Dirichlet facets and the
/// pore-pressure trace on pressure-Dirichlet facets.
struct DofMap {
  int k = 1;
  int nb_cell = 0;   // dim P_k(triangle)
  int nb_pres = 0;   // dim P_{k-1}(triangle)
  int nb_facet = 0;  // dim P_k(segment) = k + 1

  std::vector<int> u_off, p_off, z_off, pp_off;               // per cell
  std::vector<int> ubar_s_off, ubar_b_off;                     // per facet
  std::vector<int> pbar_s_off, pbar_b_off, pbar_p_off;         // per facet
  // Offsets are -1 for entities that do not carry the block.

  std::vector<std::uint8_t> constrained;  // per global dof
  std::vector<int> full_to_sys;           // -1 when constrained
  std::vector<int> full_to_con;           // -1 when unconstrained
  std::vector<int> sys_to_full;
  std::vector<int> con_to_full;
  int n_full = 0, n_sys = 0, n_con = 0;

  int u_dof(int c, int comp, int m) const { return u_off[c] + comp * nb_cell + m; }
  int p_dof(int c, int m) const { return p_off[c] + m; }
  int z_dof(int c, int comp, int m) const { return z_off[c] + comp * nb_cell + m; }
  int pp_dof(int c, int m) const { return pp_off[c] + m; }
  int ubar_s_dof(int f, int comp, int m) const {
    return ubar_s_off[f] + comp * nb_facet + m;
  }
  int ubar_b_dof(int f, int comp, int m) const {
    return ubar_b_off[f] + comp * nb_facet + m;
  }
  int pbar_s_dof(int f, int m) const { return pbar_s_off[f] + m; }
  int pbar_b_dof(int f, int m) const { return pbar_b_off[f] + m; }
  int pbar_p_dof(int f, int m) const { return pbar_p_off[f] + m; }
};

DofMap build_dofmap(const Mesh& mesh, int k);

/// Mesh + degree + reference machinery shared by assembly, drivers, and
/// diagnostics. Reference tables are evaluated once per discretization.
struct Discretization {
  const Mesh* mesh = nullptr;
  int k = 1;
  CellBasis cell_basis;      // P_k
  CellBasis pressure_basis;  // P_{k-1}
  FacetBasis facet_basis;    // P_k on segments
  QuadratureRule vol_rule;   // exactness 2k+2
  QuadratureRule facet_rule; // exactness 2k+2
  DofMap dm;

  // Cell-basis tables at the volume rule points (shared by all cells since
  // the element map is affine).
  MatrixX vol_val, vol_gx, vol_gy;  // (nq x nb_cell)
  MatrixX vol_val_p;                // (nq x nb_pres)
  MatrixX facet_val;                // facet basis at facet-rule points

  Discretization(const Mesh& m, int degree);

  std::vector<double> facet_param_points() const;  // facet-rule abscissae
};

/// Affine geometry of one cell.
struct CellGeometry {
  Vec2 v0;
  Mat2 jac;      // columns v1-v0, v2-v0
  Mat2 inv_jac_t;
  double det;    // = 2 * area
};
CellGeometry cell_geometry(const Mesh& mesh, int c);

/// Reference coordinates, within cell c, of the facet-rule points of facet f.
std::vector<Vec2> facet_points_in_cell(const Mesh& mesh, int c, int f,
                                       const QuadratureRule& facet_rule);

/// Values of the Dirichlet data projected facet-wise onto the trace spaces:
/// a full-length vector that is zero on unconstrained dofs. Uses the same
/// facet quadrature as assembly so eliminated columns and diagnostics agree.
Vector apply_essential_data(const Discretization& disc, const ProblemData& data,
                            double t);

}  // namespace sbhdg
