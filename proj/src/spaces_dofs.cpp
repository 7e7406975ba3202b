#include "sbhdg/spaces_dofs.hpp"

#include <algorithm>

namespace sbhdg {

DofMap build_dofmap(const Mesh& mesh, int k) {
  if (k < 1) throw Error("polynomial degree must satisfy k >= 1");
  DofMap dm;
  dm.k = k;
  dm.nb_cell = pk_dim_triangle(k);
  dm.nb_pres = pk_dim_triangle(k - 1);
  dm.nb_facet = k + 1;

  const int nc = mesh.n_cells();
  const int nf = mesh.n_facets();
  dm.u_off.assign(nc, -1);
  dm.p_off.assign(nc, -1);
  dm.z_off.assign(nc, -1);
  dm.pp_off.assign(nc, -1);
  dm.ubar_s_off.assign(nf, -1);
  dm.ubar_b_off.assign(nf, -1);
  dm.pbar_s_off.assign(nf, -1);
  dm.pbar_b_off.assign(nf, -1);
  dm.pbar_p_off.assign(nf, -1);

  int next = 0;
  for (int c = 0; c < nc; ++c) {
    dm.u_off[c] = next;
    next += 2 * dm.nb_cell;
  }
  for (int c = 0; c < nc; ++c) {
    dm.p_off[c] = next;
    next += dm.nb_pres;
  }
  for (int c = 0; c < nc; ++c)
    if (mesh.cells[c].subdomain == Subdomain::Biot) {
      dm.z_off[c] = next;
      next += 2 * dm.nb_cell;
    }
  for (int c = 0; c < nc; ++c)
    if (mesh.cells[c].subdomain == Subdomain::Biot) {
      dm.pp_off[c] = next;
      next += dm.nb_pres;
    }

  // A facet belongs to the Stokes (Biot) trace mesh when it has an adjacent
  // Stokes (Biot) cell; interface facets belong to both and carry two
  // independent velocity traces coupled only through the interface forms.
  auto on_side = [&](const MeshFacet& f, Subdomain s) {
    if (mesh.cells[f.cell[0]].subdomain == s) return true;
    return f.cell[1] >= 0 && mesh.cells[f.cell[1]].subdomain == s;
  };
  for (int f = 0; f < nf; ++f)
    if (on_side(mesh.facets[f], Subdomain::Stokes)) {
      dm.ubar_s_off[f] = next;
      next += 2 * dm.nb_facet;
    }
  for (int f = 0; f < nf; ++f)
    if (on_side(mesh.facets[f], Subdomain::Biot)) {
      dm.ubar_b_off[f] = next;
      next += 2 * dm.nb_facet;
    }
  for (int f = 0; f < nf; ++f)
    if (on_side(mesh.facets[f], Subdomain::Stokes)) {
      dm.pbar_s_off[f] = next;
      next += dm.nb_facet;
    }
  for (int f = 0; f < nf; ++f)
    if (on_side(mesh.facets[f], Subdomain::Biot)) {
      dm.pbar_b_off[f] = next;
      next += dm.nb_facet;
    }
  for (int f = 0; f < nf; ++f)
    if (on_side(mesh.facets[f], Subdomain::Biot)) {
      dm.pbar_p_off[f] = next;
      next += dm.nb_facet;
    }
  dm.n_full = next;

  dm.constrained.assign(dm.n_full, 0);
  for (int f = 0; f < nf; ++f) {
    const FacetClass cls = mesh.facets[f].cls;
    if (is_stokes_dirichlet(cls))
      for (int d = 0; d < 2 * dm.nb_facet; ++d)
        dm.constrained[dm.ubar_s_off[f] + d] = 1;
    if (is_biot_displacement_dirichlet(cls))
      for (int d = 0; d < 2 * dm.nb_facet; ++d)
        dm.constrained[dm.ubar_b_off[f] + d] = 1;
    if (is_pore_dirichlet(cls))
      for (int d = 0; d < dm.nb_facet; ++d)
        dm.constrained[dm.pbar_p_off[f] + d] = 1;
  }

  dm.full_to_sys.assign(dm.n_full, -1);
  dm.full_to_con.assign(dm.n_full, -1);
  for (int i = 0; i < dm.n_full; ++i) {
    if (dm.constrained[i]) {
      dm.full_to_con[i] = dm.n_con++;
      dm.con_to_full.push_back(i);
    } else {
      dm.full_to_sys[i] = dm.n_sys++;
      dm.sys_to_full.push_back(i);
    }
  }
  return dm;
}

Discretization::Discretization(const Mesh& m, int degree)
    : mesh(&m),
      k(degree),
      cell_basis(degree),
      pressure_basis(degree - 1),
      facet_basis(degree),
      vol_rule(quadrature(QuadratureRule::Domain::Triangle, 2 * degree + 2)),
      facet_rule(quadrature(QuadratureRule::Domain::Segment, 2 * degree + 2)),
      dm(build_dofmap(m, degree)) {
  cell_basis.eval(vol_rule.points, &vol_val, &vol_gx, &vol_gy);
  vol_val_p = pressure_basis.values(vol_rule.points);
  facet_val = facet_basis.values(facet_param_points());
}

std::vector<double> Discretization::facet_param_points() const {
  std::vector<double> s(facet_rule.size());
  for (int q = 0; q < facet_rule.size(); ++q) s[q] = facet_rule.points[q].x();
  return s;
}

CellGeometry cell_geometry(const Mesh& mesh, int c) {
  const auto v = mesh.cell_vertices(c);
  CellGeometry g;
  g.v0 = v[0];
  g.jac.col(0) = v[1] - v[0];
  g.jac.col(1) = v[2] - v[0];
  g.det = g.jac(0, 0) * g.jac(1, 1) - g.jac(0, 1) * g.jac(1, 0);
  g.inv_jac_t = g.jac.inverse().transpose();
  return g;
}

std::vector<Vec2> facet_points_in_cell(const Mesh& mesh, int c, int f,
                                       const QuadratureRule& facet_rule) {
  static const Vec2 ref[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  const auto& cell = mesh.cells[c];
  const auto& facet = mesh.facets[f];
  int la = -1, lb = -1;
  for (int i = 0; i < 3; ++i) {
    if (cell.v[i] == facet.v[0]) la = i;
    if (cell.v[i] == facet.v[1]) lb = i;
  }
  if (la < 0 || lb < 0) throw Error("facet not adjacent to cell");
  std::vector<Vec2> pts(facet_rule.size());
  for (int q = 0; q < facet_rule.size(); ++q) {
    const double s = facet_rule.points[q].x();
    pts[q] = ref[la] + s * (ref[lb] - ref[la]);
  }
  return pts;
}

// Facet data are imposed as per-facet L2 projections onto P_k(F). The facet
// basis is orthonormal on [0,1], so projection coefficients are plain
// weighted sums over the facet quadrature points.
Vector apply_essential_data(const Discretization& disc, const ProblemData& data,
                            double t) {
  const Mesh& mesh = *disc.mesh;
  const DofMap& dm = disc.dm;
  Vector g = Vector::Zero(dm.n_full);
  const auto& rule = disc.facet_rule;

  auto project_vec = [&](int f, const VectorField& fn, int base) {
    if (!fn) throw Error("essential velocity data not provided");
    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 x = mesh.facet_point(f, rule.points[q].x());
      const Vec2 val = fn(x, t);
      const double w = rule.weights(q);
      for (int m = 0; m < dm.nb_facet; ++m) {
        const double fv = w * disc.facet_val(q, m);
        g(base + m) += fv * val.x();
        g(base + dm.nb_facet + m) += fv * val.y();
      }
    }
  };
  auto project_scal = [&](int f, const ScalarField& fn, int base) {
    if (!fn) throw Error("essential pore-pressure data not provided");
    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 x = mesh.facet_point(f, rule.points[q].x());
      const double val = fn(x, t);
      const double w = rule.weights(q);
      for (int m = 0; m < dm.nb_facet; ++m)
        g(base + m) += w * disc.facet_val(q, m) * val;
    }
  };

  for (int f = 0; f < mesh.n_facets(); ++f) {
    const FacetClass cls = mesh.facets[f].cls;
    if (is_stokes_dirichlet(cls)) project_vec(f, data.U_s, dm.ubar_s_off[f]);
    if (is_biot_displacement_dirichlet(cls))
      project_vec(f, data.U_b, dm.ubar_b_off[f]);
    if (is_pore_dirichlet(cls)) project_scal(f, data.P_p, dm.pbar_p_off[f]);
  }
  return g;
}

}  // namespace sbhdg
