#include "sbhdg/assembly.hpp"

#include <omp.h>

#include <cmath>

namespace sbhdg {

namespace {

int resolve_workers(int workers) {
  return workers > 0 ? workers : omp_get_max_threads();
}

// Values and physical gradients of the cell basis at the facet-rule points
// of facet f, seen from cell c.
struct FacetTrace {
  MatrixX val, gpx, gpy;
};

FacetTrace facet_trace(const Discretization& disc, const CellGeometry& geo,
                       int c, int f) {
  const auto pts = facet_points_in_cell(*disc.mesh, c, f, disc.facet_rule);
  FacetTrace tr;
  MatrixX gx, gy;
  disc.cell_basis.eval(pts, &tr.val, &gx, &gy);
  tr.gpx = geo.inv_jac_t(0, 0) * gx + geo.inv_jac_t(0, 1) * gy;
  tr.gpy = geo.inv_jac_t(1, 0) * gx + geo.inv_jac_t(1, 1) * gy;
  return tr;
}

Vec2 cell_outward_normal(const Mesh& mesh, int c, int f) {
  const auto& facet = mesh.facets[f];
  return facet.cell[0] == c ? facet.normal : Vec2(-facet.normal);
}

void emit_dense(std::vector<Trip>& out, const MatrixX& block,
                const std::vector<int>& rows, const std::vector<int>& cols) {
  for (int i = 0; i < block.rows(); ++i)
    for (int j = 0; j < block.cols(); ++j)
      if (block(i, j) != 0.0) out.emplace_back(rows[i], cols[j], block(i, j));
}

std::vector<int> vector_dofs(int base, int nb) {
  std::vector<int> idx(2 * nb);
  for (int i = 0; i < 2 * nb; ++i) idx[i] = base + i;
  return idx;
}

std::vector<int> scalar_dofs(int base, int nb) {
  std::vector<int> idx(nb);
  for (int i = 0; i < nb; ++i) idx[i] = base + i;
  return idx;
}

// Runs kernel(c, stat, timec) over all cells. The parallel path accumulates
// per-cell buffers and merges them in cell order, so the produced triplet
// list is identical to the serial reference for any worker count.
template <class Kernel>
FormBlocks run_cells(int n_cells, int workers, Kernel&& kernel) {
  FormBlocks fb;
  if (workers == 1) {
    for (int c = 0; c < n_cells; ++c) kernel(c, fb.stat, fb.timec);
    return fb;
  }
  std::vector<std::vector<Trip>> stat(n_cells), timec(n_cells);
  const int nthreads = resolve_workers(workers);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int c = 0; c < n_cells; ++c) kernel(c, stat[c], timec[c]);
  std::size_t ns = 0, nt = 0;
  for (int c = 0; c < n_cells; ++c) {
    ns += stat[c].size();
    nt += timec[c].size();
  }
  fb.stat.reserve(ns);
  fb.timec.reserve(nt);
  for (int c = 0; c < n_cells; ++c) {
    fb.stat.insert(fb.stat.end(), stat[c].begin(), stat[c].end());
    fb.timec.insert(fb.timec.end(), timec[c].begin(), timec[c].end());
  }
  return fb;
}

}  // namespace

void ParameterSet::validate() const {
  if (!(mu_s > 0.0)) throw Error("mu_s must be positive");
  if (!(mu_b > 0.0)) throw Error("mu_b must be positive");
  if (!(inv_lambda >= 0.0)) throw Error("1/lambda must be nonnegative");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must lie in (0,1]");
  if (!(c0 >= 0.0)) throw Error("c0 must be nonnegative");
  if (!(kappa > 0.0)) throw Error("kappa must be positive");
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
  if (!(beta_s > 0.0 && beta_b > 0.0))
    throw Error("penalty parameters must be positive");
  if (degree < 1) throw Error("polynomial degree must satisfy k >= 1");
  const double n = nu();
  if (!(n > 0.0 && n <= 0.5)) throw Error("Poisson ratio out of range");
}

ParameterSet ParameterSet::manufactured(int k) {
  ParameterSet p;
  p.mu_s = 1e-2;
  p.mu_b = 1e-3;
  p.alpha = 0.2;
  p.inv_lambda = 1e-2;  // lambda = 1e2
  p.kappa = 1e-2;
  p.c0 = 1e-2;
  p.gamma = 0.3;
  p.tau = 1e-2;
  p.degree = k;
  p.beta_s = p.beta_b = 8.0 * k * k;
  return p;
}

ParameterSet ParameterSet::surfsub(int set_id, int k) {
  ParameterSet p;
  p.mu_s = 1.0;
  p.alpha = 1.0;
  p.gamma = 1.0;
  p.degree = k;
  p.beta_s = p.beta_b = 8.0 * k * k;
  switch (set_id) {
    case 1:
      p.kappa = 1.0; p.c0 = 1.0; p.inv_lambda = 1.0; p.mu_b = 1.0;
      break;
    case 2:
      p.kappa = 1e-4; p.c0 = 1e-4; p.inv_lambda = 1e-6; p.mu_b = 1.0;
      break;
    case 3:
      p.kappa = 1e-4; p.c0 = 1e-4; p.inv_lambda = 1e-6; p.mu_b = 1e6;
      break;
    default:
      throw Error("surfsub parameter set must be 1, 2, or 3");
  }
  return p;
}

int history_size(TimeScheme scheme) {
  switch (scheme) {
    case TimeScheme::Steady: return 0;
    case TimeScheme::BackwardEuler: return 1;
    case TimeScheme::Bdf2: return 2;
  }
  return 0;
}

TimeStencil stencil_for(TimeScheme scheme, const ParameterSet& params) {
  switch (scheme) {
    case TimeScheme::Steady:
      if (!(params.tau > 0.0)) throw Error("tau must be positive");
      return TimeStencil::steady(params.tau);
    case TimeScheme::BackwardEuler:
      if (!(params.dt > 0.0)) throw Error("dt must be positive");
      return TimeStencil::backward_euler(params.dt);
    case TimeScheme::Bdf2:
      if (!(params.dt > 0.0)) throw Error("dt must be positive");
      return TimeStencil::bdf2(params.dt);
  }
  throw Error("unknown time scheme");
}

void FormBlocks::append(FormBlocks&& other) {
  stat.insert(stat.end(), other.stat.begin(), other.stat.end());
  timec.insert(timec.end(), other.timec.begin(), other.timec.end());
}

// a_h^j: symmetric interior penalty form for the viscous/elastic block,
//   (2 mu eps(u), eps(v)) + sum_K <2 beta mu / h_K (u - ubar), v - vbar>
//   - <2 mu eps(u) n, v - vbar> - <2 mu eps(v) n, u - ubar>.
FormBlocks assemble_ah(const Discretization& disc, const ParameterSet& params,
                       Subdomain j, int workers) {
  const Mesh& mesh = *disc.mesh;
  const DofMap& dm = disc.dm;
  const double mu = j == Subdomain::Stokes ? params.mu_s : params.mu_b;
  const double beta = j == Subdomain::Stokes ? params.beta_s : params.beta_b;
  const int nb = dm.nb_cell;
  const int nbf = dm.nb_facet;

  auto kernel = [&](int c, std::vector<Trip>& stat, std::vector<Trip>&) {
    const auto& cell = mesh.cells[c];
    if (cell.subdomain != j) return;
    const CellGeometry geo = cell_geometry(mesh, c);

    MatrixX kcc = MatrixX::Zero(2 * nb, 2 * nb);

    // Volume strain term.
    const MatrixX gpx =
        geo.inv_jac_t(0, 0) * disc.vol_gx + geo.inv_jac_t(0, 1) * disc.vol_gy;
    const MatrixX gpy =
        geo.inv_jac_t(1, 0) * disc.vol_gx + geo.inv_jac_t(1, 1) * disc.vol_gy;
    for (int q = 0; q < disc.vol_rule.size(); ++q) {
      const double w = disc.vol_rule.weights(q) * geo.det * mu;
      for (int a = 0; a < nb; ++a) {
        const double gax = gpx(q, a), gay = gpy(q, a);
        for (int b = 0; b < nb; ++b) {
          const double gbx = gpx(q, b), gby = gpy(q, b);
          const double dot = gax * gbx + gay * gby;
          kcc(a, b) += w * (gax * gbx + dot);
          kcc(a, nb + b) += w * (gay * gbx);
          kcc(nb + a, b) += w * (gax * gby);
          kcc(nb + a, nb + b) += w * (gay * gby + dot);
        }
      }
    }

    const auto u_idx = vector_dofs(dm.u_off[c], nb);
    for (int e = 0; e < 3; ++e) {
      const int f = cell.facet[e];
      const auto& facet = mesh.facets[f];
      const Vec2 n = cell_outward_normal(mesh, c, f);
      const double pen = 2.0 * beta * mu / cell.h;
      const FacetTrace tr = facet_trace(disc, geo, c, f);
      const int ubar_off =
          j == Subdomain::Stokes ? dm.ubar_s_off[f] : dm.ubar_b_off[f];

      MatrixX kcb = MatrixX::Zero(2 * nb, 2 * nbf);
      MatrixX kbc = MatrixX::Zero(2 * nbf, 2 * nb);
      MatrixX kbb = MatrixX::Zero(2 * nbf, 2 * nbf);
      for (int q = 0; q < disc.facet_rule.size(); ++q) {
        const double wl = disc.facet_rule.weights(q) * facet.length;
        // Penalty, identical for both components.
        for (int i = 0; i < 2; ++i) {
          for (int a = 0; a < nb; ++a) {
            const double va = tr.val(q, a);
            for (int b = 0; b < nb; ++b)
              kcc(i * nb + a, i * nb + b) += pen * wl * va * tr.val(q, b);
            for (int m = 0; m < nbf; ++m)
              kcb(i * nb + a, i * nbf + m) -=
                  pen * wl * va * disc.facet_val(q, m);
          }
          for (int m = 0; m < nbf; ++m) {
            const double fm = disc.facet_val(q, m);
            for (int b = 0; b < nb; ++b)
              kbc(i * nbf + m, i * nb + b) -= pen * wl * fm * tr.val(q, b);
            for (int mp = 0; mp < nbf; ++mp)
              kbb(i * nbf + m, i * nbf + mp) +=
                  pen * wl * fm * disc.facet_val(q, mp);
          }
        }
        // Consistency terms. For the basis function (component jc, mode b),
        // [2 mu eps n]_i = mu (delta_{i,jc} g.n + g_i n_jc).
        for (int b = 0; b < nb; ++b) {
          const double gbx = tr.gpx(q, b), gby = tr.gpy(q, b);
          const double gn = gbx * n.x() + gby * n.y();
          const double g[2] = {gbx, gby};
          for (int jc = 0; jc < 2; ++jc) {
            double t[2];
            t[0] = mu * ((jc == 0 ? gn : 0.0) + g[0] * n(jc));
            t[1] = mu * ((jc == 1 ? gn : 0.0) + g[1] * n(jc));
            for (int i = 0; i < 2; ++i) {
              // -<2 mu eps(u) n, v - vbar>
              for (int a = 0; a < nb; ++a)
                kcc(i * nb + a, jc * nb + b) -= wl * t[i] * tr.val(q, a);
              for (int m = 0; m < nbf; ++m)
                kbc(i * nbf + m, jc * nb + b) +=
                    wl * t[i] * disc.facet_val(q, m);
              // -<2 mu eps(v) n, u - ubar> (same tensor, roles swapped)
              for (int a = 0; a < nb; ++a)
                kcc(jc * nb + b, i * nb + a) -= wl * t[i] * tr.val(q, a);
              for (int m = 0; m < nbf; ++m)
                kcb(jc * nb + b, i * nbf + m) +=
                    wl * t[i] * disc.facet_val(q, m);
            }
          }
        }
      }
      const auto ub_idx = vector_dofs(ubar_off, nbf);
      emit_dense(stat, kcb, u_idx, ub_idx);
      emit_dense(stat, kbc, ub_idx, u_idx);
      emit_dense(stat, kbb, ub_idx, ub_idx);
    }
    emit_dense(stat, kcc, u_idx, u_idx);
  };
  return run_cells(mesh.n_cells(), workers, kernel);
}

// b_h^j: -(q, div v) + <qbar, (v - vbar).n>. Emitted twice: into the mass
// rows directly and into the momentum rows transposed.
FormBlocks assemble_bh(const Discretization& disc, Subdomain j, int workers) {
  const Mesh& mesh = *disc.mesh;
  const DofMap& dm = disc.dm;
  const int nb = dm.nb_cell;
  const int nbp = dm.nb_pres;
  const int nbf = dm.nb_facet;

  auto kernel = [&](int c, std::vector<Trip>& stat, std::vector<Trip>&) {
    const auto& cell = mesh.cells[c];
    if (cell.subdomain != j) return;
    const CellGeometry geo = cell_geometry(mesh, c);

    const MatrixX gpx =
        geo.inv_jac_t(0, 0) * disc.vol_gx + geo.inv_jac_t(0, 1) * disc.vol_gy;
    const MatrixX gpy =
        geo.inv_jac_t(1, 0) * disc.vol_gx + geo.inv_jac_t(1, 1) * disc.vol_gy;

    MatrixX bvol = MatrixX::Zero(nbp, 2 * nb);
    for (int q = 0; q < disc.vol_rule.size(); ++q) {
      const double w = disc.vol_rule.weights(q) * geo.det;
      for (int a = 0; a < nbp; ++a) {
        const double pa = disc.vol_val_p(q, a);
        for (int b = 0; b < nb; ++b) {
          bvol(a, b) -= w * pa * gpx(q, b);
          bvol(a, nb + b) -= w * pa * gpy(q, b);
        }
      }
    }
    const auto u_idx = vector_dofs(dm.u_off[c], nb);
    const auto p_idx = scalar_dofs(dm.p_off[c], nbp);
    emit_dense(stat, bvol, p_idx, u_idx);
    emit_dense(stat, MatrixX(bvol.transpose()), u_idx, p_idx);

    for (int e = 0; e < 3; ++e) {
      const int f = cell.facet[e];
      const auto& facet = mesh.facets[f];
      const Vec2 n = cell_outward_normal(mesh, c, f);
      const FacetTrace tr = facet_trace(disc, geo, c, f);
      const int ubar_off =
          j == Subdomain::Stokes ? dm.ubar_s_off[f] : dm.ubar_b_off[f];
      const int pbar_off =
          j == Subdomain::Stokes ? dm.pbar_s_off[f] : dm.pbar_b_off[f];

      MatrixX bfc = MatrixX::Zero(nbf, 2 * nb);
      MatrixX bfb = MatrixX::Zero(nbf, 2 * nbf);
      for (int q = 0; q < disc.facet_rule.size(); ++q) {
        const double wl = disc.facet_rule.weights(q) * facet.length;
        for (int m = 0; m < nbf; ++m) {
          const double fm = wl * disc.facet_val(q, m);
          for (int b = 0; b < nb; ++b) {
            bfc(m, b) += fm * tr.val(q, b) * n.x();
            bfc(m, nb + b) += fm * tr.val(q, b) * n.y();
          }
          for (int mp = 0; mp < nbf; ++mp) {
            bfb(m, mp) -= fm * disc.facet_val(q, mp) * n.x();
            bfb(m, nbf + mp) -= fm * disc.facet_val(q, mp) * n.y();
          }
        }
      }
      const auto pb_idx = scalar_dofs(pbar_off, nbf);
      const auto ub_idx = vector_dofs(ubar_off, nbf);
      emit_dense(stat, bfc, pb_idx, u_idx);
      emit_dense(stat, MatrixX(bfc.transpose()), u_idx, pb_idx);
      emit_dense(stat, bfb, pb_idx, ub_idx);
      emit_dense(stat, MatrixX(bfb.transpose()), ub_idx, pb_idx);
    }
  };
  return run_cells(mesh.n_cells(), workers, kernel);
}

// c_h((P, R), q) = (lambda^{-1} (alpha P - R), q) on the Biot subdomain.
// Static placement: mass rows, c_h((p^p, p^b), q^b). Time-coupled placement:
// pore-pressure rows, c_h((d_t p^p, d_t p^b), alpha q^p).
FormBlocks assemble_ch(const Discretization& disc, const ParameterSet& params) {
  const Mesh& mesh = *disc.mesh;
  const DofMap& dm = disc.dm;
  const int nbp = dm.nb_pres;
  const double il = params.inv_lambda;

  auto kernel = [&](int c, std::vector<Trip>& stat, std::vector<Trip>& timec) {
    const auto& cell = mesh.cells[c];
    if (cell.subdomain != Subdomain::Biot) return;
    const CellGeometry geo = cell_geometry(mesh, c);
    MatrixX mass = MatrixX::Zero(nbp, nbp);
    for (int q = 0; q < disc.vol_rule.size(); ++q) {
      const double w = disc.vol_rule.weights(q) * geo.det;
      for (int a = 0; a < nbp; ++a)
        for (int b = 0; b < nbp; ++b)
          mass(a, b) += w * disc.vol_val_p(q, a) * disc.vol_val_p(q, b);
    }
    const auto p_idx = scalar_dofs(dm.p_off[c], nbp);
    const auto pp_idx = scalar_dofs(dm.pp_off[c], nbp);
    emit_dense(stat, MatrixX(params.alpha * il * mass), p_idx, pp_idx);
    emit_dense(stat, MatrixX(-il * mass), p_idx, p_idx);
    emit_dense(timec, MatrixX(params.alpha * params.alpha * il * mass), pp_idx,
               pp_idx);
    emit_dense(timec, MatrixX(-params.alpha * il * mass), pp_idx, p_idx);
  };
  return run_cells(mesh.n_cells(), 1, kernel);
}

// (c0 d_t p^p, q^p) on the Biot subdomain.
FormBlocks assemble_storage_mass(const Discretization& disc,
                                 const ParameterSet& params) {
  const Mesh& mesh = *disc.mesh;
  const DofMap& dm = disc.dm;
  const int nbp = dm.nb_pres;

  auto kernel = [&](int c, std::vector<Trip>&, std::vector<Trip>& timec) {
    const auto& cell = mesh.cells[c];
    if (cell.subdomain != Subdomain::Biot) return;
    const CellGeometry geo = cell_geometry(mesh, c);
    MatrixX mass = MatrixX::Zero(nbp, nbp);
    for (int q = 0; q < disc.vol_rule.size(); ++q) {
      const double w = disc.vol_rule.weights(q) * geo.det * params.c0;
      for (int a = 0; a < nbp; ++a)
        for (int b = 0; b < nbp; ++b)
          mass(a, b) += w * disc.vol_val_p(q, a) * disc.vol_val_p(q, b);
    }
    emit_dense(timec, mass, scalar_dofs(dm.pp_off[c], nbp),
               scalar_dofs(dm.pp_off[c], nbp));
  };
  return run_cells(mesh.n_cells(), 1, kernel);
}

// Interface coupling: the BJS form a_h^I and the normal-flux form b_h^I.
// The second velocity slot carries the discrete time derivative of the Biot
// trace, so those columns land in the time-coupled block.
FormBlocks assemble_interface(const Discretization& disc,
                              const ParameterSet& params) {
  const Mesh& mesh = *disc.mesh;
  const DofMap& dm = disc.dm;
  const int nbf = dm.nb_facet;
  const double coef = params.gamma * std::sqrt(params.mu_s / params.kappa);

  FormBlocks fb;
  for (int f = 0; f < mesh.n_facets(); ++f) {
    const auto& facet = mesh.facets[f];
    if (!is_interface(facet.cls)) continue;
    const Vec2 n = facet.normal;
    const Mat2 pt = Mat2::Identity() - n * n.transpose();

    MatrixX ff = MatrixX::Zero(nbf, nbf);
    for (int q = 0; q < disc.facet_rule.size(); ++q) {
      const double wl = disc.facet_rule.weights(q) * facet.length;
      for (int m = 0; m < nbf; ++m)
        for (int mp = 0; mp < nbf; ++mp)
          ff(m, mp) += wl * disc.facet_val(q, m) * disc.facet_val(q, mp);
    }

    const int us = dm.ubar_s_off[f];
    const int ub = dm.ubar_b_off[f];
    const int pp = dm.pbar_p_off[f];
    for (int i = 0; i < 2; ++i) {
      for (int ip = 0; ip < 2; ++ip) {
        for (int m = 0; m < nbf; ++m)
          for (int mp = 0; mp < nbf; ++mp) {
            const double v = coef * pt(i, ip) * ff(m, mp);
            if (v != 0.0) {
              // a_h^I rows (vbar^s - vbar^b), columns ubar^s (static) and
              // ubar^b (time-coupled, sign from ubar^s - d_t ubar^b).
              fb.stat.emplace_back(us + i * nbf + m, us + ip * nbf + mp, v);
              fb.stat.emplace_back(ub + i * nbf + m, us + ip * nbf + mp, -v);
              fb.timec.emplace_back(us + i * nbf + m, ub + ip * nbf + mp, -v);
              fb.timec.emplace_back(ub + i * nbf + m, ub + ip * nbf + mp, v);
            }
          }
      }
      if (n(i) != 0.0) {
        for (int m = 0; m < nbf; ++m)
          for (int mp = 0; mp < nbf; ++mp) {
            const double v = n(i) * ff(m, mp);
            // b_h^I(pbar^p, (vbar^s, vbar^b)) in the momentum rows.
            fb.stat.emplace_back(us + i * nbf + m, pp + mp, v);
            fb.stat.emplace_back(ub + i * nbf + m, pp + mp, -v);
            // -b_h^I(qbar^p, (ubar^s, d_t ubar^b)) in the pore-pressure rows.
            fb.stat.emplace_back(pp + m, us + i * nbf + mp, -v);
            fb.timec.emplace_back(pp + m, ub + i * nbf + mp, v);
          }
      }
    }
  }
  return fb;
}

// Darcy block: (kappa^{-1} z, w) plus the coupling b_h^b(., (w, 0)) between
// the pore-pressure pair and the Darcy velocity, emitted in the Darcy rows
// (transposed) and negated in the pore-pressure rows.
FormBlocks assemble_darcy(const Discretization& disc,
                          const ParameterSet& params, int workers) {
  const Mesh& mesh = *disc.mesh;
  const DofMap& dm = disc.dm;
  const int nb = dm.nb_cell;
  const int nbp = dm.nb_pres;
  const int nbf = dm.nb_facet;

  auto kernel = [&](int c, std::vector<Trip>& stat, std::vector<Trip>&) {
    const auto& cell = mesh.cells[c];
    if (cell.subdomain != Subdomain::Biot) return;
    const CellGeometry geo = cell_geometry(mesh, c);

    const auto z_idx = vector_dofs(dm.z_off[c], nb);
    MatrixX zmass = MatrixX::Zero(2 * nb, 2 * nb);
    const MatrixX gpx =
        geo.inv_jac_t(0, 0) * disc.vol_gx + geo.inv_jac_t(0, 1) * disc.vol_gy;
    const MatrixX gpy =
        geo.inv_jac_t(1, 0) * disc.vol_gx + geo.inv_jac_t(1, 1) * disc.vol_gy;
    MatrixX bvol = MatrixX::Zero(nbp, 2 * nb);
    for (int q = 0; q < disc.vol_rule.size(); ++q) {
      const double w = disc.vol_rule.weights(q) * geo.det;
      for (int a = 0; a < nb; ++a)
        for (int b = 0; b < nb; ++b) {
          const double v = w / params.kappa * disc.vol_val(q, a) *
                           disc.vol_val(q, b);
          zmass(a, b) += v;
          zmass(nb + a, nb + b) += v;
        }
      for (int a = 0; a < nbp; ++a) {
        const double pa = disc.vol_val_p(q, a);
        for (int b = 0; b < nb; ++b) {
          bvol(a, b) -= w * pa * gpx(q, b);
          bvol(a, nb + b) -= w * pa * gpy(q, b);
        }
      }
    }
    emit_dense(stat, zmass, z_idx, z_idx);
    const auto pp_idx = scalar_dofs(dm.pp_off[c], nbp);
    emit_dense(stat, MatrixX(bvol.transpose()), z_idx, pp_idx);  // Darcy row
    emit_dense(stat, MatrixX(-bvol), pp_idx, z_idx);             // pore row

    for (int e = 0; e < 3; ++e) {
      const int f = cell.facet[e];
      const auto& facet = mesh.facets[f];
      const Vec2 n = cell_outward_normal(mesh, c, f);
      const FacetTrace tr = facet_trace(disc, geo, c, f);
      MatrixX bf = MatrixX::Zero(nbf, 2 * nb);
      for (int q = 0; q < disc.facet_rule.size(); ++q) {
        const double wl = disc.facet_rule.weights(q) * facet.length;
        for (int m = 0; m < nbf; ++m) {
          const double fm = wl * disc.facet_val(q, m);
          for (int b = 0; b < nb; ++b) {
            bf(m, b) += fm * tr.val(q, b) * n.x();
            bf(m, nb + b) += fm * tr.val(q, b) * n.y();
          }
        }
      }
      const auto pbp_idx = scalar_dofs(dm.pbar_p_off[f], nbf);
      emit_dense(stat, MatrixX(bf.transpose()), z_idx, pbp_idx);
      emit_dense(stat, MatrixX(-bf), pbp_idx, z_idx);
    }
  };
  return run_cells(mesh.n_cells(), workers, kernel);
}

FormBlocks assemble_all(const Discretization& disc, const ParameterSet& params,
                        int workers) {
  params.validate();
  FormBlocks fb = assemble_ah(disc, params, Subdomain::Stokes, workers);
  fb.append(assemble_ah(disc, params, Subdomain::Biot, workers));
  fb.append(assemble_bh(disc, Subdomain::Stokes, workers));
  fb.append(assemble_bh(disc, Subdomain::Biot, workers));
  fb.append(assemble_ch(disc, params));
  fb.append(assemble_storage_mass(disc, params));
  fb.append(assemble_interface(disc, params));
  fb.append(assemble_darcy(disc, params, workers));
  return fb;
}

FormBlocks assemble_all_serial(const Discretization& disc,
                               const ParameterSet& params) {
  params.validate();
  FormBlocks fb = assemble_ah(disc, params, Subdomain::Stokes, 1);
  fb.append(assemble_ah(disc, params, Subdomain::Biot, 1));
  fb.append(assemble_bh(disc, Subdomain::Stokes, 1));
  fb.append(assemble_bh(disc, Subdomain::Biot, 1));
  fb.append(assemble_ch(disc, params));
  fb.append(assemble_storage_mass(disc, params));
  fb.append(assemble_interface(disc, params));
  fb.append(assemble_darcy(disc, params, 1));
  return fb;
}

Vector assemble_data_rhs(const Discretization& disc, const ParameterSet& params,
                         const ProblemData& data, double t, int workers) {
  const Mesh& mesh = *disc.mesh;
  const DofMap& dm = disc.dm;
  const int nb = dm.nb_cell;
  const int nbp = dm.nb_pres;
  const int nbf = dm.nb_facet;

  if (!data.f_s || !data.f_b || !data.g_b)
    throw Error("volume data (f^s, f^b, g^b) not provided");
  auto require = [&](bool present, FacetClass cls, const char* name) {
    if (!present && mesh.count_facets(cls) > 0)
      throw Error(std::string("data ") + name + " not provided but " +
                  to_string(cls) + " facets are present");
  };
  require(bool(data.S_s), FacetClass::StokesNeumann, "S^s");
  require(bool(data.S_b), FacetClass::BiotNeumannPore, "S^b");
  require(bool(data.S_b), FacetClass::BiotNeumannFlux, "S^b");
  require(bool(data.Z), FacetClass::BiotDirichletFlux, "Z");
  require(bool(data.Z), FacetClass::BiotNeumannFlux, "Z");
  const bool has_iface = mesh.count_facets(FacetClass::Interface) > 0;
  if (has_iface && (!data.M_u || !data.M_s || !data.M_p || !data.M_e))
    throw Error("interface data (M^u, M^s, M^p, M^e) not provided");

  Vector rhs = Vector::Zero(dm.n_full);

  // Volume loads; rows touched by one cell are disjoint from all others.
  const int nthreads = resolve_workers(workers);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    const CellGeometry geo = cell_geometry(mesh, c);
    const bool biot = cell.subdomain == Subdomain::Biot;
    const auto& fvol = biot ? data.f_b : data.f_s;
    for (int q = 0; q < disc.vol_rule.size(); ++q) {
      const double w = disc.vol_rule.weights(q) * geo.det;
      const Vec2 xq = geo.v0 + geo.jac * disc.vol_rule.points[q];
      const Vec2 fv = fvol(xq, t);
      for (int a = 0; a < nb; ++a) {
        rhs(dm.u_dof(c, 0, a)) += w * fv.x() * disc.vol_val(q, a);
        rhs(dm.u_dof(c, 1, a)) += w * fv.y() * disc.vol_val(q, a);
      }
      if (biot) {
        const double g = data.g_b(xq, t);
        for (int a = 0; a < nbp; ++a)
          rhs(dm.pp_dof(c, a)) += w * g * disc.vol_val_p(q, a);
      }
    }
  }

  // Facet data; each facet owns its rows, loop kept serial.
  for (int f = 0; f < mesh.n_facets(); ++f) {
    const auto& facet = mesh.facets[f];
    const FacetClass cls = facet.cls;
    const Vec2 n = facet.normal;
    for (int q = 0; q < disc.facet_rule.size(); ++q) {
      const double wl = disc.facet_rule.weights(q) * facet.length;
      const Vec2 xq = mesh.facet_point(f, disc.facet_rule.points[q].x());
      if (is_stokes_neumann(cls)) {
        const Vec2 s = data.S_s(xq, n, t);
        for (int m = 0; m < nbf; ++m) {
          const double fm = wl * disc.facet_val(q, m);
          rhs(dm.ubar_s_dof(f, 0, m)) += fm * s.x();
          rhs(dm.ubar_s_dof(f, 1, m)) += fm * s.y();
        }
      }
      if (is_biot_traction_neumann(cls)) {
        const Vec2 s = data.S_b(xq, n, t);
        for (int m = 0; m < nbf; ++m) {
          const double fm = wl * disc.facet_val(q, m);
          rhs(dm.ubar_b_dof(f, 0, m)) += fm * s.x();
          rhs(dm.ubar_b_dof(f, 1, m)) += fm * s.y();
        }
      }
      if (is_darcy_flux(cls)) {
        const double z = data.Z(xq, n, t);
        for (int m = 0; m < nbf; ++m)
          rhs(dm.pbar_p_dof(f, m)) -= wl * disc.facet_val(q, m) * z;
      }
      if (is_interface(cls)) {
        const Mat2 pt = Mat2::Identity() - n * n.transpose();
        const double mu_ = data.M_u(xq, n, t);
        const double mp_ = data.M_p(xq, n, t);
        const Vec2 ms_ = data.M_s(xq, n, t);
        const Vec2 me_t = pt * data.M_e(xq, n, t);
        for (int m = 0; m < nbf; ++m) {
          const double fm = wl * disc.facet_val(q, m);
          // Momentum rows: -<M^p, (vbar^s - vbar^b).n> - <M^e, (...)^t>
          // + <M^s, vbar^b>.
          rhs(dm.ubar_s_dof(f, 0, m)) += fm * (-mp_ * n.x() - me_t.x());
          rhs(dm.ubar_s_dof(f, 1, m)) += fm * (-mp_ * n.y() - me_t.y());
          rhs(dm.ubar_b_dof(f, 0, m)) += fm * (mp_ * n.x() + me_t.x() + ms_.x());
          rhs(dm.ubar_b_dof(f, 1, m)) += fm * (mp_ * n.y() + me_t.y() + ms_.y());
          // Pore-pressure row: -<qbar^p, M^u>.
          rhs(dm.pbar_p_dof(f, m)) -= fm * mu_;
        }
      }
    }
  }
  return rhs;
}

namespace {

void split_triplets(const DofMap& dm, const std::vector<Trip>& in,
                    std::vector<Trip>& uu, std::vector<Trip>& uc) {
  for (const auto& t : in) {
    const int r = dm.full_to_sys[t.row()];
    if (r < 0) continue;  // constrained test function: row eliminated
    const int c = dm.full_to_sys[t.col()];
    if (c >= 0)
      uu.emplace_back(r, c, t.value());
    else
      uc.emplace_back(r, dm.full_to_con[t.col()], t.value());
  }
}

Vector gather(const std::vector<int>& idx, const Vector& full) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = full(idx[i]);
  return out;
}

}  // namespace

BilinearSystem build_bilinear_system(const Discretization& disc,
                                     const ParameterSet& params, int workers,
                                     bool serial_reference) {
  const DofMap& dm = disc.dm;
  FormBlocks fb = serial_reference ? assemble_all_serial(disc, params)
                                   : assemble_all(disc, params, workers);
  std::vector<Trip> suu, suc, tuu, tuc;
  split_triplets(dm, fb.stat, suu, suc);
  split_triplets(dm, fb.timec, tuu, tuc);
  BilinearSystem sys;
  sys.S_uu.resize(dm.n_sys, dm.n_sys);
  sys.S_uc.resize(dm.n_sys, std::max(dm.n_con, 1));
  sys.T_uu.resize(dm.n_sys, dm.n_sys);
  sys.T_uc.resize(dm.n_sys, std::max(dm.n_con, 1));
  sys.S_uu.setFromTriplets(suu.begin(), suu.end());
  sys.S_uc.setFromTriplets(suc.begin(), suc.end());
  sys.T_uu.setFromTriplets(tuu.begin(), tuu.end());
  sys.T_uc.setFromTriplets(tuc.begin(), tuc.end());
  return sys;
}

SpMat system_matrix(const BilinearSystem& sys, const TimeStencil& stencil) {
  SpMat a = sys.S_uu + stencil.a0 * sys.T_uu;
  a.makeCompressed();
  return a;
}

Vector system_rhs(const Discretization& disc, const BilinearSystem& sys,
                  const TimeStencil& stencil, const Vector& data_rhs_full,
                  const std::vector<const SystemState*>& prev,
                  const Vector& constrained_values) {
  const DofMap& dm = disc.dm;
  Vector b = gather(dm.sys_to_full, data_rhs_full);
  if (stencil.c1 != 0.0 || stencil.c2 != 0.0) {
    if (prev.empty() || (stencil.c2 != 0.0 && prev.size() < 2))
      throw Error("missing history states for the time stencil");
    Vector h = stencil.c1 * prev[0]->coeffs;
    if (stencil.c2 != 0.0) h += stencil.c2 * prev[1]->coeffs;
    b += sys.T_uu * gather(dm.sys_to_full, h);
    if (dm.n_con > 0) b += sys.T_uc * gather(dm.con_to_full, h);
  }
  if (dm.n_con > 0) {
    const Vector gc = gather(dm.con_to_full, constrained_values);
    b -= sys.S_uc * gc;
    b -= stencil.a0 * (sys.T_uc * gc);
  }
  return b;
}

AssembledSystem assemble_system(const Discretization& disc,
                                const ParameterSet& params, TimeScheme mode,
                                const std::vector<const SystemState*>& prev,
                                const ProblemData& data, double t,
                                int workers) {
  params.validate();
  if (static_cast<int>(prev.size()) < history_size(mode))
    throw Error("missing history states for the requested scheme");
  const TimeStencil stencil = stencil_for(mode, params);
  const BilinearSystem sys = build_bilinear_system(disc, params, workers);
  AssembledSystem out;
  out.constrained_values = apply_essential_data(disc, data, t);
  const Vector data_rhs = assemble_data_rhs(disc, params, data, t, workers);
  out.A = system_matrix(sys, stencil);
  out.b = system_rhs(disc, sys, stencil, data_rhs, prev, out.constrained_values);
  return out;
}

SystemState make_state(const DofMap& dm, const Vector& x_sys,
                       const Vector& constrained_values, double t) {
  SystemState st;
  st.coeffs = Vector::Zero(dm.n_full);
  for (int i = 0; i < dm.n_sys; ++i) st.coeffs(dm.sys_to_full[i]) = x_sys(i);
  for (int i = 0; i < dm.n_con; ++i)
    st.coeffs(dm.con_to_full[i]) = constrained_values(dm.con_to_full[i]);
  st.time = t;
  return st;
}

ProblemData ProblemData::zero() {
  ProblemData d;
  auto zs = [](const Vec2&, double) { return 0.0; };
  auto zv = [](const Vec2&, double) { return Vec2::Zero().eval(); };
  auto zfs = [](const Vec2&, const Vec2&, double) { return 0.0; };
  auto zfv = [](const Vec2&, const Vec2&, double) {
    return Vec2::Zero().eval();
  };
  d.f_s = d.f_b = d.U_s = d.U_b = zv;
  d.g_b = d.P_p = zs;
  d.S_s = d.S_b = d.M_s = d.M_e = zfv;
  d.Z = d.M_u = d.M_p = zfs;
  return d;
}

}  // namespace sbhdg
