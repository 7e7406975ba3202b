#include "sbhdg/fields.hpp"

namespace sbhdg {

VecSamples eval_cell_vector(const Discretization& disc, const Vector& coeffs,
                            int base, int c, const std::vector<Vec2>& ref_pts,
                            bool with_gradients) {
  const int nb = disc.dm.nb_cell;
  MatrixX val, gx, gy;
  disc.cell_basis.eval(ref_pts, &val, with_gradients ? &gx : nullptr,
                       with_gradients ? &gy : nullptr);
  VecSamples out;
  out.val.resize(ref_pts.size());
  if (with_gradients) out.grad.resize(ref_pts.size());
  const CellGeometry geo = cell_geometry(*disc.mesh, c);
  for (std::size_t q = 0; q < ref_pts.size(); ++q) {
    Vec2 v = Vec2::Zero();
    Mat2 gref = Mat2::Zero();  // gref(i,j) = d̂_j u_i
    for (int a = 0; a < nb; ++a) {
      const double c0 = coeffs(base + a);
      const double c1 = coeffs(base + nb + a);
      v.x() += c0 * val(q, a);
      v.y() += c1 * val(q, a);
      if (with_gradients) {
        gref(0, 0) += c0 * gx(q, a);
        gref(0, 1) += c0 * gy(q, a);
        gref(1, 0) += c1 * gx(q, a);
        gref(1, 1) += c1 * gy(q, a);
      }
    }
    out.val[q] = v;
    if (with_gradients) out.grad[q] = gref * geo.inv_jac_t.transpose();
  }
  return out;
}

std::vector<double> eval_cell_scalar(const Discretization& disc,
                                     const Vector& coeffs, int base,
                                     const std::vector<Vec2>& ref_pts) {
  const int nbp = disc.dm.nb_pres;
  const MatrixX val = disc.pressure_basis.values(ref_pts);
  std::vector<double> out(ref_pts.size(), 0.0);
  for (std::size_t q = 0; q < ref_pts.size(); ++q)
    for (int a = 0; a < nbp; ++a) out[q] += coeffs(base + a) * val(q, a);
  return out;
}

std::vector<Vec2> eval_facet_vector(const Discretization& disc,
                                    const Vector& coeffs, int base,
                                    const std::vector<double>& s) {
  const int nbf = disc.dm.nb_facet;
  const MatrixX val = disc.facet_basis.values(s);
  std::vector<Vec2> out(s.size(), Vec2::Zero());
  for (std::size_t q = 0; q < s.size(); ++q)
    for (int m = 0; m < nbf; ++m) {
      out[q].x() += coeffs(base + m) * val(q, m);
      out[q].y() += coeffs(base + nbf + m) * val(q, m);
    }
  return out;
}

std::vector<double> eval_facet_scalar(const Discretization& disc,
                                      const Vector& coeffs, int base,
                                      const std::vector<double>& s) {
  const int nbf = disc.dm.nb_facet;
  const MatrixX val = disc.facet_basis.values(s);
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t q = 0; q < s.size(); ++q)
    for (int m = 0; m < nbf; ++m) out[q] += coeffs(base + m) * val(q, m);
  return out;
}

}  // namespace sbhdg
