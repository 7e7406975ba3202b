#pragma once

#include <vector>

#include "sbhdg/assembly.hpp"

namespace sbhdg {

/// Evaluation of discrete fields from a coefficient vector. Shared by error
/// norms, conformity checks, and field export.

struct VecSamples {
  std::vector<Vec2> val;
  std::vector<Mat2> grad;  // grad[k](i,j) = d_j u_i at point k (if requested)
};

/// Vector cell field (u or z) at reference points of cell c; base is the
/// first dof of the block (dm.u_off[c] or dm.z_off[c]).
VecSamples eval_cell_vector(const Discretization& disc, const Vector& coeffs,
                            int base, int c, const std::vector<Vec2>& ref_pts,
                            bool with_gradients = false);

/// Scalar P_{k-1} cell field (p or p^p) at reference points.
std::vector<double> eval_cell_scalar(const Discretization& disc,
                                     const Vector& coeffs, int base,
                                     const std::vector<Vec2>& ref_pts);

/// Facet fields at parameter points s in [0,1] along the facet.
std::vector<Vec2> eval_facet_vector(const Discretization& disc,
                                    const Vector& coeffs, int base,
                                    const std::vector<double>& s);
std::vector<double> eval_facet_scalar(const Discretization& disc,
                                      const Vector& coeffs, int base,
                                      const std::vector<double>& s);

}  // namespace sbhdg
