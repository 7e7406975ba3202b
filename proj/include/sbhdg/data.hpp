#pragma once

#include <functional>

#include "sbhdg/core.hpp"

namespace sbhdg {

using ScalarField = std::function<double(const Vec2&, double)>;
using VectorField = std::function<Vec2(const Vec2&, double)>;
// Facet data receive the facet normal: outward normal of the domain on the
// outer boundary, n = n^s on the interface.
using ScalarFacetField = std::function<double(const Vec2&, const Vec2&, double)>;
using VectorFacetField = std::function<Vec2(const Vec2&, const Vec2&, double)>;

/// Loads, boundary data, and interface corrections of one problem instance.
/// A field left empty counts as "not provided"; assembly rejects a missing
/// field only if the mesh contains a facet class that needs it.
struct ProblemData {
  VectorField f_s, f_b;     // body forces
  ScalarField g_b;          // source/sink
  VectorField U_s, U_b;     // essential velocity / displacement traces
  VectorFacetField S_s, S_b;  // prescribed tractions sigma^j n
  ScalarField P_p;          // essential pore pressure
  ScalarFacetField Z;       // prescribed Darcy flux z.n

  // Interface residual data: the stationary/manufactured interface
  // conditions hold up to these corrections.
  ScalarFacetField M_u, M_p;
  VectorFacetField M_s, M_e;

  static ProblemData zero();
};

}  // namespace sbhdg
