#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbhdg/core.hpp"

namespace sbhdg {

enum class Subdomain : std::uint8_t { Stokes = 0, Biot = 1 };

/// Facet classification. Outer boundary facets of the poroelastic subdomain
/// carry both partitions of its boundary (displacement: Dirichlet/Neumann,
/// pore pressure: pressure/flux), so the Biot boundary classes enumerate the
/// four combinations.
enum class FacetClass : std::uint8_t {
  InteriorStokes = 0,
  InteriorBiot,
  StokesDirichlet,     // u^s prescribed
  StokesNeumann,       // sigma^s n prescribed
  BiotDirichletPore,   // u^b prescribed, p^p prescribed
  BiotDirichletFlux,   // u^b prescribed, z.n prescribed
  BiotNeumannPore,     // sigma^b n prescribed, p^p prescribed
  BiotNeumannFlux,     // sigma^b n prescribed, z.n prescribed
  Interface,
};

const char* to_string(FacetClass c);

inline bool is_interior(FacetClass c) {
  return c == FacetClass::InteriorStokes || c == FacetClass::InteriorBiot;
}
inline bool is_interface(FacetClass c) { return c == FacetClass::Interface; }
inline bool is_stokes_dirichlet(FacetClass c) {
  return c == FacetClass::StokesDirichlet;
}
inline bool is_stokes_neumann(FacetClass c) {
  return c == FacetClass::StokesNeumann;
}
inline bool is_biot_displacement_dirichlet(FacetClass c) {
  return c == FacetClass::BiotDirichletPore ||
         c == FacetClass::BiotDirichletFlux;
}
inline bool is_biot_traction_neumann(FacetClass c) {
  return c == FacetClass::BiotNeumannPore || c == FacetClass::BiotNeumannFlux;
}
inline bool is_pore_dirichlet(FacetClass c) {
  return c == FacetClass::BiotDirichletPore || c == FacetClass::BiotNeumannPore;
}
inline bool is_darcy_flux(FacetClass c) {
  return c == FacetClass::BiotDirichletFlux || c == FacetClass::BiotNeumannFlux;
}
inline bool is_biot_boundary(FacetClass c) {
  return is_biot_displacement_dirichlet(c) || is_biot_traction_neumann(c);
}

struct MeshCell {
  std::array<int, 3> v;       // counterclockwise vertex ids
  Subdomain subdomain;
  std::array<int, 3> facet;   // facet of local edge e = (v[e], v[(e+1)%3])
  double h;                   // diameter (longest edge)
  double area;
};

struct MeshFacet {
  // Vertex pair in the order traversed by cell[0]; cell[1] (if present)
  // traverses it in the opposite order.
  std::array<int, 2> v;
  std::array<int, 2> cell{-1, -1};
  FacetClass cls;
  Vec2 normal;   // outward normal of cell[0]; equals n^s on the interface
  double length;
};

class Mesh {
 public:
  std::vector<Vec2> vertices;
  std::vector<MeshCell> cells;
  std::vector<MeshFacet> facets;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_facets() const { return static_cast<int>(facets.size()); }

  std::array<Vec2, 3> cell_vertices(int c) const {
    const auto& k = cells[c];
    return {vertices[k.v[0]], vertices[k.v[1]], vertices[k.v[2]]};
  }

  Vec2 facet_point(int f, double s) const {
    const auto& fa = facets[f];
    return vertices[fa.v[0]] + s * (vertices[fa.v[1]] - vertices[fa.v[0]]);
  }

  double max_h() const;
  double subdomain_area(Subdomain j) const;
  double interface_length() const;
  std::vector<int> interface_facets() const;
  int count_facets(FacetClass c) const;

  /// Largest circumradius/inradius ratio over all cells.
  double shape_ratio() const;

  /// Checks all structural invariants; throws Error with a description
  /// of the first violation.
  void validate(double max_shape_ratio = 1e30) const;
};

enum class DomainPreset : std::uint8_t {
  UnitSquareSplit,  // Omega = (0,1)^2, Stokes above x2 = 1/2
  SurfSub,          // Omega = (0,2) x (-1,1), Stokes above x2 = 0
};

struct GeometrySpec {
  DomainPreset preset = DomainPreset::UnitSquareSplit;
  int resolution = 1;             // grid is (2r) x (2r) squares, two triangles each
  double max_shape_ratio = 10.0;  // validation ceiling
};

Mesh generate(const GeometrySpec& spec);

/// Uniform red refinement: every triangle splits into four similar ones.
/// Boundary/interface tags are inherited; h halves exactly.
Mesh refine(const Mesh& mesh);

/// Plain-text mesh dump with hex-encoded coordinates (exact round trip).
void dump_mesh(const Mesh& mesh, std::ostream& os);
Mesh load_mesh(std::istream& is);
void dump_mesh_file(const Mesh& mesh, const std::string& path);
Mesh load_mesh_file(const std::string& path);

}  // namespace sbhdg
