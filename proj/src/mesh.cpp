#include "sbhdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace sbhdg {

namespace {

double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross2(b - a, c - a);
}

// Outward normal of a counterclockwise cell along the directed edge a -> b.
Vec2 edge_outward_normal(const Vec2& a, const Vec2& b) {
  const Vec2 t = b - a;
  return Vec2(t.y(), -t.x()).normalized();
}

struct BoundaryClassifier {
  DomainPreset preset;

  FacetClass classify(const Vec2& mid, Subdomain side) const {
    const double eps = 1e-12;
    if (preset == DomainPreset::UnitSquareSplit) {
      if (side == Subdomain::Stokes) {
        if (mid.x() < eps || mid.y() > 1.0 - eps)
          return FacetClass::StokesDirichlet;
        if (mid.x() > 1.0 - eps) return FacetClass::StokesNeumann;
      } else {
        if (mid.x() < eps || mid.y() < eps)
          return FacetClass::BiotDirichletPore;
        if (mid.x() > 1.0 - eps) return FacetClass::BiotNeumannFlux;
      }
    } else {  // SurfSub
      if (side == Subdomain::Stokes) {
        if (mid.x() < eps || mid.x() > 2.0 - eps || mid.y() > 1.0 - eps)
          return FacetClass::StokesDirichlet;
      } else {
        if (mid.y() < -1.0 + eps) return FacetClass::BiotNeumannPore;
        if (mid.x() < eps || mid.x() > 2.0 - eps)
          return FacetClass::BiotDirichletFlux;
      }
    }
    throw Error("boundary facet could not be classified");
  }
};

// Derive facet topology (adjacency, tags, normals) from vertices + cells.
// classify_boundary is called for boundary facets; inherited_cls, when
// provided, overrides classification for facets listed there (refinement).
void build_facets(Mesh& mesh,
                  const std::map<std::pair<int, int>, FacetClass>* inherited,
                  const BoundaryClassifier* classifier) {
  std::map<std::pair<int, int>, int> edge_to_facet;
  mesh.facets.clear();
  for (int c = 0; c < mesh.n_cells(); ++c) {
    auto& cell = mesh.cells[c];
    for (int e = 0; e < 3; ++e) {
      const int a = cell.v[e];
      const int b = cell.v[(e + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = edge_to_facet.find(key);
      if (it == edge_to_facet.end()) {
        MeshFacet f;
        f.v = {a, b};
        f.cell = {c, -1};
        f.length = (mesh.vertices[b] - mesh.vertices[a]).norm();
        f.normal = edge_outward_normal(mesh.vertices[a], mesh.vertices[b]);
        f.cls = FacetClass::InteriorStokes;  // provisional
        const int id = mesh.n_facets();
        mesh.facets.push_back(f);
        edge_to_facet.emplace(key, id);
        cell.facet[e] = id;
      } else {
        mesh.facets[it->second].cell[1] = c;
        cell.facet[e] = it->second;
      }
    }
  }
  // Interface facets keep the Stokes cell first so that the stored normal
  // is n^s, pointing from the Stokes side into the Biot side.
  for (auto& f : mesh.facets) {
    if (f.cell[1] >= 0 &&
        mesh.cells[f.cell[0]].subdomain != mesh.cells[f.cell[1]].subdomain) {
      if (mesh.cells[f.cell[0]].subdomain != Subdomain::Stokes) {
        std::swap(f.cell[0], f.cell[1]);
        std::swap(f.v[0], f.v[1]);
        f.normal = -f.normal;
      }
      f.cls = FacetClass::Interface;
    } else if (f.cell[1] >= 0) {
      f.cls = mesh.cells[f.cell[0]].subdomain == Subdomain::Stokes
                  ? FacetClass::InteriorStokes
                  : FacetClass::InteriorBiot;
    } else {
      const Vec2 mid =
          0.5 * (mesh.vertices[f.v[0]] + mesh.vertices[f.v[1]]);
      if (inherited) {
        const auto key = std::minmax(f.v[0], f.v[1]);
        auto it = inherited->find({key.first, key.second});
        if (it == inherited->end())
          throw Error("refined boundary facet has no parent tag");
        f.cls = it->second;
      } else {
        f.cls = classifier->classify(mid, mesh.cells[f.cell[0]].subdomain);
      }
    }
  }
  // Fix cell -> facet orientation bookkeeping after possible swaps: nothing
  // to do, cell.facet[] stores ids only.
}

void compute_cell_metrics(Mesh& mesh) {
  for (auto& cell : mesh.cells) {
    const Vec2 a = mesh.vertices[cell.v[0]];
    const Vec2 b = mesh.vertices[cell.v[1]];
    const Vec2 c = mesh.vertices[cell.v[2]];
    cell.area = triangle_area(a, b, c);
    cell.h = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
  }
}

}  // namespace

const char* to_string(FacetClass c) {
  switch (c) {
    case FacetClass::InteriorStokes: return "interior-s";
    case FacetClass::InteriorBiot: return "interior-b";
    case FacetClass::StokesDirichlet: return "stokes-D";
    case FacetClass::StokesNeumann: return "stokes-N";
    case FacetClass::BiotDirichletPore: return "biot-D-P";
    case FacetClass::BiotDirichletFlux: return "biot-D-F";
    case FacetClass::BiotNeumannPore: return "biot-N-P";
    case FacetClass::BiotNeumannFlux: return "biot-N-F";
    case FacetClass::Interface: return "interface";
  }
  return "?";
}

double Mesh::max_h() const {
  double h = 0.0;
  for (const auto& c : cells) h = std::max(h, c.h);
  return h;
}

double Mesh::subdomain_area(Subdomain j) const {
  double a = 0.0;
  for (const auto& c : cells)
    if (c.subdomain == j) a += c.area;
  return a;
}

double Mesh::interface_length() const {
  double l = 0.0;
  for (const auto& f : facets)
    if (is_interface(f.cls)) l += f.length;
  return l;
}

std::vector<int> Mesh::interface_facets() const {
  std::vector<int> out;
  for (int f = 0; f < n_facets(); ++f)
    if (is_interface(facets[f].cls)) out.push_back(f);
  return out;
}

int Mesh::count_facets(FacetClass c) const {
  int n = 0;
  for (const auto& f : facets)
    if (f.cls == c) ++n;
  return n;
}

double Mesh::shape_ratio() const {
  double worst = 0.0;
  for (const auto& cell : cells) {
    const Vec2 va = vertices[cell.v[0]];
    const Vec2 vb = vertices[cell.v[1]];
    const Vec2 vc = vertices[cell.v[2]];
    const double a = (vb - vc).norm();
    const double b = (vc - va).norm();
    const double c = (va - vb).norm();
    const double area = triangle_area(va, vb, vc);
    const double circum = a * b * c / (4.0 * area);
    const double inr = 2.0 * area / (a + b + c);
    worst = std::max(worst, circum / inr);
  }
  return worst;
}

void Mesh::validate(double max_shape_ratio) const {
  for (int c = 0; c < n_cells(); ++c) {
    const auto& cell = cells[c];
    const auto v = cell_vertices(c);
    if (triangle_area(v[0], v[1], v[2]) <= 0.0)
      throw Error("cell " + std::to_string(c) + " not counterclockwise");
    for (int e = 0; e < 3; ++e) {
      const auto& f = facets[cell.facet[e]];
      const int a = cell.v[e], b = cell.v[(e + 1) % 3];
      const bool fwd = f.v[0] == a && f.v[1] == b;
      const bool bwd = f.v[0] == b && f.v[1] == a;
      if (!fwd && !bwd) throw Error("cell/facet adjacency broken");
      if (f.cell[0] == c && !fwd)
        throw Error("first cell must traverse facet forward");
      if (f.cell[1] == c && !bwd)
        throw Error("second cell must traverse facet backward");
    }
  }
  for (int i = 0; i < n_facets(); ++i) {
    const auto& f = facets[i];
    if (f.cell[0] < 0) throw Error("facet without owner cell");
    const bool interior2 = is_interior(f.cls) || is_interface(f.cls);
    if (interior2 != (f.cell[1] >= 0))
      throw Error("facet adjacency inconsistent with class " +
                  std::string(to_string(f.cls)));
    if (is_interface(f.cls)) {
      if (cells[f.cell[0]].subdomain != Subdomain::Stokes ||
          cells[f.cell[1]].subdomain != Subdomain::Biot)
        throw Error("interface facet must join Stokes (first) and Biot cells");
    } else if (f.cell[1] >= 0) {
      if (cells[f.cell[0]].subdomain != cells[f.cell[1]].subdomain)
        throw Error("non-interface facet crosses subdomains");
      const Subdomain own = cells[f.cell[0]].subdomain;
      if ((own == Subdomain::Stokes) != (f.cls == FacetClass::InteriorStokes))
        throw Error("interior facet tagged with wrong subdomain");
    } else {
      const Subdomain own = cells[f.cell[0]].subdomain;
      const bool stokes_cls = is_stokes_dirichlet(f.cls) || is_stokes_neumann(f.cls);
      if ((own == Subdomain::Stokes) != stokes_cls)
        throw Error("boundary facet tagged with wrong subdomain");
    }
    const Vec2 n = edge_outward_normal(vertices[f.v[0]], vertices[f.v[1]]);
    if ((n - f.normal).norm() > 1e-12)
      throw Error("stored facet normal is not the outward normal of cell[0]");
    if (std::abs(f.length - (vertices[f.v[1]] - vertices[f.v[0]]).norm()) >
        1e-12 * f.length)
      throw Error("stored facet length inconsistent");
  }
  if (shape_ratio() > max_shape_ratio)
    throw Error("shape regularity ceiling exceeded");
}

Mesh generate(const GeometrySpec& spec) {
  if (spec.resolution < 1) throw Error("mesh resolution must be >= 1");
  const int r = spec.resolution;
  const int nx = 2 * r, ny = 2 * r;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0, ysplit = 0.5;
  if (spec.preset == DomainPreset::SurfSub) {
    x1 = 2.0;
    y0 = -1.0;
    ysplit = 0.0;
  }

  Mesh mesh;
  mesh.vertices.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double x = x0 + (x1 - x0) * static_cast<double>(i) / nx;
      const double y = y0 + (y1 - y0) * static_cast<double>(j) / ny;
      mesh.vertices.emplace_back(x, y);
    }
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  mesh.cells.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double yc = y0 + (y1 - y0) * (j + 0.5) / ny;
      const Subdomain side =
          yc < ysplit ? Subdomain::Biot : Subdomain::Stokes;
      MeshCell lower{}, upper{};
      lower.v = {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)};
      upper.v = {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)};
      lower.subdomain = upper.subdomain = side;
      mesh.cells.push_back(lower);
      mesh.cells.push_back(upper);
    }

  compute_cell_metrics(mesh);
  const BoundaryClassifier classifier{spec.preset};
  build_facets(mesh, nullptr, &classifier);

  // Well-posedness prerequisites: each preset must pin the velocity
  // somewhere on the Stokes boundary, the pore pressure somewhere, and leave
  // a traction outlet in at least one subdomain.
  int n_sd = mesh.count_facets(FacetClass::StokesDirichlet);
  int n_pp = mesh.count_facets(FacetClass::BiotDirichletPore) +
             mesh.count_facets(FacetClass::BiotNeumannPore);
  int n_nn = mesh.count_facets(FacetClass::StokesNeumann) +
             mesh.count_facets(FacetClass::BiotNeumannPore) +
             mesh.count_facets(FacetClass::BiotNeumannFlux);
  if (n_sd == 0 || n_pp == 0 || n_nn == 0)
    throw Error("preset leaves a required boundary set empty");

  mesh.validate(spec.max_shape_ratio);
  return mesh;
}

Mesh refine(const Mesh& mesh) {
  Mesh fine;
  fine.vertices = mesh.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid_id = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = fine.n_vertices();
    fine.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    midpoint.emplace(key, id);
    return id;
  };

  fine.cells.reserve(4 * mesh.n_cells());
  for (const auto& cell : mesh.cells) {
    const int v0 = cell.v[0], v1 = cell.v[1], v2 = cell.v[2];
    const int m01 = mid_id(v0, v1), m12 = mid_id(v1, v2), m20 = mid_id(v2, v0);
    const std::array<std::array<int, 3>, 4> children = {{
        {v0, m01, m20}, {m01, v1, m12}, {m20, m12, v2}, {m01, m12, m20}}};
    for (const auto& ch : children) {
      MeshCell c{};
      c.v = ch;
      c.subdomain = cell.subdomain;
      // Children are similar with half the parent's scale; storing the
      // halved metrics keeps "h halves exactly" true in floating point.
      c.h = 0.5 * cell.h;
      c.area = 0.25 * cell.area;
      fine.cells.push_back(c);
    }
  }

  // Boundary tags are inherited through the parent facet's two halves.
  std::map<std::pair<int, int>, FacetClass> inherited;
  for (const auto& f : mesh.facets) {
    if (is_interior(f.cls) && f.cell[1] >= 0) continue;
    if (is_interior(f.cls)) continue;
    const int m = mid_id(f.v[0], f.v[1]);
    const auto k0 = std::minmax(f.v[0], m);
    const auto k1 = std::minmax(m, f.v[1]);
    inherited[{k0.first, k0.second}] = f.cls;
    inherited[{k1.first, k1.second}] = f.cls;
  }
  build_facets(fine, &inherited, nullptr);
  return fine;
}

void dump_mesh(const Mesh& mesh, std::ostream& os) {
  os << "sbhdg-mesh 1\n";
  os << "vertices " << mesh.n_vertices() << "\n";
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%la %la\n", v.x(), v.y());
    os << buf;
  }
  os << "cells " << mesh.n_cells() << "\n";
  for (const auto& c : mesh.cells)
    os << c.v[0] << ' ' << c.v[1] << ' ' << c.v[2] << ' '
       << (c.subdomain == Subdomain::Stokes ? 's' : 'b') << "\n";
  os << "facets " << mesh.n_facets() << "\n";
  for (const auto& f : mesh.facets)
    os << f.v[0] << ' ' << f.v[1] << ' ' << static_cast<int>(f.cls) << "\n";
}

Mesh load_mesh(std::istream& is) {
  std::string tag;
  int version = 0;
  is >> tag >> version;
  if (tag != "sbhdg-mesh" || version != 1)
    throw Error("unrecognized mesh file header");
  int nv = 0;
  is >> tag >> nv;
  Mesh mesh;
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices) {
    std::string sx, sy;
    is >> sx >> sy;
    v.x() = std::strtod(sx.c_str(), nullptr);
    v.y() = std::strtod(sy.c_str(), nullptr);
  }
  int nc = 0;
  is >> tag >> nc;
  mesh.cells.resize(nc);
  for (auto& c : mesh.cells) {
    char side;
    is >> c.v[0] >> c.v[1] >> c.v[2] >> side;
    c.subdomain = side == 's' ? Subdomain::Stokes : Subdomain::Biot;
  }
  int nf = 0;
  is >> tag >> nf;
  std::map<std::pair<int, int>, FacetClass> tags;
  for (int i = 0; i < nf; ++i) {
    int a, b, cls;
    is >> a >> b >> cls;
    const auto key = std::minmax(a, b);
    tags[{key.first, key.second}] = static_cast<FacetClass>(cls);
  }
  if (!is) throw Error("truncated mesh file");
  compute_cell_metrics(mesh);
  build_facets(mesh, &tags, nullptr);
  return mesh;
}

void dump_mesh_file(const Mesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  dump_mesh(mesh, os);
}

Mesh load_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return load_mesh(is);
}

}  // namespace sbhdg
