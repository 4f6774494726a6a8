#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpp {

using Vec2 = Eigen::Vector2d;

/// Symbolic boundary/interface markers. Tags partition the boundary facets
/// of a subdomain mesh; interior facets carry NONE.
enum class FacetTag : int { NONE = 0, INTERFACE, DIR_F, NEU_F, DIR_P, NEU_P, OUTER };

enum class Subdomain : int { FLUID = 0, POROUS = 1 };

enum class CoupledGeometry { DARCY_STOKES, POISSON_ND, POISSON_DD, POISSON_NN };

inline const char* to_string(FacetTag t) {
  switch (t) {
    case FacetTag::NONE: return "NONE";
    case FacetTag::INTERFACE: return "INTERFACE";
    case FacetTag::DIR_F: return "DIR_F";
    case FacetTag::NEU_F: return "NEU_F";
    case FacetTag::DIR_P: return "DIR_P";
    case FacetTag::NEU_P: return "NEU_P";
    case FacetTag::OUTER: return "OUTER";
  }
  return "?";
}

/// One mesh edge. The directed pair (v0, v1) fixes the facet normal as the
/// tangent rotated by -90 degrees, i.e. n = (t.y, -t.x). Facets are created
/// while walking cells in index order, so the normal points out of cell0;
/// for interior facets cell0 < cell1 and the normal points from the lower
/// to the higher adjacent cell index.
struct Facet {
  int v0 = -1;
  int v1 = -1;
  int cell0 = -1;
  int cell1 = -1;  // -1 on boundary facets
  FacetTag tag = FacetTag::NONE;

  bool is_boundary() const { return cell1 < 0; }
};

struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;  // counterclockwise vertex triples
  std::vector<Facet> facets;
  std::vector<std::array<int, 3>> cell_facets;  // local facet k is opposite vertex k
  std::vector<Subdomain> cell_tags;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_facets() const { return static_cast<int>(facets.size()); }

  double signed_area(int c) const {
    const Vec2& a = vertices[cells[c][0]];
    const Vec2& b = vertices[cells[c][1]];
    const Vec2& d = vertices[cells[c][2]];
    return 0.5 * ((b.x() - a.x()) * (d.y() - a.y()) - (d.x() - a.x()) * (b.y() - a.y()));
  }

  double cell_area(int c) const { return std::abs(signed_area(c)); }

  double facet_length(int f) const {
    return (vertices[facets[f].v1] - vertices[facets[f].v0]).norm();
  }

  Vec2 facet_midpoint(int f) const {
    return 0.5 * (vertices[facets[f].v0] + vertices[facets[f].v1]);
  }

  Vec2 facet_tangent(int f) const {
    return (vertices[facets[f].v1] - vertices[facets[f].v0]).normalized();
  }

  /// Unit normal in the stored orientation (out of cell0).
  Vec2 facet_normal(int f) const {
    Vec2 t = facet_tangent(f);
    return Vec2(t.y(), -t.x());
  }

  /// Outward-normal sign of facet f seen from cell c: +1 when the stored
  /// normal is outward for c. This is the RT0 orientation convention.
  int facet_sign(int f, int c) const {
    if (facets[f].cell0 == c) return 1;
    if (facets[f].cell1 == c) return -1;
    throw std::logic_error("facet_sign: cell not adjacent to facet");
  }

  std::vector<int> facets_with_tag(FacetTag t) const {
    std::vector<int> out;
    for (int f = 0; f < num_facets(); ++f)
      if (facets[f].tag == t) out.push_back(f);
    return out;
  }

  void dump(std::ostream& os) const {
    for (const auto& v : vertices) os << "v " << v.x() << " " << v.y() << "\n";
    for (const auto& c : cells) os << "c " << c[0] << " " << c[1] << " " << c[2] << "\n";
  }
};

/// 1D mesh of the interface line x = const, segments ordered by ascending y.
struct InterfaceMesh {
  double x = 0.5;
  std::vector<double> ys;  // ascending vertex coordinates

  int num_vertices() const { return static_cast<int>(ys.size()); }
  int num_segments() const { return num_vertices() - 1; }
  double segment_length(int s) const { return ys[s + 1] - ys[s]; }
  double segment_midpoint(int s) const { return 0.5 * (ys[s] + ys[s + 1]); }
  double total_length() const { return ys.back() - ys.front(); }
};

namespace detail {

inline void add_cell_facets(Mesh& mesh, std::map<std::pair<int, int>, int>& lookup, int c) {
  const auto& cv = mesh.cells[c];
  for (int k = 0; k < 3; ++k) {
    int a = cv[(k + 1) % 3];
    int b = cv[(k + 2) % 3];
    std::pair<int, int> key = std::minmax(a, b);
    auto it = lookup.find(key);
    if (it == lookup.end()) {
      Facet f;
      f.v0 = a;  // directed edge of the first cell, normal outward of it
      f.v1 = b;
      f.cell0 = c;
      lookup.emplace(key, mesh.num_facets());
      mesh.cell_facets[c][k] = mesh.num_facets();
      mesh.facets.push_back(f);
    } else {
      Facet& f = mesh.facets[it->second];
      if (f.cell1 >= 0) throw std::logic_error("facet with more than two cells");
      f.cell1 = c;
      mesh.cell_facets[c][k] = it->second;
    }
  }
}

}  // namespace detail

/// Structured triangulation of [x0,x1] x [y0,y1] with nx-by-ny squares, each
/// split along the diagonal from its lower-left to its upper-right corner.
/// Vertices are numbered row-major (x fastest), cells square-by-square.
inline Mesh build_rect_mesh(double x0, double x1, double y0, double y1, int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_rect_mesh: subdivisions must be positive");
  if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("build_rect_mesh: empty rectangle");

  Mesh mesh;
  const double hx = (x1 - x0) / nx;
  const double hy = (y1 - y0) / ny;
  mesh.vertices.reserve((nx + 1) * (ny + 1));
  for (int iy = 0; iy <= ny; ++iy)
    for (int ix = 0; ix <= nx; ++ix)
      mesh.vertices.emplace_back(x0 + ix * hx, y0 + iy * hy);

  auto vid = [nx](int ix, int iy) { return iy * (nx + 1) + ix; };

  mesh.cells.reserve(2 * nx * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      int v00 = vid(ix, iy), v10 = vid(ix + 1, iy);
      int v01 = vid(ix, iy + 1), v11 = vid(ix + 1, iy + 1);
      mesh.cells.push_back({v00, v10, v11});  // lower triangle
      mesh.cells.push_back({v00, v11, v01});  // upper triangle
    }
  }

  mesh.cell_facets.assign(mesh.num_cells(), {-1, -1, -1});
  std::map<std::pair<int, int>, int> lookup;
  for (int c = 0; c < mesh.num_cells(); ++c) detail::add_cell_facets(mesh, lookup, c);

  mesh.cell_tags.assign(mesh.num_cells(), Subdomain::FLUID);
  return mesh;
}

/// Tag every boundary facet by a geometric predicate on its midpoint.
template <class Fn>
inline void tag_boundary(Mesh& mesh, Fn&& classify) {
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (!mesh.facets[f].is_boundary()) continue;
    mesh.facets[f].tag = classify(mesh.facet_midpoint(f));
  }
}

namespace detail {

inline bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

inline int dyadic_level(double h) {
  double inv = 1.0 / h;
  int m = static_cast<int>(std::lround(std::log2(inv)));
  if (m < 1 || !near(std::ldexp(1.0, -m), h, 1e-14))
    throw std::invalid_argument("mesh size must be a power of two, h = 2^-m with m >= 1");
  return m;
}

}  // namespace detail

struct CoupledMesh {
  Mesh fluid;    // left subdomain  [0,1/2] x [0,1]
  Mesh porous;   // right subdomain [1/2,1] x [0,1]
  InterfaceMesh interface;
};

/// Two abutting unit-height rectangles split at x = 1/2 with an
/// interface-conforming facet set; h is the triangle leg length.
/// `all_dirichlet` replaces the mixed tag layout by Dirichlet tags on every
/// outer boundary facet of both subdomains.
inline CoupledMesh build_coupled_mesh(double h, CoupledGeometry geometry, bool all_dirichlet = false) {
  detail::dyadic_level(h);
  const int nx = static_cast<int>(std::lround(0.5 / h));
  const int ny = 2 * nx;
  if (nx < 1) throw std::invalid_argument("build_coupled_mesh: h too coarse");

  CoupledMesh cm;
  cm.fluid = build_rect_mesh(0.0, 0.5, 0.0, 1.0, nx, ny);
  cm.porous = build_rect_mesh(0.5, 1.0, 0.0, 1.0, nx, ny);
  cm.fluid.cell_tags.assign(cm.fluid.num_cells(), Subdomain::FLUID);
  cm.porous.cell_tags.assign(cm.porous.num_cells(), Subdomain::POROUS);

  const bool left_all_dir = all_dirichlet || geometry == CoupledGeometry::POISSON_DD;
  const bool right_all_dir = all_dirichlet || geometry == CoupledGeometry::POISSON_DD ||
                             geometry == CoupledGeometry::POISSON_ND;

  tag_boundary(cm.fluid, [&](const Vec2& m) {
    if (detail::near(m.x(), 0.5)) return FacetTag::INTERFACE;
    if (left_all_dir) return FacetTag::DIR_F;
    if (detail::near(m.x(), 0.0)) return FacetTag::DIR_F;
    return FacetTag::NEU_F;
  });
  tag_boundary(cm.porous, [&](const Vec2& m) {
    if (detail::near(m.x(), 0.5)) return FacetTag::INTERFACE;
    if (right_all_dir) return FacetTag::DIR_P;
    if (detail::near(m.x(), 1.0)) return FacetTag::DIR_P;
    return FacetTag::NEU_P;
  });

  cm.interface.x = 0.5;
  cm.interface.ys.resize(ny + 1);
  for (int j = 0; j <= ny; ++j) cm.interface.ys[j] = j * h;
  return cm;
}

struct SubproblemMesh {
  Mesh domain;
  InterfaceMesh interface;
};

enum class SubproblemDomain {
  UNIT,    ///< [0,1]^2 with the interface on x = 0 and Dirichlet data on x = 1
  HALF_F,  ///< [0,1/2] x [0,1] with the interface on x = 1/2 and Dirichlet data on x = 0
  HALF_P,  ///< [1/2,1] x [0,1] with the interface on x = 1/2 and Dirichlet data on x = 1
};

/// Single-domain geometry for the subproblem studies: the interface is one
/// full side of the rectangle, Dirichlet data sit on the opposite side and
/// the remaining sides are Neumann.
inline SubproblemMesh build_subproblem_mesh(double h, SubproblemDomain dom,
                                            FacetTag dir_tag = FacetTag::DIR_F,
                                            FacetTag neu_tag = FacetTag::NEU_F) {
  detail::dyadic_level(h);
  SubproblemMesh sm;
  double gamma_x = 0.0, dir_x = 1.0;
  switch (dom) {
    case SubproblemDomain::UNIT: {
      int n = static_cast<int>(std::lround(1.0 / h));
      sm.domain = build_rect_mesh(0.0, 1.0, 0.0, 1.0, n, n);
      gamma_x = 0.0;
      dir_x = 1.0;
      break;
    }
    case SubproblemDomain::HALF_F: {
      int nx = static_cast<int>(std::lround(0.5 / h));
      sm.domain = build_rect_mesh(0.0, 0.5, 0.0, 1.0, nx, 2 * nx);
      gamma_x = 0.5;
      dir_x = 0.0;
      break;
    }
    case SubproblemDomain::HALF_P: {
      int nx = static_cast<int>(std::lround(0.5 / h));
      sm.domain = build_rect_mesh(0.5, 1.0, 0.0, 1.0, nx, 2 * nx);
      gamma_x = 0.5;
      dir_x = 1.0;
      break;
    }
  }
  tag_boundary(sm.domain, [&](const Vec2& m) {
    if (detail::near(m.x(), gamma_x)) return FacetTag::INTERFACE;
    if (detail::near(m.x(), dir_x)) return dir_tag;
    return neu_tag;
  });

  int ny = static_cast<int>(std::lround(1.0 / h));
  sm.interface.x = gamma_x;
  sm.interface.ys.resize(ny + 1);
  for (int j = 0; j <= ny; ++j) sm.interface.ys[j] = j * h;
  return sm;
}

/// For each interface segment (ascending y) find the matching INTERFACE facet
/// of the domain mesh. Throws when the meshes do not conform.
inline std::vector<int> match_interface_facets(const Mesh& mesh, const InterfaceMesh& iface) {
  std::vector<int> seg_facet(iface.num_segments(), -1);
  int found = 0;
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (mesh.facets[f].tag != FacetTag::INTERFACE) continue;
    Vec2 m = mesh.facet_midpoint(f);
    if (!detail::near(m.x(), iface.x, 1e-12)) throw std::invalid_argument("interface facet off the interface line");
    bool matched = false;
    for (int s = 0; s < iface.num_segments(); ++s) {
      if (detail::near(m.y(), iface.segment_midpoint(s), 1e-12) &&
          detail::near(mesh.facet_length(f), iface.segment_length(s), 1e-12)) {
        if (seg_facet[s] >= 0) throw std::invalid_argument("duplicate facet for interface segment");
        seg_facet[s] = f;
        matched = true;
        ++found;
        break;
      }
    }
    if (!matched) throw std::invalid_argument("interface facet does not match any segment");
  }
  if (found != iface.num_segments())
    throw std::invalid_argument("interface mesh not conforming: segments without facets");
  return seg_facet;
}

}  // namespace mpp
