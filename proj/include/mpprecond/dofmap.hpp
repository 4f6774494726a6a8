#pragma once

#include "mpprecond/elements.hpp"
#include "mpprecond/mesh.hpp"
#include "mpprecond/quadrature.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <stdexcept>
#include <vector>

namespace mpp {

enum class Family { P0, P1, P2, RT0 };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::P0: return "P0";
    case Family::P1: return "P1";
    case Family::P2: return "P2";
    case Family::RT0: return "RT0";
  }
  return "?";
}

struct UnsupportedSpace : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedPair : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SpaceDescriptor {
  Family family = Family::P1;
  int value_rank = 1;  // 1 scalar, 2 vector; RT0 is intrinsically vector-valued with rank 1 dofs
  const Mesh* mesh = nullptr;
  std::set<FacetTag> dirichlet_tags;
};

inline SpaceDescriptor scalar_space(const Mesh& m, Family fam, std::set<FacetTag> dir = {}) {
  if (fam == Family::RT0) throw UnsupportedSpace("RT0 is not a scalar space");
  return {fam, 1, &m, std::move(dir)};
}

inline SpaceDescriptor vector_space(const Mesh& m, Family fam, std::set<FacetTag> dir = {}) {
  if (fam == Family::P0 || fam == Family::RT0)
    throw UnsupportedSpace("vector_space supports P1/P2 only");
  return {fam, 2, &m, std::move(dir)};
}

inline SpaceDescriptor rt0_space(const Mesh& m, std::set<FacetTag> dir = {}) {
  return {Family::RT0, 1, &m, std::move(dir)};
}

/// Entity-to-DOF numbering. Scalar dofs: P1 vertices, P2 vertices then facets,
/// P0 cells, RT0 facets with the lower-to-higher-cell normal orientation.
/// Rank-2 spaces interleave components per scalar dof: (x0, y0, x1, y1, ...).
struct DofMap {
  Family family;
  int value_rank;
  const Mesh* mesh;
  int scalar_dofs = 0;
  int total_dofs = 0;
  std::vector<int> dirichlet_dofs;  // sorted, component-expanded

  int num_local_scalar() const {
    switch (family) {
      case Family::P0: return 1;
      case Family::P1: return 3;
      case Family::P2: return 6;
      case Family::RT0: return 3;
    }
    return 0;
  }

  void cell_scalar_dofs(int c, int* out) const {
    const auto& cv = mesh->cells[c];
    switch (family) {
      case Family::P0: out[0] = c; break;
      case Family::P1:
        out[0] = cv[0]; out[1] = cv[1]; out[2] = cv[2];
        break;
      case Family::P2:
        out[0] = cv[0]; out[1] = cv[1]; out[2] = cv[2];
        for (int k = 0; k < 3; ++k) out[3 + k] = mesh->num_vertices() + mesh->cell_facets[c][k];
        break;
      case Family::RT0:
        for (int k = 0; k < 3; ++k) out[k] = mesh->cell_facets[c][k];
        break;
    }
  }

  double rt0_sign(int c, int k) const {
    return static_cast<double>(mesh->facet_sign(mesh->cell_facets[c][k], c));
  }

  bool is_dirichlet(int dof) const {
    return std::binary_search(dirichlet_dofs.begin(), dirichlet_dofs.end(), dof);
  }
};

inline DofMap build_dofmap(const SpaceDescriptor& space) {
  const Mesh& m = *space.mesh;
  DofMap dm;
  dm.family = space.family;
  dm.value_rank = space.family == Family::RT0 ? 1 : space.value_rank;
  dm.mesh = space.mesh;
  switch (space.family) {
    case Family::P0: dm.scalar_dofs = m.num_cells(); break;
    case Family::P1: dm.scalar_dofs = m.num_vertices(); break;
    case Family::P2: dm.scalar_dofs = m.num_vertices() + m.num_facets(); break;
    case Family::RT0: dm.scalar_dofs = m.num_facets(); break;
  }
  dm.total_dofs = dm.scalar_dofs * dm.value_rank;

  if (!space.dirichlet_tags.empty()) {
    std::set<int> scalar;
    for (int f = 0; f < m.num_facets(); ++f) {
      if (!space.dirichlet_tags.count(m.facets[f].tag)) continue;
      switch (space.family) {
        case Family::P0: break;  // no boundary dofs
        case Family::P1:
          scalar.insert(m.facets[f].v0);
          scalar.insert(m.facets[f].v1);
          break;
        case Family::P2:
          scalar.insert(m.facets[f].v0);
          scalar.insert(m.facets[f].v1);
          scalar.insert(m.num_vertices() + f);
          break;
        case Family::RT0: scalar.insert(f); break;
      }
    }
    for (int s : scalar)
      for (int comp = 0; comp < dm.value_rank; ++comp)
        dm.dirichlet_dofs.push_back(s * dm.value_rank + comp);
    std::sort(dm.dirichlet_dofs.begin(), dm.dirichlet_dofs.end());
  }
  return dm;
}

/// Nodal interpolation of a scalar function (P0 at centroids, P1 at vertices,
/// P2 at vertices and edge midpoints).
inline Eigen::VectorXd interpolate(const SpaceDescriptor& space,
                                   const std::function<double(const Vec2&)>& f) {
  if (space.family == Family::RT0 || space.value_rank != 1)
    throw UnsupportedSpace("scalar interpolation needs a scalar P0/P1/P2 space");
  const Mesh& m = *space.mesh;
  DofMap dm = build_dofmap(space);
  Eigen::VectorXd u(dm.total_dofs);
  switch (space.family) {
    case Family::P0:
      for (int c = 0; c < m.num_cells(); ++c) {
        Vec2 ctr = (m.vertices[m.cells[c][0]] + m.vertices[m.cells[c][1]] + m.vertices[m.cells[c][2]]) / 3.0;
        u(c) = f(ctr);
      }
      break;
    case Family::P1:
      for (int v = 0; v < m.num_vertices(); ++v) u(v) = f(m.vertices[v]);
      break;
    case Family::P2:
      for (int v = 0; v < m.num_vertices(); ++v) u(v) = f(m.vertices[v]);
      for (int fct = 0; fct < m.num_facets(); ++fct)
        u(m.num_vertices() + fct) = f(m.facet_midpoint(fct));
      break;
    default: break;
  }
  return u;
}

/// Interpolation of a vector field: nodal for rank-2 P1/P2, mean facet-normal
/// moments for RT0 (the dof is the average normal component on the facet).
inline Eigen::VectorXd interpolate(const SpaceDescriptor& space,
                                   const std::function<Vec2(const Vec2&)>& f) {
  const Mesh& m = *space.mesh;
  if (space.family == Family::RT0) {
    Eigen::VectorXd u(m.num_facets());
    const auto& rule = gauss_rule_1d(3);
    for (int fct = 0; fct < m.num_facets(); ++fct) {
      Vec2 a = m.vertices[m.facets[fct].v0], b = m.vertices[m.facets[fct].v1];
      Vec2 n = m.facet_normal(fct);
      double mean = 0.0;
      for (const auto& q : rule) mean += q.w * f(a + q.t * (b - a)).dot(n);
      u(fct) = mean;
    }
    return u;
  }
  if (space.value_rank != 2) throw UnsupportedSpace("vector interpolation needs rank-2 space or RT0");
  SpaceDescriptor comp = space;
  comp.value_rank = 1;
  Eigen::VectorXd ux = interpolate(comp, [&](const Vec2& x) { return f(x).x(); });
  Eigen::VectorXd uy = interpolate(comp, [&](const Vec2& x) { return f(x).y(); });
  Eigen::VectorXd u(2 * ux.size());
  for (int i = 0; i < ux.size(); ++i) {
    u(2 * i) = ux(i);
    u(2 * i + 1) = uy(i);
  }
  return u;
}

}  // namespace mpp
