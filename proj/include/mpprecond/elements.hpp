#pragma once

#include <Eigen/Dense>

#include "mpprecond/mesh.hpp"

#include <array>

namespace mpp {

/// Affine geometry of one triangle: x = a + J * (xi, eta).
struct CellGeom {
  Vec2 a;
  Eigen::Matrix2d J;
  Eigen::Matrix2d Jinv;
  double detJ = 0.0;  // 2 * area, positive for ccw cells
  std::array<Vec2, 3> p;

  CellGeom(const Mesh& mesh, int c) {
    p = {mesh.vertices[mesh.cells[c][0]], mesh.vertices[mesh.cells[c][1]],
         mesh.vertices[mesh.cells[c][2]]};
    a = p[0];
    J.col(0) = p[1] - p[0];
    J.col(1) = p[2] - p[0];
    detJ = J.determinant();
    Jinv = J.inverse();
  }

  Vec2 map(double xi, double eta) const { return a + J * Vec2(xi, eta); }
  double area() const { return 0.5 * std::abs(detJ); }
};

namespace ref {

// Barycentric coordinates on the reference triangle: l0 = 1-x-y, l1 = x, l2 = y.

inline std::array<double, 3> p1_shape(double x, double y) { return {1.0 - x - y, x, y}; }

inline std::array<Vec2, 3> p1_grad() {
  return {Vec2(-1, -1), Vec2(1, 0), Vec2(0, 1)};
}

/// P2 local order: vertex dofs 0..2, then edge dof k on the edge opposite
/// vertex k (connecting vertices k+1 and k+2, matching the mesh facet order).
inline std::array<double, 6> p2_shape(double x, double y) {
  double l0 = 1.0 - x - y, l1 = x, l2 = y;
  return {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
          4 * l1 * l2,       4 * l2 * l0,       4 * l0 * l1};
}

inline std::array<Vec2, 6> p2_grad(double x, double y) {
  double l0 = 1.0 - x - y, l1 = x, l2 = y;
  Vec2 g0(-1, -1), g1(1, 0), g2(0, 1);
  return {g0 * (4 * l0 - 1), g1 * (4 * l1 - 1), g2 * (4 * l2 - 1),
          4 * (g1 * l2 + g2 * l1), 4 * (g2 * l0 + g0 * l2), 4 * (g0 * l1 + g1 * l0)};
}

}  // namespace ref

namespace rt0 {

/// RT0 basis of facet k on a physical cell, before the orientation sign:
/// phi_k(x) = |e_k| / (2A) * (x - p_k) with p_k the vertex opposite the facet.
/// Its normal component is identically 1 on facet k and 0 on the others,
/// and div phi_k = |e_k| / A.
inline Vec2 shape(const CellGeom& g, int k, const Vec2& x, double edge_len) {
  return edge_len / (2.0 * g.area()) * (x - g.p[k]);
}

inline double div(const CellGeom& g, int k, double edge_len) { return edge_len / g.area(); }

}  // namespace rt0

}  // namespace mpp
