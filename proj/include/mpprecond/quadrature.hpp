#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mpp {

/// Quadrature point on the reference triangle {x,y >= 0, x+y <= 1};
/// weights of a rule sum to the reference area 1/2.
struct QPoint {
  double x, y, w;
};

/// Gauss point on [0,1]; weights sum to 1.
struct QPoint1d {
  double t, w;
};

/// Symmetric Gauss rules on the reference triangle, exact to the given
/// polynomial degree. Degree 5 (7 points) covers every assembled form here.
inline const std::vector<QPoint>& tri_rule(int degree) {
  static const std::vector<QPoint> deg1 = {{1.0 / 3.0, 1.0 / 3.0, 0.5}};
  static const std::vector<QPoint> deg2 = {
      {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0},
      {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
      {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
  };
  static const std::vector<QPoint> deg5 = [] {
    std::vector<QPoint> r;
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, w1 = (155.0 - s15) / 1200.0;
    const double a2 = (6.0 + s15) / 21.0, w2 = (155.0 + s15) / 1200.0;
    r.push_back({1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0 * 0.5});
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      r.push_back({a, a, w * 0.5});
      r.push_back({1.0 - 2.0 * a, a, w * 0.5});
      r.push_back({a, 1.0 - 2.0 * a, w * 0.5});
    }
    return r;
  }();
  if (degree <= 1) return deg1;
  if (degree <= 2) return deg2;
  if (degree <= 5) return deg5;
  throw std::invalid_argument("tri_rule: no tabulated rule of requested degree");
}

/// Composite rule: the degree-5 rule applied on 4^levels congruent
/// subtriangles. Used for error integrals of non-polynomial integrands.
inline std::vector<QPoint> tri_rule_composite(int levels) {
  std::vector<std::array<double, 6>> tris = {{0, 0, 1, 0, 0, 1}};
  for (int l = 0; l < levels; ++l) {
    std::vector<std::array<double, 6>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      double ax = t[0], ay = t[1], bx = t[2], by = t[3], cx = t[4], cy = t[5];
      double abx = 0.5 * (ax + bx), aby = 0.5 * (ay + by);
      double bcx = 0.5 * (bx + cx), bcy = 0.5 * (by + cy);
      double cax = 0.5 * (cx + ax), cay = 0.5 * (cy + ay);
      next.push_back({ax, ay, abx, aby, cax, cay});
      next.push_back({abx, aby, bx, by, bcx, bcy});
      next.push_back({cax, cay, bcx, bcy, cx, cy});
      next.push_back({abx, aby, bcx, bcy, cax, cay});
    }
    tris = std::move(next);
  }
  const auto& base = tri_rule(5);
  std::vector<QPoint> out;
  out.reserve(tris.size() * base.size());
  const double scale = 1.0 / std::pow(4.0, levels);
  for (const auto& t : tris) {
    for (const auto& q : base) {
      double x = t[0] + q.x * (t[2] - t[0]) + q.y * (t[4] - t[0]);
      double y = t[1] + q.x * (t[3] - t[1]) + q.y * (t[5] - t[1]);
      out.push_back({x, y, q.w * scale});
    }
  }
  return out;
}

inline const std::vector<QPoint1d>& gauss_rule_1d(int npoints) {
  static const std::vector<QPoint1d> g1 = {{0.5, 1.0}};
  static const std::vector<QPoint1d> g2 = [] {
    double d = 0.5 / std::sqrt(3.0);
    return std::vector<QPoint1d>{{0.5 - d, 0.5}, {0.5 + d, 0.5}};
  }();
  static const std::vector<QPoint1d> g3 = [] {
    double d = 0.5 * std::sqrt(3.0 / 5.0);
    return std::vector<QPoint1d>{{0.5 - d, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + d, 5.0 / 18.0}};
  }();
  static const std::vector<QPoint1d> g5 = [] {
    double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    return std::vector<QPoint1d>{{0.5 * (1 - b), 0.5 * wb},
                                 {0.5 * (1 - a), 0.5 * wa},
                                 {0.5, 0.5 * 128.0 / 225.0},
                                 {0.5 * (1 + a), 0.5 * wa},
                                 {0.5 * (1 + b), 0.5 * wb}};
  }();
  switch (npoints) {
    case 1: return g1;
    case 2: return g2;
    case 3: return g3;
    case 5: return g5;
    default: throw std::invalid_argument("gauss_rule_1d: unsupported point count");
  }
}

}  // namespace mpp
