#pragma once

#include <Eigen/Dense>

#include "mpprecond/dofmap.hpp"
#include "mpprecond/elements.hpp"
#include "mpprecond/interface_ops.hpp"
#include "mpprecond/quadrature.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace mpp {

using ScalarFn = std::function<double(const Vec2&)>;
using VectorFn = std::function<Vec2(const Vec2&)>;
using GradFn = std::function<Eigen::Matrix2d(const Vec2&)>;  // (i,j) = d u_i / d x_j
using LineScalarFn = std::function<double(double)>;          // functions of y on the interface
using LineVectorFn = std::function<Vec2(double)>;

/// Analytic scalar field with gradient.
struct ExactScalar {
  ScalarFn value;
  VectorFn grad;
};

/// Analytic vector field with gradient (and hence divergence).
struct ExactVector {
  VectorFn value;
  GradFn grad;
  double div(const Vec2& x) const { return grad(x).trace(); }
};

namespace weak {

// Right-hand side functionals: the weak forms applied to analytic fields,
// integrated against the test basis with the composite quadrature rule.
// Together with interpolated Dirichlet values this makes any smooth field
// triple an exact solution of the continuous weak problem.

namespace detail2 {

inline const std::vector<QPoint>& error_rule() {
  static const std::vector<QPoint> rule = tri_rule_composite(2);
  return rule;
}

template <class Accumulate>
inline void for_cells(const SpaceDescriptor& space, Accumulate&& acc) {
  const Mesh& m = *space.mesh;
  DofMap dm = build_dofmap(space);
  const int nl = dm.num_local_scalar();
  std::vector<int> dofs(nl);
  for (int c = 0; c < m.num_cells(); ++c) {
    CellGeom g(m, c);
    dm.cell_scalar_dofs(c, dofs.data());
    acc(c, g, dofs);
  }
}

inline void scalar_shapes(Family fam, double x, double y, std::array<double, 6>& N) {
  if (fam == Family::P1) {
    auto n3 = ref::p1_shape(x, y);
    std::copy(n3.begin(), n3.end(), N.begin());
  } else {
    N = ref::p2_shape(x, y);
  }
}

inline void scalar_grads(Family fam, double x, double y, std::array<Vec2, 6>& G) {
  if (fam == Family::P1) {
    auto g3 = ref::p1_grad();
    std::copy(g3.begin(), g3.end(), G.begin());
  } else {
    G = ref::p2_grad(x, y);
  }
}

}  // namespace detail2

/// coeff * int grad(u_exact) : grad(v); scalar spaces pair with ExactScalar
/// gradients, rank-2 spaces with ExactVector gradients.
inline VecX rhs_stiffness(const SpaceDescriptor& space, double coeff, const VectorFn& grad_scalar) {
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  detail2::for_cells(space, [&](int, const CellGeom& g, const std::vector<int>& dofs) {
    for (const auto& q : detail2::error_rule()) {
      Vec2 x = g.map(q.x, q.y);
      double w = q.w * std::abs(g.detJ) * coeff;
      Vec2 gu = grad_scalar(x);
      std::array<Vec2, 6> G;
      detail2::scalar_grads(space.family, q.x, q.y, G);
      for (size_t i = 0; i < dofs.size(); ++i)
        rhs(dofs[i]) += w * gu.dot(g.Jinv.transpose() * G[i]);
    }
  });
  return rhs;
}

inline VecX rhs_stiffness_vec(const SpaceDescriptor& space, double coeff, const GradFn& grad) {
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  detail2::for_cells(space, [&](int, const CellGeom& g, const std::vector<int>& dofs) {
    for (const auto& q : detail2::error_rule()) {
      Vec2 x = g.map(q.x, q.y);
      double w = q.w * std::abs(g.detJ) * coeff;
      Eigen::Matrix2d gu = grad(x);
      std::array<Vec2, 6> G;
      detail2::scalar_grads(space.family, q.x, q.y, G);
      for (size_t i = 0; i < dofs.size(); ++i) {
        Vec2 gi = g.Jinv.transpose() * G[i];
        for (int c = 0; c < 2; ++c) rhs(dofs[i] * 2 + c) += w * gu.row(c).dot(gi);
      }
    }
  });
  return rhs;
}

/// 2 * coeff * int eps(u_exact) : eps(v) for rank-2 spaces.
inline VecX rhs_epsilon(const SpaceDescriptor& space, double coeff, const GradFn& grad) {
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  detail2::for_cells(space, [&](int, const CellGeom& g, const std::vector<int>& dofs) {
    for (const auto& q : detail2::error_rule()) {
      Vec2 x = g.map(q.x, q.y);
      double w = q.w * std::abs(g.detJ) * 2.0 * coeff;
      Eigen::Matrix2d gu = grad(x);
      Eigen::Matrix2d eps = 0.5 * (gu + gu.transpose());
      std::array<Vec2, 6> G;
      detail2::scalar_grads(space.family, q.x, q.y, G);
      for (size_t i = 0; i < dofs.size(); ++i) {
        Vec2 gi = g.Jinv.transpose() * G[i];
        for (int c = 0; c < 2; ++c) {
          Eigen::Matrix2d gb = Eigen::Matrix2d::Zero();
          gb.row(c) = gi.transpose();
          rhs(dofs[i] * 2 + c) += w * eps.cwiseProduct(0.5 * (gb + gb.transpose())).sum();
        }
      }
    }
  });
  return rhs;
}

/// coeff * int f v over scalar or rank-2 nodal spaces.
inline VecX rhs_mass(const SpaceDescriptor& space, double coeff, const ScalarFn& f) {
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  detail2::for_cells(space, [&](int, const CellGeom& g, const std::vector<int>& dofs) {
    for (const auto& q : detail2::error_rule()) {
      Vec2 x = g.map(q.x, q.y);
      double w = q.w * std::abs(g.detJ) * coeff;
      if (space.family == Family::P0) {
        rhs(dofs[0]) += w * f(x);
      } else {
        std::array<double, 6> N;
        detail2::scalar_shapes(space.family, q.x, q.y, N);
        for (size_t i = 0; i < dofs.size(); ++i) rhs(dofs[i]) += w * f(x) * N[i];
      }
    }
  });
  return rhs;
}

/// coeff * int f . v for RT0 test functions.
inline VecX rhs_mass_rt0(const SpaceDescriptor& space, double coeff, const VectorFn& f) {
  const Mesh& m = *space.mesh;
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  detail2::for_cells(space, [&](int c, const CellGeom& g, const std::vector<int>& dofs) {
    std::array<double, 3> elen, sgn;
    for (int k = 0; k < 3; ++k) {
      elen[k] = m.facet_length(m.cell_facets[c][k]);
      sgn[k] = dm.rt0_sign(c, k);
    }
    for (const auto& q : detail2::error_rule()) {
      Vec2 x = g.map(q.x, q.y);
      double w = q.w * std::abs(g.detJ) * coeff;
      Vec2 fx = f(x);
      for (int k = 0; k < 3; ++k) rhs(dofs[k]) += w * fx.dot(sgn[k] * rt0::shape(g, k, x, elen[k]));
    }
  });
  return rhs;
}

/// int p_exact (div v) for rank-2 nodal or RT0 test spaces.
inline VecX rhs_pressure_div(const SpaceDescriptor& space, const ScalarFn& p) {
  const Mesh& m = *space.mesh;
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  detail2::for_cells(space, [&](int c, const CellGeom& g, const std::vector<int>& dofs) {
    if (space.family == Family::RT0) {
      std::array<double, 3> dvals;
      for (int k = 0; k < 3; ++k)
        dvals[k] = dm.rt0_sign(c, k) * m.facet_length(m.cell_facets[c][k]) / g.area();
      for (const auto& q : detail2::error_rule()) {
        double w = q.w * std::abs(g.detJ);
        Vec2 x = g.map(q.x, q.y);
        for (int k = 0; k < 3; ++k) rhs(dofs[k]) += w * p(x) * dvals[k];
      }
      return;
    }
    for (const auto& q : detail2::error_rule()) {
      Vec2 x = g.map(q.x, q.y);
      double w = q.w * std::abs(g.detJ);
      std::array<Vec2, 6> G;
      detail2::scalar_grads(space.family, q.x, q.y, G);
      for (size_t i = 0; i < dofs.size(); ++i) {
        Vec2 gi = g.Jinv.transpose() * G[i];
        for (int c2 = 0; c2 < 2; ++c2) rhs(dofs[i] * 2 + c2) += w * p(x) * gi(c2);
      }
    }
  });
  return rhs;
}

/// int (div u_exact) q against a pressure space.
inline VecX rhs_div(const SpaceDescriptor& pressure, const ExactVector& u) {
  return rhs_mass(pressure, 1.0, [&](const Vec2& x) { return u.div(x); });
}

namespace detail2 {

template <class PerFacet>
inline void for_interface_facets(const Mesh& m, const InterfaceMesh& im, PerFacet&& fn) {
  auto seg_facet = match_interface_facets(m, im);
  const auto& rule = gauss_rule_1d(5);
  for (int s = 0; s < im.num_segments(); ++s) {
    mpp::detail::FacetFrame fr(m, seg_facet[s]);
    for (const auto& q : rule) {
      Vec2 x = fr.a + q.t * (fr.b - fr.a);
      fn(s, fr, q.t, q.w * fr.len, x);
    }
  }
}

}  // namespace detail2

/// coeff * int_Gamma lam (v . n_out) for P2 rank-2 test functions.
inline VecX rhs_normal_trace_velocity(const SpaceDescriptor& space, const InterfaceMesh& im,
                                      double coeff, const LineScalarFn& lam) {
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  std::vector<int> dofs(6);
  detail2::for_interface_facets(*space.mesh, im,
                                [&](int, const mpp::detail::FacetFrame& fr, double, double w, const Vec2& x) {
    dm.cell_scalar_dofs(fr.cell, dofs.data());
    Vec2 xi = fr.geom.Jinv * (x - fr.geom.a);
    auto N = ref::p2_shape(xi.x(), xi.y());
    for (int i = 0; i < 6; ++i)
      for (int c = 0; c < 2; ++c)
        rhs(dofs[i] * 2 + c) += coeff * w * lam(x.y()) * N[i] * fr.outward(c);
  });
  return rhs;
}

/// coeff * int_Gamma lam (v . n_out) for RT0 test functions.
inline VecX rhs_normal_trace_rt0(const SpaceDescriptor& space, const InterfaceMesh& im,
                                 double coeff, const LineScalarFn& lam) {
  const Mesh& m = *space.mesh;
  VecX rhs = VecX::Zero(build_dofmap(space).total_dofs);
  auto seg_facet = match_interface_facets(m, im);
  const auto& rule = gauss_rule_1d(5);
  for (int s = 0; s < im.num_segments(); ++s) {
    int f = seg_facet[s];
    Vec2 a = m.vertices[m.facets[f].v0], b = m.vertices[m.facets[f].v1];
    double len = m.facet_length(f);
    for (const auto& q : rule) {
      Vec2 x = a + q.t * (b - a);
      rhs(f) += coeff * q.w * len * lam(x.y());  // v . n_out = dof value on the facet
    }
  }
  return rhs;
}

/// coeff * int_Gamma lam v for scalar P1/P2 test functions.
inline VecX rhs_scalar_trace(const SpaceDescriptor& space, const InterfaceMesh& im, double coeff,
                             const LineScalarFn& lam) {
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  std::vector<int> dofs(6);
  detail2::for_interface_facets(*space.mesh, im,
                                [&](int, const mpp::detail::FacetFrame& fr, double, double w, const Vec2& x) {
    dm.cell_scalar_dofs(fr.cell, dofs.data());
    Vec2 xi = fr.geom.Jinv * (x - fr.geom.a);
    std::array<double, 6> N;
    detail2::scalar_shapes(space.family, xi.x(), xi.y(), N);
    for (int i = 0; i < dm.num_local_scalar(); ++i) rhs(dofs[i]) += coeff * w * lam(x.y()) * N[i];
  });
  return rhs;
}

/// coeff * int_Gamma (lam_vec . v) for P2 rank-2 test functions.
inline VecX rhs_vector_trace_velocity(const SpaceDescriptor& space, const InterfaceMesh& im,
                                      double coeff, const LineVectorFn& lam) {
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  std::vector<int> dofs(6);
  detail2::for_interface_facets(*space.mesh, im,
                                [&](int, const mpp::detail::FacetFrame& fr, double, double w, const Vec2& x) {
    dm.cell_scalar_dofs(fr.cell, dofs.data());
    Vec2 xi = fr.geom.Jinv * (x - fr.geom.a);
    auto N = ref::p2_shape(xi.x(), xi.y());
    Vec2 lv = lam(x.y());
    for (int i = 0; i < 6; ++i)
      for (int c = 0; c < 2; ++c) rhs(dofs[i] * 2 + c) += coeff * w * lv(c) * N[i];
  });
  return rhs;
}

/// coeff * int_Gamma (u_exact . tau)(v . tau) for P2 rank-2 test functions.
inline VecX rhs_tangential_trace(const SpaceDescriptor& space, double coeff, const VectorFn& u) {
  const Mesh& m = *space.mesh;
  DofMap dm = build_dofmap(space);
  VecX rhs = VecX::Zero(dm.total_dofs);
  const auto& rule = gauss_rule_1d(5);
  std::vector<int> dofs(6);
  for (int f = 0; f < m.num_facets(); ++f) {
    if (m.facets[f].tag != FacetTag::INTERFACE) continue;
    mpp::detail::FacetFrame fr(m, f);
    Vec2 tau(-fr.outward.y(), fr.outward.x());
    dm.cell_scalar_dofs(fr.cell, dofs.data());
    for (const auto& q : rule) {
      Vec2 x = fr.a + q.t * (fr.b - fr.a);
      Vec2 xi = fr.geom.Jinv * (x - fr.geom.a);
      auto N = ref::p2_shape(xi.x(), xi.y());
      double w = q.w * fr.len * coeff * u(x).dot(tau);
      for (int i = 0; i < 6; ++i)
        for (int c = 0; c < 2; ++c) rhs(dofs[i] * 2 + c) += w * N[i] * tau(c);
    }
  }
  return rhs;
}

/// Multiplier-row data: coeff * int_Gamma g(y) w for scalar P0 multipliers.
inline VecX rhs_multiplier_scalar(const InterfaceMesh& im, double coeff, const LineScalarFn& g) {
  VecX rhs = VecX::Zero(im.num_segments());
  const auto& rule = gauss_rule_1d(5);
  for (int s = 0; s < im.num_segments(); ++s) {
    double h = im.segment_length(s);
    for (const auto& q : rule) rhs(s) += coeff * q.w * h * g(im.ys[s] + q.t * h);
  }
  return rhs;
}

/// coeff * int_Gamma (g_vec . w) for rank-2 P0 multipliers (interleaved).
inline VecX rhs_multiplier_vector(const InterfaceMesh& im, double coeff, const LineVectorFn& g) {
  VecX rhs = VecX::Zero(2 * im.num_segments());
  const auto& rule = gauss_rule_1d(5);
  for (int s = 0; s < im.num_segments(); ++s) {
    double h = im.segment_length(s);
    for (const auto& q : rule) {
      Vec2 gv = g(im.ys[s] + q.t * h);
      rhs(2 * s) += coeff * q.w * h * gv.x();
      rhs(2 * s + 1) += coeff * q.w * h * gv.y();
    }
  }
  return rhs;
}

/// coeff * int_Gamma (u_exact . n_out) w for scalar P0 multipliers.
inline VecX rhs_multiplier_normal(const Mesh& m, const InterfaceMesh& im, double coeff,
                                  const VectorFn& u) {
  VecX rhs = VecX::Zero(im.num_segments());
  detail2::for_interface_facets(m, im,
                                [&](int s, const mpp::detail::FacetFrame& fr, double, double w, const Vec2& x) {
    rhs(s) += coeff * w * u(x).dot(fr.outward);
  });
  return rhs;
}

}  // namespace weak

/// Piecewise evaluation of an assembled finite element function.
struct FEFunction {
  SpaceDescriptor space;
  DofMap dm;
  VecX coeffs;

  FEFunction(const SpaceDescriptor& s, VecX c) : space(s), dm(build_dofmap(s)), coeffs(std::move(c)) {}

  double scalar_value(int cell, const CellGeom& g, const Vec2& xi) const {
    std::array<double, 6> N;
    weak::detail2::scalar_shapes(space.family, xi.x(), xi.y(), N);
    std::vector<int> dofs(dm.num_local_scalar());
    dm.cell_scalar_dofs(cell, dofs.data());
    double v = 0;
    if (space.family == Family::P0) return coeffs(dofs[0]);
    for (size_t i = 0; i < dofs.size(); ++i) v += N[i] * coeffs(dofs[i]);
    return v;
  }

  Vec2 vector_value(int cell, const CellGeom& g, const Vec2& xi, const Vec2& x) const {
    std::vector<int> dofs(dm.num_local_scalar());
    dm.cell_scalar_dofs(cell, dofs.data());
    if (space.family == Family::RT0) {
      Vec2 v = Vec2::Zero();
      for (int k = 0; k < 3; ++k) {
        double elen = space.mesh->facet_length(space.mesh->cell_facets[cell][k]);
        v += coeffs(dofs[k]) * dm.rt0_sign(cell, k) * rt0::shape(g, k, x, elen);
      }
      return v;
    }
    std::array<double, 6> N;
    weak::detail2::scalar_shapes(space.family, xi.x(), xi.y(), N);
    Vec2 v = Vec2::Zero();
    for (size_t i = 0; i < dofs.size(); ++i)
      for (int c = 0; c < 2; ++c) v(c) += N[i] * coeffs(dofs[i] * 2 + c);
    return v;
  }

  Eigen::Matrix2d vector_grad(int cell, const CellGeom& g, const Vec2& xi) const {
    std::array<Vec2, 6> G;
    weak::detail2::scalar_grads(space.family, xi.x(), xi.y(), G);
    std::vector<int> dofs(dm.num_local_scalar());
    dm.cell_scalar_dofs(cell, dofs.data());
    Eigen::Matrix2d gr = Eigen::Matrix2d::Zero();
    for (size_t i = 0; i < dofs.size(); ++i) {
      Vec2 gi = g.Jinv.transpose() * G[i];
      for (int c = 0; c < 2; ++c) gr.row(c) += coeffs(dofs[i] * 2 + c) * gi.transpose();
    }
    return gr;
  }

  double rt0_div(int cell) const {
    std::vector<int> dofs(3);
    dm.cell_scalar_dofs(cell, dofs.data());
    double d = 0;
    double area = space.mesh->cell_area(cell);
    for (int k = 0; k < 3; ++k) {
      double elen = space.mesh->facet_length(space.mesh->cell_facets[cell][k]);
      d += coeffs(dofs[k]) * dm.rt0_sign(cell, k) * elen / area;
    }
    return d;
  }
};

/// Vertex-averaged P1 reconstruction of a P0 interface function; endpoints
/// take the single adjacent value.
inline VecX p0_to_p1_interface(const InterfaceMesh& im, const VecX& p0) {
  const int n = im.num_segments();
  VecX p1(n + 1);
  p1(0) = p0(0);
  p1(n) = p0(n - 1);
  for (int v = 1; v < n; ++v) p1(v) = 0.5 * (p0(v - 1) + p0(v));
  return p1;
}

}  // namespace mpp
