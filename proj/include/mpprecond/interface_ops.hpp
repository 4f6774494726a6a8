#pragma once

#include <Eigen/Dense>

#include "mpprecond/assembly.hpp"
#include "mpprecond/dofmap.hpp"
#include "mpprecond/mesh.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace mpp {

struct InterfaceSpace {
  Family family = Family::P0;
  int value_rank = 1;
  const InterfaceMesh* mesh = nullptr;

  int scalar_dofs() const {
    return family == Family::P0 ? mesh->num_segments() : mesh->num_vertices();
  }
  int dofs() const { return scalar_dofs() * value_rank; }
};

enum class FractionalFlavor { FREE, ZERO_TRACE_00 };

/// One term of an interface norm: weight * (-Laplacian + I)^s with either
/// natural (FREE) or zero-trace (00) endpoint treatment.
struct FractionalSpec {
  double s = 0.5;
  FractionalFlavor flavor = FractionalFlavor::FREE;
  double weight = 1.0;

  void validate() const {
    if (!(std::abs(s) < 1.0)) throw std::invalid_argument("fractional exponent must satisfy |s| < 1");
    if (!(weight > 0.0)) throw std::invalid_argument("fractional weight must be positive");
  }
};

/// Dense SPD realization of a (sum of) fractional interface operator(s).
struct FractionalOperator {
  Eigen::MatrixXd matrix;
  std::vector<FractionalSpec> specs;
  Eigen::VectorXd eigenvalues;  // spectrum of -Delta + I used in the build (empty for sums)

  int dim() const { return static_cast<int>(matrix.rows()); }

  void dump_eigenvalues(std::ostream& os) const {
    for (int i = 0; i < eigenvalues.size(); ++i) os << eigenvalues(i) << "\n";
  }
};

/// Jump-penalty Laplacian on piecewise constants of the 1D interface mesh:
/// facets of the interval mesh are points, so the facet integrals reduce to
/// point evaluation of <h>^-1 [p][q] at interior vertices, plus h^-1 p q at
/// the two endpoint vertices for the zero-trace flavor.
inline SpMat assemble_interface_laplacian(const InterfaceSpace& space, FractionalFlavor flavor) {
  if (space.family != Family::P0 || space.value_rank != 1)
    throw UnsupportedSpace("interface laplacian is defined on scalar P0 interface spaces");
  const InterfaceMesh& im = *space.mesh;
  const int n = im.num_segments();
  std::vector<Triplet> trips;
  for (int v = 1; v < n; ++v) {
    double avg_h = 0.5 * (im.segment_length(v - 1) + im.segment_length(v));
    double w = 1.0 / avg_h;
    trips.emplace_back(v - 1, v - 1, w);
    trips.emplace_back(v, v, w);
    trips.emplace_back(v - 1, v, -w);
    trips.emplace_back(v, v - 1, -w);
  }
  if (flavor == FractionalFlavor::ZERO_TRACE_00) {
    trips.emplace_back(0, 0, 1.0 / im.segment_length(0));
    trips.emplace_back(n - 1, n - 1, 1.0 / im.segment_length(n - 1));
  }
  return detail::from_triplets(n, n, trips);
}

inline Eigen::VectorXd interface_p0_mass_diagonal(const InterfaceMesh& im) {
  Eigen::VectorXd d(im.num_segments());
  for (int s = 0; s < im.num_segments(); ++s) d(s) = im.segment_length(s);
  return d;
}

namespace detail {

/// Spectral power of the P0 jump operator: with A = L + M and the
/// M-orthonormal eigenbasis A Phi = M Phi Lambda, returns
/// weight * M Phi Lambda^s Phi^T M.
inline FractionalOperator fractional_p0(const InterfaceSpace& space, const FractionalSpec& spec) {
  SpMat L = assemble_interface_laplacian(space, spec.flavor);
  Eigen::VectorXd md = interface_p0_mass_diagonal(*space.mesh);
  Eigen::MatrixXd A(L);
  A += Eigen::MatrixXd(md.asDiagonal());
  Eigen::VectorXd mh = md.cwiseSqrt();
  Eigen::MatrixXd B = mh.cwiseInverse().asDiagonal() * A * mh.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("interface eigendecomposition failed");
  Eigen::VectorXd lam_s = es.eigenvalues().array().pow(spec.s);
  Eigen::MatrixXd C = es.eigenvectors() * lam_s.asDiagonal() * es.eigenvectors().transpose();
  FractionalOperator op;
  op.matrix = spec.weight * (mh.asDiagonal() * C * mh.asDiagonal());
  op.specs = {spec};
  op.eigenvalues = es.eigenvalues();
  return op;
}

inline void p1_interface_matrices(const InterfaceMesh& im, Eigen::MatrixXd& K, Eigen::MatrixXd& M) {
  const int n = im.num_vertices();
  K = Eigen::MatrixXd::Zero(n, n);
  M = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < im.num_segments(); ++s) {
    double h = im.segment_length(s);
    K(s, s) += 1.0 / h;
    K(s + 1, s + 1) += 1.0 / h;
    K(s, s + 1) -= 1.0 / h;
    K(s + 1, s) -= 1.0 / h;
    M(s, s) += h / 3.0;
    M(s + 1, s + 1) += h / 3.0;
    M(s, s + 1) += h / 6.0;
    M(s + 1, s) += h / 6.0;
  }
}

/// P1 analogue used for measuring errors in fractional norms; the 00 flavor
/// restricts the eigenproblem to the interior vertices.
inline FractionalOperator fractional_p1(const InterfaceSpace& space, const FractionalSpec& spec) {
  Eigen::MatrixXd K, M;
  p1_interface_matrices(*space.mesh, K, M);
  const int n = static_cast<int>(K.rows());
  std::vector<int> keep;
  if (spec.flavor == FractionalFlavor::ZERO_TRACE_00) {
    for (int i = 1; i < n - 1; ++i) keep.push_back(i);
  } else {
    for (int i = 0; i < n; ++i) keep.push_back(i);
  }
  const int m = static_cast<int>(keep.size());
  Eigen::MatrixXd Kr(m, m), Mr(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Kr(i, j) = K(keep[i], keep[j]);
      Mr(i, j) = M(keep[i], keep[j]);
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Kr + Mr, Mr);
  if (es.info() != Eigen::Success) throw std::runtime_error("interface eigendecomposition failed");
  Eigen::VectorXd lam_s = es.eigenvalues().array().pow(spec.s);
  Eigen::MatrixXd H = Mr * es.eigenvectors() * lam_s.asDiagonal() * es.eigenvectors().transpose() * Mr;
  FractionalOperator op;
  op.matrix = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) op.matrix(keep[i], keep[j]) = spec.weight * H(i, j);
  op.specs = {spec};
  op.eigenvalues = es.eigenvalues();
  return op;
}

}  // namespace detail

/// Build weight * (-Delta + I)^s on the interface space. Scalar spaces get
/// the operator directly; rank-2 spaces apply it componentwise (interleaved).
inline FractionalOperator build_fractional(const InterfaceSpace& space, const FractionalSpec& spec) {
  spec.validate();
  InterfaceSpace scalar = space;
  scalar.value_rank = 1;
  FractionalOperator base = space.family == Family::P0 ? detail::fractional_p0(scalar, spec)
                                                       : detail::fractional_p1(scalar, spec);
  if (space.value_rank == 1) return base;
  const int n = base.dim();
  FractionalOperator op;
  op.matrix = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < 2; ++c) op.matrix(2 * i + c, 2 * j + c) = base.matrix(i, j);
  op.specs = base.specs;
  op.eigenvalues = base.eigenvalues;
  return op;
}

/// Componentwise build with distinct specs for the normal (x) and tangential
/// (y) multiplier components of a vertical interface.
inline FractionalOperator build_fractional_vector(const InterfaceSpace& space,
                                                  const FractionalSpec& spec_x,
                                                  const FractionalSpec& spec_y) {
  if (space.value_rank != 2) throw UnsupportedSpace("build_fractional_vector needs a rank-2 space");
  InterfaceSpace scalar = space;
  scalar.value_rank = 1;
  FractionalOperator bx = build_fractional(scalar, spec_x);
  FractionalOperator by = build_fractional(scalar, spec_y);
  const int n = bx.dim();
  FractionalOperator op;
  op.matrix = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      op.matrix(2 * i, 2 * j) = bx.matrix(i, j);
      op.matrix(2 * i + 1, 2 * j + 1) = by.matrix(i, j);
    }
  op.specs = {spec_x, spec_y};
  return op;
}

/// Entrywise sum realizing intersection-space norms.
inline FractionalOperator sum_fractional(const std::vector<FractionalOperator>& ops) {
  if (ops.empty()) throw std::invalid_argument("sum_fractional: empty list");
  FractionalOperator out;
  out.matrix = ops.front().matrix;
  out.specs = ops.front().specs;
  for (size_t k = 1; k < ops.size(); ++k) {
    if (ops[k].dim() != out.dim()) throw std::invalid_argument("sum_fractional: dimension mismatch");
    out.matrix += ops[k].matrix;
    out.specs.insert(out.specs.end(), ops[k].specs.begin(), ops[k].specs.end());
  }
  return out;
}

namespace detail {

struct FacetFrame {
  int cell;
  CellGeom geom;
  Vec2 a, b;  // facet endpoints, a at the lower y
  double len;
  Vec2 outward;  // unit outward normal of the domain on this boundary facet

  FacetFrame(const Mesh& mesh, int f)
      : cell(mesh.facets[f].cell0), geom(mesh, cell) {
    a = mesh.vertices[mesh.facets[f].v0];
    b = mesh.vertices[mesh.facets[f].v1];
    if (!mesh.facets[f].is_boundary())
      throw std::invalid_argument("interface facet must be a boundary facet of the subdomain");
    outward = mesh.facet_normal(f);  // cell0-outward by construction
    if (a.y() > b.y()) std::swap(a, b);
    len = (b - a).norm();
  }
};

inline double iface_shape(const InterfaceSpace& iface, int seg, int local, double t) {
  // local dof on a segment: P0 has one constant, P1 two linear hats
  if (iface.family == Family::P0) return 1.0;
  return local == 0 ? 1.0 - t : t;
}

inline int iface_scalar_dof(const InterfaceSpace& iface, int seg, int local) {
  return iface.family == Family::P0 ? seg : seg + local;
}

inline int iface_locals(const InterfaceSpace& iface) { return iface.family == Family::P0 ? 1 : 2; }

}  // namespace detail

/// int_Gamma (T u) w for scalar u, or componentwise for rank-2 u against a
/// rank-2 multiplier. Rows are interface dofs, columns domain dofs.
inline SpMat assemble_trace(const SpaceDescriptor& domain, const InterfaceSpace& iface) {
  if (domain.family != Family::P1 && domain.family != Family::P2)
    throw UnsupportedSpace("assemble_trace needs a P1/P2 domain space");
  if (domain.value_rank != iface.value_rank)
    throw UnsupportedPair("assemble_trace: domain and multiplier ranks differ");
  const Mesh& m = *domain.mesh;
  DofMap dm = build_dofmap(domain);
  auto seg_facet = match_interface_facets(m, *iface.mesh);
  const auto& rule = gauss_rule_1d(3);
  const int nl = dm.num_local_scalar();
  const int rank = domain.value_rank;
  std::vector<Triplet> trips;
  std::vector<int> dofs(nl);
  for (int s = 0; s < iface.mesh->num_segments(); ++s) {
    detail::FacetFrame fr(m, seg_facet[s]);
    dm.cell_scalar_dofs(fr.cell, dofs.data());
    for (const auto& q : rule) {
      Vec2 x = fr.a + q.t * (fr.b - fr.a);
      Vec2 xi = fr.geom.Jinv * (x - fr.geom.a);
      std::array<double, 6> N{};
      if (domain.family == Family::P1) {
        auto n3 = ref::p1_shape(xi.x(), xi.y());
        std::copy(n3.begin(), n3.end(), N.begin());
      } else {
        N = ref::p2_shape(xi.x(), xi.y());
      }
      double w = q.w * fr.len;
      for (int l = 0; l < detail::iface_locals(iface); ++l) {
        double W = detail::iface_shape(iface, s, l, q.t);
        int rdof = detail::iface_scalar_dof(iface, s, l);
        for (int i = 0; i < nl; ++i)
          for (int c = 0; c < rank; ++c)
            trips.emplace_back(rdof * rank + c, dofs[i] * rank + c, w * W * N[i]);
      }
    }
  }
  return detail::from_triplets(iface.dofs(), dm.total_dofs, trips);
}

/// normal_sign * int_Gamma (u . n) w with n the outward normal of the
/// domain mesh. For RT0 against P0 the block is diagonal per facet with
/// entries normal_sign * |facet|.
inline SpMat assemble_normal_trace(const SpaceDescriptor& domain, const InterfaceSpace& iface,
                                   double normal_sign) {
  const bool rt0 = domain.family == Family::RT0;
  const bool p2v = domain.family == Family::P2 && domain.value_rank == 2;
  if (!rt0 && !p2v) throw UnsupportedSpace("assemble_normal_trace needs RT0 or rank-2 P2");
  if (iface.value_rank != 1) throw UnsupportedPair("normal trace multiplier must be scalar");
  const Mesh& m = *domain.mesh;
  DofMap dm = build_dofmap(domain);
  auto seg_facet = match_interface_facets(m, *iface.mesh);
  const auto& rule = gauss_rule_1d(3);
  std::vector<Triplet> trips;
  for (int s = 0; s < iface.mesh->num_segments(); ++s) {
    const int f = seg_facet[s];
    if (rt0) {
      // only the facet's own basis has a nonzero normal component there,
      // equal to the dof value with respect to the stored facet normal
      for (int l = 0; l < detail::iface_locals(iface); ++l) {
        double moment = iface.family == Family::P0 ? m.facet_length(f) : 0.5 * m.facet_length(f);
        trips.emplace_back(detail::iface_scalar_dof(iface, s, l), f, normal_sign * moment);
      }
      continue;
    }
    detail::FacetFrame fr(m, f);
    std::vector<int> dofs(6);
    dm.cell_scalar_dofs(fr.cell, dofs.data());
    for (const auto& q : rule) {
      Vec2 x = fr.a + q.t * (fr.b - fr.a);
      Vec2 xi = fr.geom.Jinv * (x - fr.geom.a);
      auto N = ref::p2_shape(xi.x(), xi.y());
      double w = q.w * fr.len;
      for (int l = 0; l < detail::iface_locals(iface); ++l) {
        double W = detail::iface_shape(iface, s, l, q.t);
        int rdof = detail::iface_scalar_dof(iface, s, l);
        for (int i = 0; i < 6; ++i)
          for (int c = 0; c < 2; ++c)
            trips.emplace_back(rdof, dofs[i] * 2 + c, normal_sign * w * W * N[i] * fr.outward(c));
      }
    }
  }
  return detail::from_triplets(iface.dofs(), dm.total_dofs, trips);
}

/// coeff * int_Gamma (u . tau)(v . tau) over the INTERFACE facets; square on
/// the domain space, supported only on interface-adjacent dofs.
inline SpMat assemble_tangential_trace_mass(const SpaceDescriptor& domain, double coeff) {
  if (domain.family != Family::P2 || domain.value_rank != 2)
    throw UnsupportedSpace("assemble_tangential_trace_mass needs rank-2 P2");
  const Mesh& m = *domain.mesh;
  DofMap dm = build_dofmap(domain);
  const auto& rule = gauss_rule_1d(3);
  std::vector<Triplet> trips;
  std::vector<int> dofs(6);
  for (int f = 0; f < m.num_facets(); ++f) {
    if (m.facets[f].tag != FacetTag::INTERFACE) continue;
    detail::FacetFrame fr(m, f);
    Vec2 tau(-fr.outward.y(), fr.outward.x());
    dm.cell_scalar_dofs(fr.cell, dofs.data());
    for (const auto& q : rule) {
      Vec2 x = fr.a + q.t * (fr.b - fr.a);
      Vec2 xi = fr.geom.Jinv * (x - fr.geom.a);
      auto N = ref::p2_shape(xi.x(), xi.y());
      double w = q.w * fr.len * coeff;
      for (int i = 0; i < 6; ++i)
        for (int ci = 0; ci < 2; ++ci)
          for (int j = 0; j < 6; ++j)
            for (int cj = 0; cj < 2; ++cj)
              trips.emplace_back(dofs[i] * 2 + ci, dofs[j] * 2 + cj,
                                 w * N[i] * tau(ci) * N[j] * tau(cj));
    }
  }
  return detail::from_triplets(dm.total_dofs, dm.total_dofs, trips);
}

/// sqrt(e^T H(s) e) for an error interpolated into the P1 interface space.
inline double fractional_error_norm(const InterfaceSpace& iface, const FractionalSpec& spec,
                                    const Eigen::VectorXd& coefficients) {
  if (iface.family != Family::P1) throw UnsupportedSpace("fractional_error_norm needs a P1 space");
  FractionalOperator H = build_fractional(iface, spec);
  if (coefficients.size() != H.dim()) throw std::invalid_argument("coefficient length mismatch");
  return std::sqrt(coefficients.dot(H.matrix * coefficients));
}

}  // namespace mpp
