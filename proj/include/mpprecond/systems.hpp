#pragma once

#include "mpprecond/block_operator.hpp"
#include "mpprecond/interface_ops.hpp"
#include "mpprecond/mesh.hpp"
#include "mpprecond/mms.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mpp {

enum class PoissonVariant { DD, ND, NN };
enum class DarcyStokesPrecond { NAIVE, ROBUST };
enum class BcMode { MIXED, ALL_DIRICHLET };
enum class VectorMultiplierPrecond { FREE, ZERO00, N0, T0 };
enum class MmsFields { TRIG, POLYNOMIAL };

/// Per-field error description in the preconditioner-block norm, together
/// with the analytic solution the error is measured against.
struct MmsField {
  std::string name;
  enum class Norm { GRAD, EPS, L2, HDIV, FRACTIONAL } norm = Norm::L2;
  double coeff = 1.0;       // weight of the volumetric term
  double coeff_tang = 0.0;  // weight of the interface tangential term (velocity blocks)
  std::vector<FractionalSpec> fracs;

  enum class Data { SCALAR, VECTOR, RT0, MULT_SCALAR, MULT_VECTOR } data = Data::SCALAR;
  SpaceDescriptor space;  // volumetric fields only
  ExactScalar scalar;
  ExactVector vec;
  LineScalarFn mult_scalar;
  LineVectorFn mult_vector;
};

/// A built system plus everything needed to evaluate it: the bundle owns the
/// meshes (via shared_ptr) so spaces and error descriptors stay valid.
struct Problem {
  std::string id;
  SystemBundle bundle;
  std::shared_ptr<CoupledMesh> coupled;
  std::shared_ptr<SubproblemMesh> sub;
  std::vector<MmsField> mms;  // empty when no analytic solution is attached

  int dofs() const { return bundle.layout.total; }
};

namespace exact {

// Fixed manufactured fields; the multiplier data are trigonometric.

inline ExactVector stream_velocity() {
  return {[](const Vec2& x) {
            return Vec2(std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()),
                        -std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()));
          },
          [](const Vec2& x) {
            Eigen::Matrix2d g;
            double sx = std::sin(M_PI * x.x()), cx = std::cos(M_PI * x.x());
            double sy = std::sin(M_PI * x.y()), cy = std::cos(M_PI * x.y());
            g << M_PI * cx * cy, -M_PI * sx * sy, M_PI * sx * sy, -M_PI * cx * cy;
            return g;
          }};
}

inline ExactVector darcy_velocity() {
  return {[](const Vec2& x) {
            return Vec2(std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()) + 0.5 * x.y() * x.y(),
                        x.x() * std::cos(M_PI * x.y()));
          },
          [](const Vec2& x) {
            Eigen::Matrix2d g;
            double sx = std::sin(M_PI * x.x()), cx = std::cos(M_PI * x.x());
            double sy = std::sin(M_PI * x.y()), cy = std::cos(M_PI * x.y());
            g << M_PI * cx * cy, -M_PI * sx * sy + x.y(), cy, -M_PI * x.x() * sy;
            return g;
          }};
}

inline ExactVector elastic_displacement() {
  return {[](const Vec2& x) {
            return Vec2(std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()),
                        0.5 * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()));
          },
          [](const Vec2& x) {
            Eigen::Matrix2d g;
            double sx = std::sin(M_PI * x.x()), cx = std::cos(M_PI * x.x());
            double sy = std::sin(M_PI * x.y()), cy = std::cos(M_PI * x.y());
            g << -M_PI * sx * sy, M_PI * cx * cy, 0.5 * M_PI * cx * cy, -0.5 * M_PI * sx * sy;
            return g;
          }};
}

inline ExactScalar pressure_a() {
  return {[](const Vec2& x) { return std::cos(M_PI * x.x()) * std::cos(M_PI * x.y()); },
          [](const Vec2& x) {
            return Vec2(-M_PI * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()),
                        -M_PI * std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()));
          }};
}

inline ExactScalar pressure_b() {
  return {[](const Vec2& x) { return (1.0 - x.x()) * std::sin(M_PI * x.y()); },
          [](const Vec2& x) {
            return Vec2(-std::sin(M_PI * x.y()), M_PI * (1.0 - x.x()) * std::cos(M_PI * x.y()));
          }};
}

inline LineScalarFn trig_multiplier() {
  return [](double y) { return std::cos(M_PI * y); };
}

inline LineVectorFn trig_vector_multiplier() {
  return [](double y) { return Vec2(std::cos(M_PI * y), std::sin(M_PI * y)); };
}

// Polynomial fields contained in the discrete spaces (patch tests).

inline ExactVector quadratic_velocity() {
  return {[](const Vec2& x) {
            return Vec2(x.x() * x.x() - x.y() + 0.5, x.x() * x.y() + 2.0 * x.y() * x.y());
          },
          [](const Vec2& x) {
            Eigen::Matrix2d g;
            g << 2.0 * x.x(), -1.0, x.y(), x.x() + 4.0 * x.y();
            return g;
          }};
}

inline ExactVector rt0_velocity() {
  return {[](const Vec2& x) { return Vec2(0.4 + 0.5 * x.x(), -0.1 + 0.5 * x.y()); },
          [](const Vec2&) {
            Eigen::Matrix2d g;
            g << 0.5, 0.0, 0.0, 0.5;
            return g;
          }};
}

inline ExactScalar linear_pressure() {
  return {[](const Vec2& x) { return 1.0 - x.x() + 2.0 * x.y(); },
          [](const Vec2&) { return Vec2(-1.0, 2.0); }};
}

inline ExactScalar constant_pressure() {
  return {[](const Vec2&) { return 0.7; }, [](const Vec2&) { return Vec2(0.0, 0.0); }};
}

inline ExactScalar trig_scalar_a() {
  return {[](const Vec2& x) { return std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()); },
          [](const Vec2& x) {
            return Vec2(M_PI * std::cos(M_PI * x.x()) * std::cos(M_PI * x.y()),
                        -M_PI * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()));
          }};
}

inline ExactScalar trig_scalar_b() {
  return {[](const Vec2& x) { return std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()) + 0.3; },
          [](const Vec2& x) {
            return Vec2(-M_PI * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()),
                        M_PI * std::cos(M_PI * x.x()) * std::cos(M_PI * x.y()));
          }};
}

}  // namespace exact

namespace detail {

inline double leg_from_label(double h_label) {
  // the printed resolution label h corresponds to triangles with legs h/2
  return 0.5 * h_label;
}

inline std::vector<int> dirichlet_of(const SpaceDescriptor& sp) {
  return build_dofmap(sp).dirichlet_dofs;
}

inline VecX values_at(const std::vector<int>& dofs, const VecX& full) {
  VecX v(dofs.size());
  for (size_t i = 0; i < dofs.size(); ++i) v(static_cast<int>(i)) = full(dofs[i]);
  return v;
}

inline SpMat scaled(const SpMat& A, double c) { return SpMat(c * A); }

}  // namespace detail

/// Two Poisson problems coupled through a P0 multiplier on the interface,
/// discretized with P2-P2-P0. The preconditioner multiplier block is the sum
/// of weighted fractional operators selected by `precond`.
inline Problem build_poisson_interface(const ParameterSet& prm, double h_label,
                                       PoissonVariant variant, PoissonVariant precond,
                                       MmsFields fields = MmsFields::TRIG) {
  prm.validate();
  const double leg = detail::leg_from_label(h_label);
  CoupledGeometry geom = variant == PoissonVariant::DD   ? CoupledGeometry::POISSON_DD
                         : variant == PoissonVariant::ND ? CoupledGeometry::POISSON_ND
                                                         : CoupledGeometry::POISSON_NN;
  Problem prob;
  prob.id = variant == PoissonVariant::DD ? "poisson-dd"
            : variant == PoissonVariant::ND ? "poisson-nd"
                                            : "poisson-nn";
  prob.coupled = std::make_shared<CoupledMesh>(build_coupled_mesh(leg, geom));
  CoupledMesh& cm = *prob.coupled;

  auto sp1 = scalar_space(cm.fluid, Family::P2);
  auto sp2 = scalar_space(cm.porous, Family::P2);
  auto sp1d = scalar_space(cm.fluid, Family::P2, {FacetTag::DIR_F});
  auto sp2d = scalar_space(cm.porous, Family::P2, {FacetTag::DIR_P});
  InterfaceSpace ifs{Family::P0, 1, &cm.interface};

  FieldLayout layout;
  layout.add("u1", build_dofmap(sp1).total_dofs);
  layout.add("u2", build_dofmap(sp2).total_dofs);
  layout.add("lambda", ifs.dofs());

  SpMat A1 = assemble_stiffness(sp1, prm.kappa1);
  SpMat A2 = assemble_stiffness(sp2, prm.kappa2);
  SpMat T1 = assemble_trace(sp1, ifs);
  SpMat T2 = assemble_trace(sp2, ifs);

  BlockSystem bs(layout);
  bs.set_block("u1", "u1", A1);
  bs.set_block("u2", "u2", A2);
  bs.set_block_sym("lambda", "u1", T1);
  bs.set_block_sym("lambda", "u2", detail::scaled(T2, -1.0));

  const ExactScalar u1 = fields == MmsFields::TRIG ? exact::trig_scalar_a() : exact::linear_pressure();
  const ExactScalar u2 = fields == MmsFields::TRIG ? exact::trig_scalar_b() : exact::constant_pressure();
  const LineScalarFn lam = fields == MmsFields::TRIG
                               ? exact::trig_multiplier()
                               : LineScalarFn([](double) { return 0.8; });

  auto d1 = detail::dirichlet_of(sp1d);
  auto d2 = detail::dirichlet_of(sp2d);
  bs.constrain("u1", d1, detail::values_at(d1, interpolate(sp1, u1.value)));
  bs.constrain("u2", d2, detail::values_at(d2, interpolate(sp2, u2.value)));

  VecX rhs = VecX::Zero(layout.total);
  layout.field(rhs, 0) = weak::rhs_stiffness(sp1, prm.kappa1, u1.grad) +
                         weak::rhs_scalar_trace(sp1, cm.interface, 1.0, lam);
  layout.field(rhs, 1) = weak::rhs_stiffness(sp2, prm.kappa2, u2.grad) -
                         weak::rhs_scalar_trace(sp2, cm.interface, 1.0, lam);
  layout.field(rhs, 2) = weak::rhs_multiplier_scalar(
      cm.interface, 1.0, [&](double y) { return u1.value(Vec2(0.5, y)) - u2.value(Vec2(0.5, y)); });

  FractionalFlavor f1 = precond == PoissonVariant::DD ? FractionalFlavor::ZERO_TRACE_00
                                                      : FractionalFlavor::FREE;
  FractionalFlavor f2 = precond == PoissonVariant::NN ? FractionalFlavor::FREE
                                                      : FractionalFlavor::ZERO_TRACE_00;
  FractionalOperator S = sum_fractional({build_fractional(ifs, {-0.5, f1, 1.0 / prm.kappa1}),
                                         build_fractional(ifs, {-0.5, f2, 1.0 / prm.kappa2})});

  SystemBundle& b = prob.bundle;
  b.layout = layout;
  b.rhs = rhs;
  b.A = bs.assemble(b.rhs);
  b.N = BlockDiagonal(
      layout, {DiagonalBlock::from_sparse("u1", mpp::detail::eliminate(A1, d1, nullptr, nullptr, true)),
               DiagonalBlock::from_sparse("u2", mpp::detail::eliminate(A2, d2, nullptr, nullptr, true)),
               DiagonalBlock::from_dense("lambda", S.matrix)});

  MmsField m1{"u1", MmsField::Norm::GRAD, prm.kappa1, 0.0, {}, MmsField::Data::SCALAR, sp1, u1};
  MmsField m2{"u2", MmsField::Norm::GRAD, prm.kappa2, 0.0, {}, MmsField::Data::SCALAR, sp2, u2};
  MmsField ml{"lambda", MmsField::Norm::FRACTIONAL, 1.0, 0.0,
              {{-0.5, f1, 1.0 / prm.kappa1}, {-0.5, f2, 1.0 / prm.kappa2}},
              MmsField::Data::MULT_SCALAR};
  ml.mult_scalar = lam;
  prob.mms = {m1, m2, ml};
  return prob;
}

/// Stokes subproblem with the normal trace enforced by a P0 multiplier;
/// P2-P1-P0 elements, BJS-type tangential term with unit coefficient.
inline Problem build_stokes_subproblem(const ParameterSet& prm, double h_label,
                                       FractionalFlavor flavor,
                                       SubproblemDomain dom = SubproblemDomain::UNIT,
                                       MmsFields fields = MmsFields::TRIG) {
  prm.validate();
  Problem prob;
  prob.id = "stokes-sub";
  prob.sub = std::make_shared<SubproblemMesh>(
      build_subproblem_mesh(detail::leg_from_label(h_label), dom, FacetTag::DIR_F, FacetTag::NEU_F));
  Mesh& mesh = prob.sub->domain;
  InterfaceMesh& im = prob.sub->interface;

  auto vs = vector_space(mesh, Family::P2);
  auto vsd = vector_space(mesh, Family::P2, {FacetTag::DIR_F});
  auto ps = scalar_space(mesh, Family::P1);
  InterfaceSpace ifs{Family::P0, 1, &im};

  FieldLayout layout;
  layout.add("u", build_dofmap(vs).total_dofs);
  layout.add("p", build_dofmap(ps).total_dofs);
  layout.add("lambda", ifs.dofs());

  SpMat Auu = assemble_stiffness(vs, prm.mu);
  Auu += assemble_tangential_trace_mass(vs, 1.0);
  SpMat B = assemble_div(vs, ps);
  SpMat Tn = assemble_normal_trace(vs, ifs, 1.0);

  BlockSystem bs(layout);
  bs.set_block("u", "u", Auu);
  bs.set_block_sym("p", "u", B);
  bs.set_block_sym("lambda", "u", Tn);

  const ExactVector u = fields == MmsFields::TRIG ? exact::stream_velocity() : exact::quadratic_velocity();
  const ExactScalar p = fields == MmsFields::TRIG ? exact::pressure_a() : exact::linear_pressure();
  const LineScalarFn lam = fields == MmsFields::TRIG
                               ? exact::trig_multiplier()
                               : LineScalarFn([](double) { return 0.8; });

  auto du = detail::dirichlet_of(vsd);
  bs.constrain("u", du, detail::values_at(du, interpolate(vs, u.value)));

  VecX rhs = VecX::Zero(layout.total);
  layout.field(rhs, 0) = weak::rhs_stiffness_vec(vs, prm.mu, u.grad) +
                         weak::rhs_tangential_trace(vs, 1.0, u.value) +
                         weak::rhs_pressure_div(vs, p.value) +
                         weak::rhs_normal_trace_velocity(vs, im, 1.0, lam);
  layout.field(rhs, 1) = weak::rhs_div(ps, u);
  layout.field(rhs, 2) = weak::rhs_multiplier_normal(mesh, im, 1.0, u.value);

  FractionalOperator S = build_fractional(ifs, {-0.5, flavor, 1.0 / prm.mu});

  SystemBundle& b = prob.bundle;
  b.layout = layout;
  b.rhs = rhs;
  b.A = bs.assemble(b.rhs);
  b.N = BlockDiagonal(
      layout, {DiagonalBlock::from_sparse("u", mpp::detail::eliminate(Auu, du, nullptr, nullptr, true)),
               DiagonalBlock::from_sparse("p", assemble_mass(ps, 1.0 / prm.mu)),
               DiagonalBlock::from_dense("lambda", S.matrix)});

  MmsField mu_{"u", MmsField::Norm::GRAD, prm.mu, 1.0, {}, MmsField::Data::VECTOR, vs};
  mu_.vec = u;
  MmsField mp{"p", MmsField::Norm::L2, 1.0 / prm.mu, 0.0, {}, MmsField::Data::SCALAR, ps, p};
  MmsField ml{"lambda", MmsField::Norm::FRACTIONAL, 1.0, 0.0, {{-0.5, flavor, 1.0 / prm.mu}},
              MmsField::Data::MULT_SCALAR};
  ml.mult_scalar = lam;
  prob.mms = {mu_, mp, ml};
  return prob;
}

/// Darcy subproblem with the normal flux datum enforced by a P0 multiplier;
/// RT0-P0-P0 elements.
inline Problem build_darcy_subproblem(const ParameterSet& prm, double h_label,
                                      FractionalFlavor flavor,
                                      SubproblemDomain dom = SubproblemDomain::UNIT,
                                      MmsFields fields = MmsFields::TRIG) {
  prm.validate();
  Problem prob;
  prob.id = "darcy-sub";
  prob.sub = std::make_shared<SubproblemMesh>(
      build_subproblem_mesh(detail::leg_from_label(h_label), dom, FacetTag::DIR_P, FacetTag::NEU_P));
  Mesh& mesh = prob.sub->domain;
  InterfaceMesh& im = prob.sub->interface;

  auto us = rt0_space(mesh);
  auto usd = rt0_space(mesh, {FacetTag::DIR_P});
  auto ps = scalar_space(mesh, Family::P0);
  InterfaceSpace ifs{Family::P0, 1, &im};

  FieldLayout layout;
  layout.add("u", build_dofmap(us).total_dofs);
  layout.add("p", build_dofmap(ps).total_dofs);
  layout.add("lambda", ifs.dofs());

  SpMat Auu = assemble_mass(us, 1.0 / prm.K);
  SpMat B = assemble_div(us, ps);
  SpMat Tn = assemble_normal_trace(us, ifs, 1.0);

  BlockSystem bs(layout);
  bs.set_block("u", "u", Auu);
  bs.set_block_sym("p", "u", B);
  bs.set_block_sym("lambda", "u", Tn);

  const ExactVector u = fields == MmsFields::TRIG ? exact::darcy_velocity() : exact::rt0_velocity();
  const ExactScalar p = fields == MmsFields::TRIG ? exact::pressure_b() : exact::constant_pressure();
  const LineScalarFn lam = fields == MmsFields::TRIG
                               ? exact::trig_multiplier()
                               : LineScalarFn([](double) { return 0.3; });

  auto du = detail::dirichlet_of(usd);
  bs.constrain("u", du, detail::values_at(du, interpolate(us, u.value)));

  VecX rhs = VecX::Zero(layout.total);
  layout.field(rhs, 0) = weak::rhs_mass_rt0(us, 1.0 / prm.K, u.value) +
                         weak::rhs_pressure_div(us, p.value) +
                         weak::rhs_normal_trace_rt0(us, im, 1.0, lam);
  layout.field(rhs, 1) = weak::rhs_div(ps, u);
  layout.field(rhs, 2) = weak::rhs_multiplier_normal(mesh, im, 1.0, u.value);

  FractionalOperator S = build_fractional(ifs, {0.5, flavor, prm.K});

  SystemBundle& b = prob.bundle;
  b.layout = layout;
  b.rhs = rhs;
  b.A = bs.assemble(b.rhs);
  b.N = BlockDiagonal(
      layout,
      {DiagonalBlock::from_sparse("u", mpp::detail::eliminate(assemble_hdiv_operator(us, 1.0 / prm.K),
                                                              du, nullptr, nullptr, true)),
       DiagonalBlock::from_sparse("p", assemble_mass(ps, prm.K)),
       DiagonalBlock::from_dense("lambda", S.matrix)});

  MmsField mu_{"u", MmsField::Norm::HDIV, 1.0 / prm.K, 0.0, {}, MmsField::Data::RT0, us};
  mu_.vec = u;
  MmsField mp{"p", MmsField::Norm::L2, prm.K, 0.0, {}, MmsField::Data::SCALAR, ps, p};
  MmsField ml{"lambda", MmsField::Norm::FRACTIONAL, 1.0, 0.0, {{0.5, flavor, prm.K}},
              MmsField::Data::MULT_SCALAR};
  ml.mult_scalar = lam;
  prob.mms = {mu_, mp, ml};
  return prob;
}

/// Stokes problem with the full vector trace enforced by a rank-2 P0
/// multiplier (the building block of the fluid-structure system); P2-P1-P0^2.
inline Problem build_navier_subproblem(const ParameterSet& prm, double h_label,
                                       VectorMultiplierPrecond precond,
                                       SubproblemDomain dom = SubproblemDomain::UNIT,
                                       MmsFields fields = MmsFields::TRIG) {
  prm.validate();
  Problem prob;
  prob.id = "navier-sub";
  prob.sub = std::make_shared<SubproblemMesh>(
      build_subproblem_mesh(detail::leg_from_label(h_label), dom, FacetTag::DIR_F, FacetTag::NEU_F));
  Mesh& mesh = prob.sub->domain;
  InterfaceMesh& im = prob.sub->interface;

  auto vs = vector_space(mesh, Family::P2);
  auto vsd = vector_space(mesh, Family::P2, {FacetTag::DIR_F});
  auto ps = scalar_space(mesh, Family::P1);
  InterfaceSpace ifs{Family::P0, 2, &im};

  FieldLayout layout;
  layout.add("u", build_dofmap(vs).total_dofs);
  layout.add("p", build_dofmap(ps).total_dofs);
  layout.add("lambda", ifs.dofs());

  SpMat Auu = assemble_epsilon_form(vs, prm.mu);
  SpMat B = assemble_div(vs, ps);
  SpMat T = assemble_trace(vs, ifs);

  BlockSystem bs(layout);
  bs.set_block("u", "u", Auu);
  bs.set_block_sym("p", "u", B);
  bs.set_block_sym("lambda", "u", T);

  const ExactVector u = fields == MmsFields::TRIG ? exact::stream_velocity() : exact::quadratic_velocity();
  const ExactScalar p = fields == MmsFields::TRIG ? exact::pressure_a() : exact::linear_pressure();
  const LineVectorFn lam = fields == MmsFields::TRIG
                               ? exact::trig_vector_multiplier()
                               : LineVectorFn([](double) { return Vec2(0.4, -0.6); });

  auto du = detail::dirichlet_of(vsd);
  bs.constrain("u", du, detail::values_at(du, interpolate(vs, u.value)));

  VecX rhs = VecX::Zero(layout.total);
  layout.field(rhs, 0) = weak::rhs_epsilon(vs, prm.mu, u.grad) +
                         weak::rhs_pressure_div(vs, p.value) +
                         weak::rhs_vector_trace_velocity(vs, im, 1.0, lam);
  layout.field(rhs, 1) = weak::rhs_div(ps, u);
  layout.field(rhs, 2) = weak::rhs_multiplier_vector(
      im, 1.0, [&](double y) { return u.value(Vec2(im.x, y)); });

  auto flav = [&](bool zero) {
    return zero ? FractionalFlavor::ZERO_TRACE_00 : FractionalFlavor::FREE;
  };
  FractionalFlavor fx = flav(precond == VectorMultiplierPrecond::ZERO00 ||
                             precond == VectorMultiplierPrecond::N0);
  FractionalFlavor fy = flav(precond == VectorMultiplierPrecond::ZERO00 ||
                             precond == VectorMultiplierPrecond::T0);
  FractionalOperator S = build_fractional_vector(ifs, {-0.5, fx, 1.0 / prm.mu},
                                                 {-0.5, fy, 1.0 / prm.mu});

  SystemBundle& b = prob.bundle;
  b.layout = layout;
  b.rhs = rhs;
  b.A = bs.assemble(b.rhs);
  b.N = BlockDiagonal(
      layout, {DiagonalBlock::from_sparse("u", mpp::detail::eliminate(Auu, du, nullptr, nullptr, true)),
               DiagonalBlock::from_sparse("p", assemble_mass(ps, 1.0 / prm.mu)),
               DiagonalBlock::from_dense("lambda", S.matrix)});

  MmsField mu_{"u", MmsField::Norm::EPS, prm.mu, 0.0, {}, MmsField::Data::VECTOR, vs};
  mu_.vec = u;
  MmsField mp{"p", MmsField::Norm::L2, 1.0 / prm.mu, 0.0, {}, MmsField::Data::SCALAR, ps, p};
  MmsField ml{"lambda", MmsField::Norm::FRACTIONAL, 1.0, 0.0,
              {{-0.5, fx, 1.0 / prm.mu}, {-0.5, fy, 1.0 / prm.mu}}, MmsField::Data::MULT_VECTOR};
  ml.mult_vector = lam;
  prob.mms = {mu_, mp, ml};
  return prob;
}

/// The coupled Darcy-Stokes system, P2-P1-RT0-P0-P0. ALL_DIRICHLET mode
/// borders the Stokes pressure block with the mean-value row (weighted mu in
/// the Gram matrix) and swaps the multiplier flavors.
inline Problem build_darcy_stokes(const ParameterSet& prm, double h_label,
                                  DarcyStokesPrecond precond, BcMode bc = BcMode::MIXED,
                                  MmsFields fields = MmsFields::TRIG) {
  prm.validate();
  const bool all_dir = bc == BcMode::ALL_DIRICHLET;
  Problem prob;
  prob.id = all_dir ? "darcy-stokes-dirichlet" : "darcy-stokes";
  prob.coupled = std::make_shared<CoupledMesh>(
      build_coupled_mesh(detail::leg_from_label(h_label), CoupledGeometry::DARCY_STOKES, all_dir));
  CoupledMesh& cm = *prob.coupled;

  auto vsf = vector_space(cm.fluid, Family::P2);
  auto vsfd = vector_space(cm.fluid, Family::P2, {FacetTag::DIR_F});
  auto usp = rt0_space(cm.porous);
  auto uspd = rt0_space(cm.porous, {FacetTag::DIR_P});
  auto psf = scalar_space(cm.fluid, Family::P1);
  auto psp = scalar_space(cm.porous, Family::P0);
  InterfaceSpace ifs{Family::P0, 1, &cm.interface};

  const int nuf = build_dofmap(vsf).total_dofs;
  const int nup = build_dofmap(usp).total_dofs;
  const int npf = build_dofmap(psf).total_dofs;
  const int npp = build_dofmap(psp).total_dofs;

  FieldLayout layout;
  layout.add("u_f", nuf);
  layout.add("u_p", nup);
  layout.add("p_f", all_dir ? npf + 1 : npf);  // bordered by the mean-value dof
  layout.add("p_p", npp);
  layout.add("lambda", ifs.dofs());

  const double D = prm.D();
  SpMat Auu = assemble_stiffness(vsf, prm.mu);
  Auu += assemble_tangential_trace_mass(vsf, D);
  SpMat App = assemble_mass(usp, 1.0 / prm.K);
  SpMat Bf = assemble_div(vsf, psf);
  SpMat Bp = assemble_div(usp, psp);
  SpMat Tnf = assemble_normal_trace(vsf, ifs, 1.0);
  SpMat Tnp = assemble_normal_trace(usp, ifs, 1.0);

  BlockSystem bs(layout);
  bs.set_block("u_f", "u_f", Auu);
  bs.set_block("u_p", "u_p", App);
  bs.set_block_sym("lambda", "u_f", Tnf);
  bs.set_block_sym("lambda", "u_p", Tnp);
  bs.set_block_sym("p_p", "u_p", Bp);

  SpMat Mpf = assemble_mass(psf, 1.0);
  if (all_dir) {
    // pad the div block with the empty mean row and add the border column of
    // cell integrals of the P1 basis
    std::vector<Triplet> trips;
    for (int col = 0; col < Bf.outerSize(); ++col)
      for (SpMat::InnerIterator it(Bf, col); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    SpMat Bfp = mpp::detail::from_triplets(npf + 1, nuf, trips);
    bs.set_block_sym("p_f", "u_f", Bfp);

    VecX c = Mpf * VecX::Ones(npf);
    std::vector<Triplet> border;
    for (int i = 0; i < npf; ++i) {
      border.emplace_back(i, npf, c(i));
      border.emplace_back(npf, i, c(i));
    }
    bs.set_block("p_f", "p_f", mpp::detail::from_triplets(npf + 1, npf + 1, border));
  } else {
    bs.set_block_sym("p_f", "u_f", Bf);
  }

  const ExactVector uf = fields == MmsFields::TRIG ? exact::stream_velocity() : exact::quadratic_velocity();
  const ExactScalar pf = fields == MmsFields::TRIG ? exact::pressure_a() : exact::linear_pressure();
  const ExactVector up = fields == MmsFields::TRIG ? exact::darcy_velocity() : exact::rt0_velocity();
  const ExactScalar pp = fields == MmsFields::TRIG ? exact::pressure_b() : exact::constant_pressure();
  const LineScalarFn lam = fields == MmsFields::TRIG
                               ? exact::trig_multiplier()
                               : LineScalarFn([](double) { return 0.3; });

  auto duf = detail::dirichlet_of(vsfd);
  auto dup = detail::dirichlet_of(uspd);
  bs.constrain("u_f", duf, detail::values_at(duf, interpolate(vsf, uf.value)));
  bs.constrain("u_p", dup, detail::values_at(dup, interpolate(usp, up.value)));

  VecX rhs = VecX::Zero(layout.total);
  layout.field(rhs, 0) = weak::rhs_stiffness_vec(vsf, prm.mu, uf.grad) +
                         weak::rhs_tangential_trace(vsf, D, uf.value) +
                         weak::rhs_pressure_div(vsf, pf.value) +
                         weak::rhs_normal_trace_velocity(vsf, cm.interface, 1.0, lam);
  layout.field(rhs, 1) = weak::rhs_mass_rt0(usp, 1.0 / prm.K, up.value) +
                         weak::rhs_pressure_div(usp, pp.value) +
                         weak::rhs_normal_trace_rt0(usp, cm.interface, 1.0, lam);
  {
    VecX rpf = weak::rhs_div(psf, uf);
    if (all_dir) {
      VecX ext(npf + 1);
      ext.head(npf) = rpf;
      ext(npf) = weak::rhs_mass(psf, 1.0, pf.value).sum();  // int p_f*, the mean datum
      layout.field(rhs, 2) = ext;
    } else {
      layout.field(rhs, 2) = rpf;
    }
  }
  layout.field(rhs, 3) = weak::rhs_div(psp, up);
  layout.field(rhs, 4) = weak::rhs_multiplier_normal(cm.fluid, cm.interface, 1.0, uf.value) +
                         weak::rhs_multiplier_normal(cm.porous, cm.interface, 1.0, up.value);

  FractionalOperator S =
      precond == DarcyStokesPrecond::NAIVE
          ? build_fractional(ifs, {0.5, FractionalFlavor::FREE, 1.0})
          : (all_dir ? sum_fractional(
                           {build_fractional(ifs, {-0.5, FractionalFlavor::ZERO_TRACE_00, 1.0 / prm.mu}),
                            build_fractional(ifs, {0.5, FractionalFlavor::FREE, prm.K})})
                     : sum_fractional(
                           {build_fractional(ifs, {0.5, FractionalFlavor::ZERO_TRACE_00, prm.K}),
                            build_fractional(ifs, {-0.5, FractionalFlavor::FREE, 1.0 / prm.mu})}));

  DiagonalBlock npf_block = DiagonalBlock::from_sparse("p_f", assemble_mass(psf, 1.0 / prm.mu));
  if (all_dir) {
    SpMat Mw = assemble_mass(psf, 1.0 / prm.mu);
    std::vector<Triplet> trips;
    for (int col = 0; col < Mw.outerSize(); ++col)
      for (SpMat::InnerIterator it(Mw, col); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    trips.emplace_back(npf, npf, prm.mu);
    npf_block = DiagonalBlock::from_sparse("p_f", mpp::detail::from_triplets(npf + 1, npf + 1, trips));
  }

  SystemBundle& b = prob.bundle;
  b.layout = layout;
  b.rhs = rhs;
  b.A = bs.assemble(b.rhs);
  b.N = BlockDiagonal(
      layout,
      {DiagonalBlock::from_sparse("u_f", mpp::detail::eliminate(Auu, duf, nullptr, nullptr, true)),
       DiagonalBlock::from_sparse("u_p", mpp::detail::eliminate(assemble_hdiv_operator(usp, 1.0 / prm.K),
                                                                dup, nullptr, nullptr, true)),
       npf_block, DiagonalBlock::from_sparse("p_p", assemble_mass(psp, prm.K)),
       DiagonalBlock::from_dense("lambda", S.matrix)});

  if (!all_dir) {
    MmsField m1{"u_f", MmsField::Norm::GRAD, prm.mu, D, {}, MmsField::Data::VECTOR, vsf};
    m1.vec = uf;
    MmsField m2{"u_p", MmsField::Norm::HDIV, 1.0 / prm.K, 0.0, {}, MmsField::Data::RT0, usp};
    m2.vec = up;
    MmsField m3{"p_f", MmsField::Norm::L2, 1.0 / prm.mu, 0.0, {}, MmsField::Data::SCALAR, psf, pf};
    MmsField m4{"p_p", MmsField::Norm::L2, prm.K, 0.0, {}, MmsField::Data::SCALAR, psp, pp};
    MmsField m5{"lambda", MmsField::Norm::FRACTIONAL, 1.0, 0.0,
                {{0.5, FractionalFlavor::ZERO_TRACE_00, prm.K},
                 {-0.5, FractionalFlavor::FREE, 1.0 / prm.mu}},
                MmsField::Data::MULT_SCALAR};
    m5.mult_scalar = lam;
    prob.mms = {m1, m2, m3, m4, m5};
  }
  return prob;
}

/// The coupled Stokes-Navier (fluid-structure) system, P2-P1-P2-P1-P0^2.
/// eta = +inf drops the penalty block; ALL_DIRICHLET attaches the discrete
/// near-nullspace vector z = (0, 0, k, 1, -n) for deflation.
inline Problem build_stokes_navier(const ParameterSet& prm, double h_label,
                                   BcMode bc = BcMode::MIXED, MmsFields fields = MmsFields::TRIG) {
  prm.validate();
  const bool all_dir = bc == BcMode::ALL_DIRICHLET;
  Problem prob;
  prob.id = all_dir ? "stokes-navier-dirichlet" : "stokes-navier";
  prob.coupled = std::make_shared<CoupledMesh>(
      build_coupled_mesh(detail::leg_from_label(h_label), CoupledGeometry::DARCY_STOKES, all_dir));
  CoupledMesh& cm = *prob.coupled;

  auto vsf = vector_space(cm.fluid, Family::P2);
  auto vsfd = vector_space(cm.fluid, Family::P2, {FacetTag::DIR_F});
  auto vsp = vector_space(cm.porous, Family::P2);
  auto vspd = vector_space(cm.porous, Family::P2, {FacetTag::DIR_P});
  auto psf = scalar_space(cm.fluid, Family::P1);
  auto psp = scalar_space(cm.porous, Family::P1);
  InterfaceSpace ifs{Family::P0, 2, &cm.interface};

  FieldLayout layout;
  layout.add("u_f", build_dofmap(vsf).total_dofs);
  layout.add("u_p", build_dofmap(vsp).total_dofs);
  layout.add("p_f", build_dofmap(psf).total_dofs);
  layout.add("p_p", build_dofmap(psp).total_dofs);
  layout.add("lambda", ifs.dofs());

  SpMat Af = assemble_epsilon_form(vsf, prm.mu);
  SpMat Ap = assemble_epsilon_form(vsp, 1.0);
  SpMat Bf = assemble_div(vsf, psf);
  SpMat Bp = assemble_div(vsp, psp);
  SpMat Tf = assemble_trace(vsf, ifs);
  SpMat Tp = assemble_trace(vsp, ifs);

  BlockSystem bs(layout);
  bs.set_block("u_f", "u_f", Af);
  bs.set_block("u_p", "u_p", Ap);
  bs.set_block_sym("p_f", "u_f", Bf);
  bs.set_block_sym("p_p", "u_p", Bp);
  bs.set_block_sym("lambda", "u_f", detail::scaled(Tf, prm.k));
  bs.set_block_sym("lambda", "u_p", detail::scaled(Tp, -1.0));
  if (!prm.eta_infinite())
    bs.set_block("p_p", "p_p", detail::scaled(assemble_mass(psp, 1.0), -1.0 / prm.eta));

  const ExactVector uf = fields == MmsFields::TRIG ? exact::stream_velocity() : exact::quadratic_velocity();
  const ExactVector up = fields == MmsFields::TRIG ? exact::elastic_displacement() : exact::quadratic_velocity();
  const ExactScalar pf = fields == MmsFields::TRIG ? exact::pressure_a() : exact::linear_pressure();
  const ExactScalar pp = fields == MmsFields::TRIG ? exact::pressure_b() : exact::linear_pressure();
  const LineVectorFn lam = fields == MmsFields::TRIG
                               ? exact::trig_vector_multiplier()
                               : LineVectorFn([](double) { return Vec2(0.4, -0.6); });

  auto duf = detail::dirichlet_of(vsfd);
  auto dup = detail::dirichlet_of(vspd);
  bs.constrain("u_f", duf, detail::values_at(duf, interpolate(vsf, uf.value)));
  bs.constrain("u_p", dup, detail::values_at(dup, interpolate(vsp, up.value)));

  VecX rhs = VecX::Zero(layout.total);
  layout.field(rhs, 0) = weak::rhs_epsilon(vsf, prm.mu, uf.grad) +
                         weak::rhs_pressure_div(vsf, pf.value) +
                         weak::rhs_vector_trace_velocity(vsf, cm.interface, prm.k, lam);
  layout.field(rhs, 1) = weak::rhs_epsilon(vsp, 1.0, up.grad) +
                         weak::rhs_pressure_div(vsp, pp.value) -
                         weak::rhs_vector_trace_velocity(vsp, cm.interface, 1.0, lam);
  layout.field(rhs, 2) = weak::rhs_div(psf, uf);
  layout.field(rhs, 3) = weak::rhs_div(psp, up);
  if (!prm.eta_infinite())
    layout.field(rhs, 3) -= weak::rhs_mass(psp, 1.0 / prm.eta, pp.value);
  layout.field(rhs, 4) = weak::rhs_multiplier_vector(cm.interface, 1.0, [&](double y) {
    return Vec2(prm.k * uf.value(Vec2(0.5, y)) - up.value(Vec2(0.5, y)));
  });

  FractionalFlavor flavor = all_dir ? FractionalFlavor::ZERO_TRACE_00 : FractionalFlavor::FREE;
  double wlam = prm.k * prm.k / prm.mu + 1.0;
  FractionalOperator S = build_fractional(ifs, {-0.5, flavor, wlam});

  SystemBundle& b = prob.bundle;
  b.layout = layout;
  b.rhs = rhs;
  b.A = bs.assemble(b.rhs);
  b.N = BlockDiagonal(
      layout,
      {DiagonalBlock::from_sparse("u_f", mpp::detail::eliminate(Af, duf, nullptr, nullptr, true)),
       DiagonalBlock::from_sparse("u_p", mpp::detail::eliminate(Ap, dup, nullptr, nullptr, true)),
       DiagonalBlock::from_sparse("p_f", assemble_mass(psf, 1.0 / prm.mu)),
       DiagonalBlock::from_sparse("p_p", assemble_mass(psp, 1.0)),
       DiagonalBlock::from_dense("lambda", S.matrix)});

  if (all_dir) {
    // interpolant of z = (0, 0, k, 1, -n) with n the interface normal
    // oriented out of the fluid domain; spans ker(A) in the eta = inf limit
    VecX z = VecX::Zero(layout.total);
    layout.field(z, 2).setConstant(prm.k);
    layout.field(z, 3).setConstant(1.0);
    for (int s = 0; s < cm.interface.num_segments(); ++s) {
      z(layout.offsets[4] + 2 * s) = -1.0;
      z(layout.offsets[4] + 2 * s + 1) = 0.0;
    }
    b.deflation = z;
  }

  if (!all_dir) {
    MmsField m1{"u_f", MmsField::Norm::EPS, prm.mu, 0.0, {}, MmsField::Data::VECTOR, vsf};
    m1.vec = uf;
    MmsField m2{"u_p", MmsField::Norm::EPS, 1.0, 0.0, {}, MmsField::Data::VECTOR, vsp};
    m2.vec = up;
    MmsField m3{"p_f", MmsField::Norm::L2, 1.0 / prm.mu, 0.0, {}, MmsField::Data::SCALAR, psf, pf};
    MmsField m4{"p_p", MmsField::Norm::L2, 1.0, 0.0, {}, MmsField::Data::SCALAR, psp, pp};
    MmsField m5{"lambda", MmsField::Norm::FRACTIONAL, 1.0, 0.0,
                {{-0.5, flavor, wlam}, {-0.5, flavor, wlam}}, MmsField::Data::MULT_VECTOR};
    m5.mult_vector = lam;
    prob.mms = {m1, m2, m3, m4, m5};
  }
  return prob;
}

/// Per-field errors of a discrete solution in the preconditioner-block norms;
/// multiplier errors are measured through the P1 interpolant of the error.
inline std::vector<std::pair<std::string, double>> energy_error(const Problem& prob,
                                                                const VecX& solution) {
  if (prob.mms.empty()) throw std::invalid_argument("no analytic solution attached to " + prob.id);
  const InterfaceMesh& im = prob.coupled ? prob.coupled->interface : prob.sub->interface;
  std::vector<std::pair<std::string, double>> out;
  const auto rule = tri_rule_composite(2);
  for (const auto& f : prob.mms) {
    int fi = prob.bundle.layout.index(f.name);
    VecX coeffs = solution.segment(prob.bundle.layout.offsets[fi], prob.bundle.layout.sizes[fi]);
    double err2 = 0.0;
    switch (f.data) {
      case MmsField::Data::SCALAR: {
        FEFunction fe(f.space, coeffs);
        const Mesh& mesh = *f.space.mesh;
        for (int c = 0; c < mesh.num_cells(); ++c) {
          CellGeom g(mesh, c);
          for (const auto& q : rule) {
            Vec2 xi(q.x, q.y);
            Vec2 x = g.map(q.x, q.y);
            double w = q.w * std::abs(g.detJ);
            if (f.norm == MmsField::Norm::L2) {
              double e = fe.scalar_value(c, g, xi) - f.scalar.value(x);
              err2 += f.coeff * w * e * e;
            } else {  // GRAD of a scalar field
              std::array<Vec2, 6> G;
              weak::detail2::scalar_grads(f.space.family, q.x, q.y, G);
              std::vector<int> dofs(fe.dm.num_local_scalar());
              fe.dm.cell_scalar_dofs(c, dofs.data());
              Vec2 gh = Vec2::Zero();
              for (size_t i = 0; i < dofs.size(); ++i)
                gh += coeffs(dofs[i]) * (g.Jinv.transpose() * G[i]);
              Vec2 e = gh - f.scalar.grad(x);
              err2 += f.coeff * w * e.squaredNorm();
            }
          }
        }
        break;
      }
      case MmsField::Data::VECTOR: {
        FEFunction fe(f.space, coeffs);
        const Mesh& mesh = *f.space.mesh;
        for (int c = 0; c < mesh.num_cells(); ++c) {
          CellGeom g(mesh, c);
          for (const auto& q : rule) {
            Vec2 xi(q.x, q.y);
            Vec2 x = g.map(q.x, q.y);
            double w = q.w * std::abs(g.detJ);
            Eigen::Matrix2d ge = fe.vector_grad(c, g, xi) - f.vec.grad(x);
            if (f.norm == MmsField::Norm::EPS) {
              Eigen::Matrix2d eps = 0.5 * (ge + ge.transpose());
              err2 += 2.0 * f.coeff * w * eps.cwiseProduct(eps).sum();
            } else {
              err2 += f.coeff * w * ge.cwiseProduct(ge).sum();
            }
          }
        }
        if (f.coeff_tang > 0.0) {
          FEFunction fe2(f.space, coeffs);
          weak::detail2::for_interface_facets(
              mesh, im, [&](int, const mpp::detail::FacetFrame& fr, double, double w, const Vec2& x) {
                Vec2 tau(-fr.outward.y(), fr.outward.x());
                Vec2 xi = fr.geom.Jinv * (x - fr.geom.a);
                double e = (fe2.vector_value(fr.cell, fr.geom, xi, x) - f.vec.value(x)).dot(tau);
                err2 += f.coeff_tang * w * e * e;
              });
        }
        break;
      }
      case MmsField::Data::RT0: {
        FEFunction fe(f.space, coeffs);
        const Mesh& mesh = *f.space.mesh;
        for (int c = 0; c < mesh.num_cells(); ++c) {
          CellGeom g(mesh, c);
          double divh = fe.rt0_div(c);
          for (const auto& q : rule) {
            Vec2 x = g.map(q.x, q.y);
            double w = q.w * std::abs(g.detJ);
            Vec2 e = fe.vector_value(c, g, Vec2(q.x, q.y), x) - f.vec.value(x);
            double ediv = divh - f.vec.div(x);
            err2 += f.coeff * w * (e.squaredNorm() + ediv * ediv);
          }
        }
        break;
      }
      case MmsField::Data::MULT_SCALAR: {
        InterfaceSpace p1{Family::P1, 1, &im};
        VecX rec = p0_to_p1_interface(im, coeffs);
        VecX e(im.num_vertices());
        for (int v = 0; v < im.num_vertices(); ++v) e(v) = f.mult_scalar(im.ys[v]) - rec(v);
        for (const auto& spec : f.fracs) {
          double nrm = fractional_error_norm(p1, spec, e);
          err2 += nrm * nrm;
        }
        break;
      }
      case MmsField::Data::MULT_VECTOR: {
        InterfaceSpace p1{Family::P1, 1, &im};
        const int ns = im.num_segments();
        for (int comp = 0; comp < 2; ++comp) {
          VecX comp_coeffs(ns);
          for (int s = 0; s < ns; ++s) comp_coeffs(s) = coeffs(2 * s + comp);
          VecX rec = p0_to_p1_interface(im, comp_coeffs);
          VecX e(im.num_vertices());
          for (int v = 0; v < im.num_vertices(); ++v)
            e(v) = f.mult_vector(im.ys[v])(comp) - rec(v);
          const FractionalSpec& spec = f.fracs[comp];
          double nrm = fractional_error_norm(p1, spec, e);
          err2 += nrm * nrm;
        }
        break;
      }
    }
    out.emplace_back(f.name, std::sqrt(err2));
  }
  return out;
}

}  // namespace mpp
