#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mpprecond/dofmap.hpp"
#include "mpprecond/elements.hpp"
#include "mpprecond/quadrature.hpp"

#include <ostream>
#include <vector>

namespace mpp {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

namespace detail {

inline SpMat from_triplets(int rows, int cols, std::vector<Triplet>& trips) {
  SpMat A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

/// Symmetric elimination of constrained dofs, optionally updating a
/// right-hand side so the solution interpolates the prescribed values.
inline SpMat eliminate(const SpMat& A, const std::vector<int>& dofs, Eigen::VectorXd* rhs,
                       const Eigen::VectorXd* values, bool unit_diagonal) {
  std::vector<char> mask(A.rows(), 0);
  for (int d : dofs) {
    if (d < 0 || d >= A.rows()) throw std::out_of_range("dirichlet dof out of range");
    mask[d] = 1;
  }
  std::vector<Triplet> trips;
  trips.reserve(A.nonZeros());
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SpMat::InnerIterator it(A, col); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (mask[i] || mask[j]) {
        if (!mask[i] && mask[j] && rhs && values) (*rhs)(i) -= it.value() * (*values)(j);
        continue;
      }
      trips.emplace_back(i, j, it.value());
    }
  }
  if (unit_diagonal)
    for (int d : dofs) trips.emplace_back(d, d, 1.0);
  if (rhs && values)
    for (int d : dofs) (*rhs)(d) = (*values)(d);
  SpMat out(A.rows(), A.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

inline SpMat constrain_if_needed(SpMat A, const SpaceDescriptor& space) {
  if (space.dirichlet_tags.empty()) return A;
  DofMap dm = build_dofmap(space);
  return eliminate(A, dm.dirichlet_dofs, nullptr, nullptr, true);
}

}  // namespace detail

/// In-place symmetric Dirichlet elimination on a finalized matrix: row i and
/// column i are zeroed except a unit diagonal, and the right-hand side is
/// updated so the solve returns the prescribed values at constrained dofs.
inline void apply_dirichlet(SpMat& A, Eigen::VectorXd& rhs, const std::vector<int>& dofs,
                            const Eigen::VectorXd& values) {
  if (static_cast<int>(dofs.size()) != values.size() && values.size() != A.rows())
    throw std::invalid_argument("apply_dirichlet: length mismatch");
  Eigen::VectorXd full;
  const Eigen::VectorXd* vals = &values;
  if (values.size() != A.rows()) {
    full = Eigen::VectorXd::Zero(A.rows());
    for (size_t k = 0; k < dofs.size(); ++k) full(dofs[k]) = values(static_cast<int>(k));
    vals = &full;
  }
  A = detail::eliminate(A, dofs, &rhs, vals, true);
}

/// coeff * (grad u, grad v) for P1/P2, scalar or rank-2. Dirichlet tags of the
/// space are eliminated symmetrically with a unit diagonal.
inline SpMat assemble_stiffness(const SpaceDescriptor& space, double coeff) {
  if (space.family != Family::P1 && space.family != Family::P2)
    throw UnsupportedSpace("assemble_stiffness needs P1 or P2");
  const Mesh& m = *space.mesh;
  DofMap dm = build_dofmap(space);
  const int nl = dm.num_local_scalar();
  const int rank = dm.value_rank;
  const auto& rule = tri_rule(5);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(m.num_cells()) * nl * nl * rank);
  std::vector<int> dofs(nl);
  Eigen::MatrixXd local(nl, nl);
  for (int c = 0; c < m.num_cells(); ++c) {
    CellGeom g(m, c);
    local.setZero();
    for (const auto& q : rule) {
      std::array<Vec2, 6> gref;
      if (space.family == Family::P1) {
        auto gr = ref::p1_grad();
        std::copy(gr.begin(), gr.end(), gref.begin());
      } else {
        gref = ref::p2_grad(q.x, q.y);
      }
      double w = q.w * std::abs(g.detJ);
      for (int i = 0; i < nl; ++i) {
        Vec2 gi = g.Jinv.transpose() * gref[i];
        for (int j = 0; j < nl; ++j) {
          Vec2 gj = g.Jinv.transpose() * gref[j];
          local(i, j) += w * gi.dot(gj);
        }
      }
    }
    dm.cell_scalar_dofs(c, dofs.data());
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        for (int comp = 0; comp < rank; ++comp)
          trips.emplace_back(dofs[i] * rank + comp, dofs[j] * rank + comp, coeff * local(i, j));
  }
  SpMat A = detail::from_triplets(dm.total_dofs, dm.total_dofs, trips);
  return detail::constrain_if_needed(std::move(A), space);
}

/// 2 * coeff * (eps(u), eps(v)) with eps(v) = (grad v + grad v^T) / 2,
/// for rank-2 P2 (or P1 in tests).
inline SpMat assemble_epsilon_form(const SpaceDescriptor& space, double coeff) {
  if ((space.family != Family::P1 && space.family != Family::P2) || space.value_rank != 2)
    throw UnsupportedSpace("assemble_epsilon_form needs a rank-2 P1/P2 space");
  const Mesh& m = *space.mesh;
  DofMap dm = build_dofmap(space);
  const int nl = dm.num_local_scalar();
  const auto& rule = tri_rule(5);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(m.num_cells()) * nl * nl * 4);
  std::vector<int> dofs(nl);
  Eigen::MatrixXd local(2 * nl, 2 * nl);
  for (int c = 0; c < m.num_cells(); ++c) {
    CellGeom g(m, c);
    local.setZero();
    for (const auto& q : rule) {
      std::array<Vec2, 6> gref;
      if (space.family == Family::P1) {
        auto gr = ref::p1_grad();
        std::copy(gr.begin(), gr.end(), gref.begin());
      } else {
        gref = ref::p2_grad(q.x, q.y);
      }
      double w = q.w * std::abs(g.detJ);
      std::array<Vec2, 6> gphys;
      for (int i = 0; i < nl; ++i) gphys[i] = g.Jinv.transpose() * gref[i];
      // eps of basis (i, comp): 0.5 * (e_comp otimes grad N_i + transpose)
      for (int i = 0; i < nl; ++i) {
        for (int ci = 0; ci < 2; ++ci) {
          Eigen::Matrix2d ei = Eigen::Matrix2d::Zero();
          ei.row(ci) = gphys[i].transpose();
          Eigen::Matrix2d epsi = 0.5 * (ei + ei.transpose());
          for (int j = 0; j < nl; ++j) {
            for (int cj = 0; cj < 2; ++cj) {
              Eigen::Matrix2d ej = Eigen::Matrix2d::Zero();
              ej.row(cj) = gphys[j].transpose();
              Eigen::Matrix2d epsj = 0.5 * (ej + ej.transpose());
              local(2 * i + ci, 2 * j + cj) += w * 2.0 * coeff * epsi.cwiseProduct(epsj).sum();
            }
          }
        }
      }
    }
    dm.cell_scalar_dofs(c, dofs.data());
    for (int i = 0; i < nl; ++i)
      for (int ci = 0; ci < 2; ++ci)
        for (int j = 0; j < nl; ++j)
          for (int cj = 0; cj < 2; ++cj)
            trips.emplace_back(dofs[i] * 2 + ci, dofs[j] * 2 + cj, local(2 * i + ci, 2 * j + cj));
  }
  SpMat A = detail::from_triplets(dm.total_dofs, dm.total_dofs, trips);
  return detail::constrain_if_needed(std::move(A), space);
}

/// coeff * (u, v) for any family (RT0 uses the physical vector basis).
inline SpMat assemble_mass(const SpaceDescriptor& space, double coeff) {
  const Mesh& m = *space.mesh;
  DofMap dm = build_dofmap(space);
  const int nl = dm.num_local_scalar();
  const int rank = dm.value_rank;
  const auto& rule = tri_rule(5);
  std::vector<Triplet> trips;
  std::vector<int> dofs(nl);
  Eigen::MatrixXd local(nl, nl);
  for (int c = 0; c < m.num_cells(); ++c) {
    CellGeom g(m, c);
    local.setZero();
    if (space.family == Family::P0) {
      local(0, 0) = g.area();
    } else if (space.family == Family::RT0) {
      std::array<double, 3> elen, sgn;
      for (int k = 0; k < 3; ++k) {
        elen[k] = m.facet_length(m.cell_facets[c][k]);
        sgn[k] = dm.rt0_sign(c, k);
      }
      for (const auto& q : rule) {
        Vec2 x = g.map(q.x, q.y);
        double w = q.w * std::abs(g.detJ);
        std::array<Vec2, 3> phi;
        for (int k = 0; k < 3; ++k) phi[k] = sgn[k] * rt0::shape(g, k, x, elen[k]);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) local(i, j) += w * phi[i].dot(phi[j]);
      }
    } else {
      for (const auto& q : rule) {
        double w = q.w * std::abs(g.detJ);
        std::array<double, 6> N{};
        if (space.family == Family::P1) {
          auto n3 = ref::p1_shape(q.x, q.y);
          std::copy(n3.begin(), n3.end(), N.begin());
        } else {
          N = ref::p2_shape(q.x, q.y);
        }
        for (int i = 0; i < nl; ++i)
          for (int j = 0; j < nl; ++j) local(i, j) += w * N[i] * N[j];
      }
    }
    dm.cell_scalar_dofs(c, dofs.data());
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        for (int comp = 0; comp < rank; ++comp)
          trips.emplace_back(dofs[i] * rank + comp, dofs[j] * rank + comp, coeff * local(i, j));
  }
  SpMat A = detail::from_triplets(dm.total_dofs, dm.total_dofs, trips);
  return detail::constrain_if_needed(std::move(A), space);
}

/// (div u, q): rows are pressure dofs, columns velocity dofs.
/// Legal pairs: (P2 rank-2, P1), (P2 rank-2, P0), (RT0, P0).
inline SpMat assemble_div(const SpaceDescriptor& velocity, const SpaceDescriptor& pressure) {
  const bool p2v = velocity.family == Family::P2 && velocity.value_rank == 2;
  const bool rt0 = velocity.family == Family::RT0;
  const bool legal = (p2v && (pressure.family == Family::P1 || pressure.family == Family::P0)) ||
                     (rt0 && pressure.family == Family::P0);
  if (!legal) throw UnsupportedPair("assemble_div: unsupported velocity/pressure pair");
  if (velocity.mesh != pressure.mesh) throw UnsupportedPair("assemble_div: meshes differ");

  const Mesh& m = *velocity.mesh;
  DofMap dmv = build_dofmap(velocity);
  DofMap dmp = build_dofmap(pressure);
  std::vector<Triplet> trips;
  std::vector<int> vdofs(dmv.num_local_scalar()), pdofs(dmp.num_local_scalar());

  if (rt0) {
    // div of the RT0 facet basis is the constant sign * |e_k| / |cell|
    for (int c = 0; c < m.num_cells(); ++c) {
      dmv.cell_scalar_dofs(c, vdofs.data());
      dmp.cell_scalar_dofs(c, pdofs.data());
      for (int k = 0; k < 3; ++k) {
        double elen = m.facet_length(m.cell_facets[c][k]);
        trips.emplace_back(pdofs[0], vdofs[k], dmv.rt0_sign(c, k) * elen);
      }
    }
  } else {
    const auto& rule = tri_rule(5);
    const int nlv = dmv.num_local_scalar();
    const int nlp = dmp.num_local_scalar();
    for (int c = 0; c < m.num_cells(); ++c) {
      CellGeom g(m, c);
      Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nlp, 2 * nlv);
      for (const auto& q : rule) {
        double w = q.w * std::abs(g.detJ);
        auto gref = ref::p2_grad(q.x, q.y);
        std::array<double, 3> P{1.0, 0.0, 0.0};
        if (pressure.family == Family::P1) {
          auto p1 = ref::p1_shape(q.x, q.y);
          std::copy(p1.begin(), p1.end(), P.begin());
        }
        for (int i = 0; i < nlv; ++i) {
          Vec2 gi = g.Jinv.transpose() * gref[i];
          for (int j = 0; j < nlp; ++j)
            for (int comp = 0; comp < 2; ++comp)
              local(j, 2 * i + comp) += w * gi(comp) * P[j];
        }
      }
      dmv.cell_scalar_dofs(c, vdofs.data());
      dmp.cell_scalar_dofs(c, pdofs.data());
      for (int j = 0; j < nlp; ++j)
        for (int i = 0; i < nlv; ++i)
          for (int comp = 0; comp < 2; ++comp)
            trips.emplace_back(pdofs[j], vdofs[i] * 2 + comp, local(j, 2 * i + comp));
    }
  }
  return detail::from_triplets(dmp.total_dofs, dmv.total_dofs, trips);
}

/// coeff * ((u, v) + (div u, div v)) on RT0; the H(div) Riesz block.
inline SpMat assemble_hdiv_operator(const SpaceDescriptor& space, double coeff) {
  if (space.family != Family::RT0) throw UnsupportedSpace("assemble_hdiv_operator needs RT0");
  const Mesh& m = *space.mesh;
  SpaceDescriptor unconstrained = space;
  unconstrained.dirichlet_tags.clear();
  SpMat A = assemble_mass(unconstrained, coeff);

  DofMap dm = build_dofmap(space);
  std::vector<Triplet> trips;
  std::vector<int> dofs(3);
  for (int c = 0; c < m.num_cells(); ++c) {
    double area = m.cell_area(c);
    dm.cell_scalar_dofs(c, dofs.data());
    for (int k = 0; k < 3; ++k) {
      double dk = dm.rt0_sign(c, k) * m.facet_length(m.cell_facets[c][k]) / area;
      for (int l = 0; l < 3; ++l) {
        double dl = dm.rt0_sign(c, l) * m.facet_length(m.cell_facets[c][l]) / area;
        trips.emplace_back(dofs[k], dofs[l], coeff * dk * dl * area);
      }
    }
  }
  SpMat D = detail::from_triplets(dm.total_dofs, dm.total_dofs, trips);
  A += D;
  return detail::constrain_if_needed(std::move(A), space);
}

inline void dump_matrix(const SpMat& A, std::ostream& os) {
  for (int col = 0; col < A.outerSize(); ++col)
    for (SpMat::InnerIterator it(A, col); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace mpp
