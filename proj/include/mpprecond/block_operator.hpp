#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mpprecond/assembly.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpp {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Physical and experimental parameters. D is always derived, never stored.
struct ParameterSet {
  double mu = 1.0;        // fluid viscosity
  double K = 1.0;         // hydraulic conductivity
  double alpha_bjs = 1.0; // Beavers-Joseph-Saffman coefficient
  double eta = 1.0;       // second Lame / penalty parameter, may be +inf
  double k = 1.0;         // time-step coupling weight
  double kappa1 = 1.0;    // left Poisson conductivity
  double kappa2 = 1.0;    // right Poisson conductivity

  double D() const { return alpha_bjs * std::sqrt(mu / K); }
  bool eta_infinite() const { return std::isinf(eta); }

  void validate() const {
    if (!(mu > 0) || !(K > 0) || !(alpha_bjs >= 0) || !(eta > 0) || !(k > 0) || !(kappa1 > 0) ||
        !(kappa2 > 0))
      throw std::invalid_argument("parameters must be positive");
  }
};

struct FieldLayout {
  std::vector<std::string> names;
  std::vector<int> sizes;
  std::vector<int> offsets;
  int total = 0;

  void add(const std::string& name, int size) {
    names.push_back(name);
    sizes.push_back(size);
    offsets.push_back(total);
    total += size;
  }
  int count() const { return static_cast<int>(names.size()); }
  int index(const std::string& name) const {
    for (int i = 0; i < count(); ++i)
      if (names[i] == name) return i;
    throw std::invalid_argument("unknown field: " + name);
  }
  Eigen::VectorBlock<VecX> field(VecX& x, int i) const { return x.segment(offsets[i], sizes[i]); }
};

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One diagonal block of the Gram operator N; fractional multiplier blocks
/// are dense, everything else sparse.
struct DiagonalBlock {
  std::string name;
  SpMat sparse;
  MatX dense;

  bool is_dense() const { return dense.size() > 0; }
  int rows() const { return is_dense() ? static_cast<int>(dense.rows()) : static_cast<int>(sparse.rows()); }

  static DiagonalBlock from_sparse(std::string name, SpMat A) {
    return {std::move(name), std::move(A), {}};
  }
  static DiagonalBlock from_dense(std::string name, MatX A) {
    return {std::move(name), {}, std::move(A)};
  }
};

/// Block-diagonal SPD operator N with cached Cholesky factorizations; the
/// Riesz-map preconditioner action is solve(), the norm action multiply().
class BlockDiagonal {
 public:
  BlockDiagonal() = default;
  BlockDiagonal(FieldLayout layout, std::vector<DiagonalBlock> blocks)
      : layout_(std::move(layout)), blocks_(std::move(blocks)) {
    if (layout_.count() != static_cast<int>(blocks_.size()))
      throw std::invalid_argument("one diagonal block per field required");
    for (int i = 0; i < layout_.count(); ++i)
      if (blocks_[i].rows() != layout_.sizes[i])
        throw std::invalid_argument("block size mismatch for field " + layout_.names[i]);
  }

  const FieldLayout& layout() const { return layout_; }
  const std::vector<DiagonalBlock>& blocks() const { return blocks_; }

  /// Cholesky of every block; throws NotPositiveDefinite if any block fails.
  void factorize() const {
    if (!sparse_chol_.empty() || !dense_chol_.empty()) return;
    sparse_chol_.resize(blocks_.size());
    dense_chol_.resize(blocks_.size());
    for (size_t i = 0; i < blocks_.size(); ++i) {
      if (blocks_[i].is_dense()) {
        dense_chol_[i] = std::make_shared<Eigen::LLT<MatX>>(blocks_[i].dense);
        if (dense_chol_[i]->info() != Eigen::Success)
          throw NotPositiveDefinite("dense block not SPD: " + blocks_[i].name);
      } else {
        sparse_chol_[i] = std::make_shared<Eigen::SimplicialLLT<SpMat>>(blocks_[i].sparse);
        if (sparse_chol_[i]->info() != Eigen::Success)
          throw NotPositiveDefinite("sparse block not SPD: " + blocks_[i].name);
      }
    }
  }

  VecX solve(const VecX& x) const {
    factorize();
    VecX y(x.size());
    for (size_t i = 0; i < blocks_.size(); ++i) {
      auto seg = x.segment(layout_.offsets[i], layout_.sizes[i]);
      if (blocks_[i].is_dense())
        y.segment(layout_.offsets[i], layout_.sizes[i]) = dense_chol_[i]->solve(seg);
      else
        y.segment(layout_.offsets[i], layout_.sizes[i]) = sparse_chol_[i]->solve(seg);
    }
    return y;
  }

  VecX multiply(const VecX& x) const {
    VecX y(x.size());
    for (size_t i = 0; i < blocks_.size(); ++i) {
      auto seg = x.segment(layout_.offsets[i], layout_.sizes[i]);
      if (blocks_[i].is_dense())
        y.segment(layout_.offsets[i], layout_.sizes[i]) = blocks_[i].dense * seg;
      else
        y.segment(layout_.offsets[i], layout_.sizes[i]) = blocks_[i].sparse * seg;
    }
    return y;
  }

  SpMat monolithic() const {
    std::vector<Triplet> trips;
    for (size_t i = 0; i < blocks_.size(); ++i) {
      int off = layout_.offsets[i];
      if (blocks_[i].is_dense()) {
        const MatX& D = blocks_[i].dense;
        for (int r = 0; r < D.rows(); ++r)
          for (int c = 0; c < D.cols(); ++c)
            if (D(r, c) != 0.0) trips.emplace_back(off + r, off + c, D(r, c));
      } else {
        for (int col = 0; col < blocks_[i].sparse.outerSize(); ++col)
          for (SpMat::InnerIterator it(blocks_[i].sparse, col); it; ++it)
            trips.emplace_back(off + it.row(), off + it.col(), it.value());
      }
    }
    return detail::from_triplets(layout_.total, layout_.total, trips);
  }

 private:
  FieldLayout layout_;
  std::vector<DiagonalBlock> blocks_;
  mutable std::vector<std::shared_ptr<Eigen::SimplicialLLT<SpMat>>> sparse_chol_;
  mutable std::vector<std::shared_ptr<Eigen::LLT<MatX>>> dense_chol_;
};

/// Square block matrix addressed by (field-row, field-col) with symmetric
/// Dirichlet elimination across all blocks.
class BlockSystem {
 public:
  explicit BlockSystem(FieldLayout layout) : layout_(std::move(layout)) {}

  const FieldLayout& layout() const { return layout_; }

  void set_block(const std::string& row, const std::string& col, SpMat M) {
    int i = layout_.index(row), j = layout_.index(col);
    if (M.rows() != layout_.sizes[i] || M.cols() != layout_.sizes[j])
      throw std::invalid_argument("block dimensions do not match fields " + row + "," + col);
    blocks_[{i, j}] = std::move(M);
  }

  /// Insert M at (row, col) and its transpose at (col, row).
  void set_block_sym(const std::string& row, const std::string& col, const SpMat& M) {
    set_block(row, col, M);
    set_block(col, row, SpMat(M.transpose()));
  }

  bool has_block(const std::string& row, const std::string& col) const {
    return blocks_.count({layout_.index(row), layout_.index(col)}) > 0;
  }

  /// Register Dirichlet dofs (field-local numbering) and boundary values.
  void constrain(const std::string& field, const std::vector<int>& dofs, const VecX& values) {
    int i = layout_.index(field);
    auto& entry = constraints_[i];
    for (size_t kk = 0; kk < dofs.size(); ++kk) entry[dofs[kk]] = values(static_cast<int>(kk));
  }

  /// Monolithic matrix with symmetric elimination (unit diagonal) applied;
  /// rhs is updated in place so constrained dofs solve to their values.
  SpMat assemble(VecX& rhs) const {
    std::vector<char> mask(layout_.total, 0);
    VecX bc = VecX::Zero(layout_.total);
    for (const auto& [field, cmap] : constraints_) {
      for (const auto& [dof, val] : cmap) {
        int g = layout_.offsets[field] + dof;
        mask[g] = 1;
        bc(g) = val;
      }
    }
    std::vector<Triplet> trips;
    for (const auto& [key, M] : blocks_) {
      int roff = layout_.offsets[key.first], coff = layout_.offsets[key.second];
      for (int col = 0; col < M.outerSize(); ++col) {
        for (SpMat::InnerIterator it(M, col); it; ++it) {
          int i = roff + static_cast<int>(it.row());
          int j = coff + static_cast<int>(it.col());
          if (mask[i] || mask[j]) {
            if (!mask[i] && mask[j]) rhs(i) -= it.value() * bc(j);
            continue;
          }
          trips.emplace_back(i, j, it.value());
        }
      }
    }
    for (int g = 0; g < layout_.total; ++g) {
      if (!mask[g]) continue;
      trips.emplace_back(g, g, 1.0);
      rhs(g) = bc(g);
    }
    return detail::from_triplets(layout_.total, layout_.total, trips);
  }

  /// Local-to-global list of constrained dofs of one field.
  std::vector<int> constrained_dofs(const std::string& field) const {
    std::vector<int> out;
    auto it = constraints_.find(layout_.index(field));
    if (it == constraints_.end()) return out;
    for (const auto& [dof, val] : it->second) out.push_back(dof);
    return out;
  }

 private:
  FieldLayout layout_;
  std::map<std::pair<int, int>, SpMat> blocks_;
  std::map<int, std::map<int, double>> constraints_;
};

/// A ready-to-solve coupled system: operator, Gram matrix N of the
/// block-diagonal Riesz preconditioner, right-hand side, and optionally the
/// near-nullspace vector used for deflation.
struct SystemBundle {
  FieldLayout layout;
  SpMat A;
  BlockDiagonal N;
  VecX rhs;
  std::optional<VecX> deflation;

  int dofs() const { return layout.total; }
};

}  // namespace mpp
