#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mpprecond/block_operator.hpp"

#include <lapacke.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace mpp {

/// Deterministic uniform(-1,1) draws; the mapping from raw 64-bit output is
/// explicit so runs are bit-reproducible across standard libraries.
inline VecX seeded_uniform(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  VecX x(n);
  for (int i = 0; i < n; ++i) x(i) = 2.0 * ((gen() >> 11) * 0x1.0p-53) - 1.0;
  return x;
}

enum class FactorKind { LU, CHOLESKY };

struct FactorizationError : std::runtime_error {
  int pivot_index = -1;
  FactorizationError(const std::string& msg, int pivot = -1)
      : std::runtime_error(msg), pivot_index(pivot) {}
};

/// Direct factorization with a dense fallback below 500 dofs. LU uses partial
/// pivoting (sparse: COLAMD ordering); CHOLESKY requires an SPD input.
class Factorization {
 public:
  static constexpr int kDenseLimit = 500;

  Factorization(const SpMat& A, FactorKind kind) : kind_(kind), n_(static_cast<int>(A.rows())) {
    if (A.rows() != A.cols()) throw std::invalid_argument("factorize: matrix must be square");
    const bool dense = n_ < kDenseLimit;
    if (kind == FactorKind::LU) {
      if (dense) {
        dense_lu_ = std::make_shared<Eigen::PartialPivLU<MatX>>(MatX(A));
        const auto& U = dense_lu_->matrixLU();
        double dmax = 0.0;
        for (int i = 0; i < n_; ++i) dmax = std::max(dmax, std::abs(U(i, i)));
        for (int i = 0; i < n_; ++i)
          if (std::abs(U(i, i)) <= 1e-12 * dmax)
            throw FactorizationError("LU pivot below threshold", i);
      } else {
        sparse_lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
        sparse_lu_->compute(A);
        if (sparse_lu_->info() != Eigen::Success)
          throw FactorizationError("sparse LU factorization failed");
      }
    } else {
      if (dense) {
        dense_llt_ = std::make_shared<Eigen::LLT<MatX>>(MatX(A));
        if (dense_llt_->info() != Eigen::Success)
          throw NotPositiveDefinite("dense Cholesky: matrix not positive definite");
      } else {
        sparse_llt_ = std::make_shared<Eigen::SimplicialLLT<SpMat>>(A);
        if (sparse_llt_->info() != Eigen::Success)
          throw NotPositiveDefinite("sparse Cholesky: matrix not positive definite");
      }
    }
  }

  FactorKind kind() const { return kind_; }
  int rows() const { return n_; }

  VecX solve(const VecX& b) const {
    if (dense_lu_) return dense_lu_->solve(b);
    if (sparse_lu_) return sparse_lu_->solve(b);
    if (dense_llt_) return dense_llt_->solve(b);
    return sparse_llt_->solve(b);
  }

 private:
  FactorKind kind_;
  int n_;
  std::shared_ptr<Eigen::PartialPivLU<MatX>> dense_lu_;
  std::shared_ptr<Eigen::SparseLU<SpMat>> sparse_lu_;
  std::shared_ptr<Eigen::LLT<MatX>> dense_llt_;
  std::shared_ptr<Eigen::SimplicialLLT<SpMat>> sparse_llt_;
};

inline Factorization factorize(const SpMat& A, FactorKind kind) { return Factorization(A, kind); }

struct SolveReport {
  int iterations = 0;
  std::vector<double> residuals;  // relative preconditioned residual per iteration
  bool converged = false;
  bool breakdown = false;
  double wall_time = 0.0;
};

/// Preconditioned MinRes with convergence on the relative residual norm in
/// the N^{-1} inner product; x0 is drawn from seeded uniform(-1,1) per dof.
template <class Precond>
inline std::pair<VecX, SolveReport> minres(const SpMat& A, const Precond& M, const VecX& b,
                                           std::uint64_t seed, double tol = 1e-12,
                                           int max_iter = 2000) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  const int n = static_cast<int>(A.rows());
  VecX x = seeded_uniform(n, seed);

  VecX r1 = b - A * x;
  VecX y = M.solve(r1);
  double beta1 = r1.dot(y);
  if (beta1 < 0.0) throw NotPositiveDefinite("minres: preconditioner is not SPD");
  beta1 = std::sqrt(beta1);
  if (beta1 == 0.0) {
    rep.converged = true;
    return {x, rep};
  }

  double oldb = 0, beta = beta1, dbar = 0, epsln = 0, phibar = beta1, cs = -1, sn = 0;
  VecX w = VecX::Zero(n), w2 = VecX::Zero(n), r2 = r1;

  for (int itn = 1; itn <= max_iter; ++itn) {
    VecX v = y / beta;
    y = A * v;
    if (itn >= 2) y -= (beta / oldb) * r1;
    double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = M.solve(r2);
    oldb = beta;
    double beta2 = r2.dot(y);
    if (beta2 < 0.0) {
      rep.breakdown = true;
      break;
    }
    beta = std::sqrt(beta2);

    double oldeps = epsln;
    double delta = cs * dbar + sn * alfa;
    double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::max(std::sqrt(gbar * gbar + beta * beta), 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    double phi = cs * phibar;
    phibar = sn * phibar;

    VecX w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;

    rep.iterations = itn;
    double relres = phibar / beta1;
    rep.residuals.push_back(relres);
    if (relres <= tol) {
      rep.converged = true;
      break;
    }
    if (beta <= 1e-14 * beta1) {  // Krylov space exhausted
      rep.breakdown = relres > tol;
      rep.converged = relres <= tol;
      break;
    }
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {x, rep};
}

enum class SpectrumMethod { DENSE, LANCZOS };

struct SpectrumReport {
  std::vector<double> eigenvalues;  // full spectrum on the dense path
  double lambda_min_abs = 0.0;
  double lambda_max_abs = 0.0;
  double condition = 0.0;
  SpectrumMethod method = SpectrumMethod::DENSE;
  int iterations = 0;
};

struct SpectrumOptions {
  int dense_limit = 8000;
  double lanczos_tol = 1e-3;
  int lanczos_max_iter = 400;
  std::uint64_t seed = 20200501;
  bool deflate = false;
};

namespace detail {

struct LanczosRun {
  double theta_min = 0.0;
  double theta_max = 0.0;
  int iterations = 0;
};

/// Lanczos with full reorthogonalization for an operator self-adjoint in the
/// N inner product; returns converged extreme Ritz values.
inline LanczosRun lanczos_extremes(const std::function<VecX(const VecX&)>& op,
                                   const std::function<VecX(const VecX&)>& nmul, int n,
                                   std::uint64_t seed, double tol, int max_iter,
                                   const VecX* deflate_z = nullptr, const VecX* z_ncache = nullptr) {
  VecX nz;  // N * z, cached
  double znz = 1.0;
  auto project = [&](VecX& v) {
    if (!deflate_z) return;
    v -= (*deflate_z) * (nz.dot(v) / znz);
  };
  if (deflate_z) {
    nz = z_ncache ? *z_ncache : nmul(*deflate_z);
    znz = deflate_z->dot(nz);
  }

  VecX v = seeded_uniform(n, seed);
  project(v);
  VecX nv = nmul(v);
  double norm = std::sqrt(v.dot(nv));
  if (norm <= 0) throw std::runtime_error("lanczos: degenerate start vector");
  v /= norm;

  std::vector<VecX> V = {v};
  std::vector<double> alpha, beta;
  LanczosRun out;
  const int mmax = std::min(max_iter, n);
  double prev_min = 0, prev_max = 0;

  for (int j = 0; j < mmax; ++j) {
    VecX w = op(V[j]);
    project(w);
    VecX nw = nmul(w);
    double a = V[j].dot(nw);
    alpha.push_back(a);
    w -= a * V[j];
    if (j > 0) w -= beta[j - 1] * V[j - 1];
    for (int pass = 0; pass < 2; ++pass) {
      nw = nmul(w);
      for (size_t i = 0; i < V.size(); ++i) w -= (V[i].dot(nw)) * V[i];
    }
    nw = nmul(w);
    double b = std::sqrt(std::max(w.dot(nw), 0.0));
    out.iterations = j + 1;

    // Ritz values of the tridiagonal section
    const int m = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    out.theta_min = es.eigenvalues()(0);
    out.theta_max = es.eigenvalues()(m - 1);

    double scale = std::max(std::abs(out.theta_min), std::abs(out.theta_max));
    double res_min = b * std::abs(es.eigenvectors()(m - 1, 0));
    double res_max = b * std::abs(es.eigenvectors()(m - 1, m - 1));
    bool residual_ok = m >= 8 && res_min <= tol * scale && res_max <= tol * scale;
    bool stagnated = m >= 12 && std::abs(out.theta_min - prev_min) <= 0.1 * tol * scale &&
                     std::abs(out.theta_max - prev_max) <= 0.1 * tol * scale;
    prev_min = out.theta_min;
    prev_max = out.theta_max;
    if (residual_ok || stagnated) break;
    if (b <= 1e-12 * scale) break;  // invariant subspace, Ritz values exact

    beta.push_back(b);
    V.push_back(w / b);
  }
  return out;
}

inline MatX dense_matrix(const SpMat& A) { return MatX(A); }

}  // namespace detail

/// Spectral condition number of the pencil A x = lambda N x with N SPD.
/// Below opts.dense_limit dofs the whole spectrum is computed; above it two
/// Lanczos runs on N^{-1}A and A^{-1}N estimate the extreme magnitudes.
inline SpectrumReport condition_number(const SpMat& A, const BlockDiagonal& N,
                                       SpectrumOptions opts = {},
                                       const std::optional<VecX>& deflation = std::nullopt) {
  const int n = static_cast<int>(A.rows());
  SpectrumReport rep;
  const bool deflate = opts.deflate && deflation.has_value();

  if (n < opts.dense_limit) {
    rep.method = SpectrumMethod::DENSE;
    MatX Nd = detail::dense_matrix(N.monolithic());
    Eigen::VectorXd evals;
    if (!deflate) {
      MatX Ad = detail::dense_matrix(A);
      evals.resize(n);
      lapack_int info = LAPACKE_dsygvd(LAPACK_COL_MAJOR, 1, 'N', 'L', n, Ad.data(), n, Nd.data(),
                                       n, evals.data());
      if (info != 0) throw std::runtime_error("dsygvd failed, info = " + std::to_string(info));
    } else {
      // restrict the pencil to the N-orthogonal complement of z via a
      // Householder reflection in Cholesky coordinates
      Eigen::LLT<MatX> llt(Nd);
      if (llt.info() != Eigen::Success) throw NotPositiveDefinite("N not SPD in dense eigensolve");
      MatX L = llt.matrixL();
      MatX C = L.triangularView<Eigen::Lower>().solve(detail::dense_matrix(A));
      C = L.triangularView<Eigen::Lower>().solve(MatX(C.transpose()));
      C = 0.5 * (C + C.transpose());
      VecX u = L.transpose() * (*deflation);
      u(0) += (u(0) >= 0 ? 1.0 : -1.0) * u.norm();
      u.normalize();
      MatX H = MatX::Identity(n, n) - 2.0 * u * u.transpose();
      MatX Cp = H * C * H;
      MatX Csub = Cp.bottomRightCorner(n - 1, n - 1);
      Csub = 0.5 * (Csub + Csub.transpose());
      evals.resize(n - 1);
      lapack_int info =
          LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n - 1, Csub.data(), n - 1, evals.data());
      if (info != 0) throw std::runtime_error("dsyevd failed, info = " + std::to_string(info));
    }
    rep.eigenvalues.assign(evals.data(), evals.data() + evals.size());
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double ev : rep.eigenvalues) {
      lo = std::min(lo, std::abs(ev));
      hi = std::max(hi, std::abs(ev));
    }
    rep.lambda_min_abs = lo;
    rep.lambda_max_abs = hi;
  } else {
    rep.method = SpectrumMethod::LANCZOS;
    N.factorize();
    auto nmul = [&](const VecX& v) { return N.multiply(v); };

    std::optional<VecX> nz;
    const VecX* zptr = nullptr;
    if (deflate) {
      zptr = &deflation.value();
      nz = N.multiply(*zptr);
    }

    auto op_outer = [&](const VecX& v) { return N.solve(A * v); };
    auto run1 = detail::lanczos_extremes(op_outer, nmul, n, opts.seed, opts.lanczos_tol,
                                         opts.lanczos_max_iter, zptr, nz ? &*nz : nullptr);
    rep.lambda_max_abs = std::max(std::abs(run1.theta_min), std::abs(run1.theta_max));

    std::shared_ptr<Factorization> lu;
    std::shared_ptr<Eigen::SparseLU<SpMat>> bordered;
    if (!deflate) {
      lu = std::make_shared<Factorization>(A, FactorKind::LU);
    } else {
      // bordered system pins the deflated direction even when A is singular
      std::vector<Triplet> trips;
      for (int col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it)
          trips.emplace_back(it.row(), it.col(), it.value());
      for (int i = 0; i < n; ++i) {
        if ((*nz)(i) != 0.0) {
          trips.emplace_back(i, n, (*nz)(i));
          trips.emplace_back(n, i, (*nz)(i));
        }
      }
      SpMat Ab = detail::from_triplets(n + 1, n + 1, trips);
      bordered = std::make_shared<Eigen::SparseLU<SpMat>>();
      bordered->compute(Ab);
      if (bordered->info() != Eigen::Success)
        throw FactorizationError("bordered LU factorization failed");
    }
    auto op_inner = [&](const VecX& v) -> VecX {
      VecX rhs = N.multiply(v);
      if (!deflate) return lu->solve(rhs);
      VecX ext = VecX::Zero(n + 1);
      ext.head(n) = rhs;
      VecX sol = bordered->solve(ext);
      return sol.head(n);
    };
    auto run2 = detail::lanczos_extremes(op_inner, nmul, n, opts.seed + 1, opts.lanczos_tol,
                                         opts.lanczos_max_iter, zptr, nz ? &*nz : nullptr);
    double inv = std::max(std::abs(run2.theta_min), std::abs(run2.theta_max));
    if (inv <= 0) throw std::runtime_error("lanczos: inner spectral edge not found");
    rep.lambda_min_abs = 1.0 / inv;
    rep.iterations = run1.iterations + run2.iterations;
  }
  if (rep.lambda_min_abs <= 0) throw std::runtime_error("condition_number: singular pencil");
  rep.condition = rep.lambda_max_abs / rep.lambda_min_abs;
  return rep;
}

inline SpectrumReport condition_number(const SystemBundle& bundle, SpectrumOptions opts = {}) {
  return condition_number(bundle.A, bundle.N, opts, bundle.deflation);
}

}  // namespace mpp
