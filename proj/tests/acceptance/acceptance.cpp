// Acceptance suite: every criterion prints one [PASS]/[FAIL] line with the
// measured quantities; the exit code is the number of failed criteria.
// Individual criteria can be selected by number on the command line.

#include "mpprecond/experiments.hpp"
#include "mpprecond/solvers.hpp"
#include "mpprecond/systems.hpp"
#include "support/oracle.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <mutex>
#include <tuple>
#include <sstream>
#include <vector>

using namespace mpp;

namespace {

int g_jobs = 2;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v, const char* f = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double cond_of(const Problem& p, int dense_limit = 8000, bool deflate = false) {
  SpectrumOptions opts;
  opts.dense_limit = dense_limit;
  opts.deflate = deflate;
  return condition_number(p.bundle.A, p.bundle.N, opts, p.bundle.deflation).condition;
}

int iters_of(Problem& p, std::uint64_t seed = 1, int max_iter = 5000) {
  p.bundle.N.factorize();
  auto [x, rep] = minres(p.bundle.A, p.bundle.N, p.bundle.rhs, seed, 1e-12, max_iter);
  if (!rep.converged) return -1;
  return rep.iterations;
}

double within(double value, double target) { return std::abs(value - target) / target; }

// ----------------------------------------------------------------------------

Check criterion1() {
  Check c;
  ExperimentConfig cfg;
  cfg.problem = "darcy-stokes";
  cfg.mode = "dofs";
  cfg.h = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  std::ostringstream os;
  report_dofs(cfg, os);
  const std::vector<std::string> expected = {
      "problem,h,u_f,p_f,u_p,p_p,lambda,total",
      "darcy-stokes,0.125,1122,153,408,256,16,1955",
      "darcy-stokes,0.0625,4290,561,1584,1024,32,7491",
      "darcy-stokes,0.03125,16770,2145,6240,4096,64,29315",
      "darcy-stokes,0.015625,66306,8385,24768,16384,128,115971",
  };
  std::stringstream ss(os.str());
  std::string line;
  size_t i = 0;
  while (std::getline(ss, line) && i < expected.size()) {
    c.require(line == expected[i], "row " + std::to_string(i) + " mismatch: " + line);
    ++i;
  }
  c.require(i == expected.size(), "missing rows");
  c.note("reference dimension table exact for h=2^-3..2^-6");
  return c;
}

Check criterion2() {
  Check c;
  const std::vector<double> hs = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  const std::vector<double> printed = {3.47, 3.52, 3.53, 3.54, 3.54};
  const std::vector<double> Ks = {1.0, 1e-4, 1e-8};

  for (size_t i = 0; i < hs.size(); ++i) {
    std::vector<std::vector<double>> spectra;
    for (double K : Ks) {
      ParameterSet prm;
      prm.K = K;
      auto p = build_darcy_subproblem(prm, hs[i], FractionalFlavor::ZERO_TRACE_00);
      SpectrumOptions opts;
      opts.dense_limit = 4000;  // full spectra on the three coarsest levels
      auto rep = condition_number(p.bundle, opts);
      c.require(within(rep.condition, printed[i]) <= 0.05,
                "h=" + fmt(hs[i]) + " K=" + fmt(K) + " cond=" + fmt(rep.condition) +
                    " vs " + fmt(printed[i]));
      if (rep.method == SpectrumMethod::DENSE) {
        std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end());
        spectra.push_back(rep.eigenvalues);
      }
    }
    for (size_t k = 1; k < spectra.size(); ++k) {
      double worst = 0;
      for (size_t j = 0; j < spectra[0].size(); ++j)
        worst = std::max(worst, std::abs(spectra[k][j] - spectra[0][j]) /
                                    std::max(std::abs(spectra[0][j]), 1e-300));
      c.require(worst <= 1e-8, "spectrum K-drift " + fmt(worst) + " at h=" + fmt(hs[i]));
    }
  }
  c.note("reference conditions within 5%, full spectra K-invariant to 1e-8 on dense levels");
  return c;
}

Check criterion3() {
  Check c;
  const std::vector<double> hs = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  const std::vector<std::vector<double>> printed = {
      {10.19, 10.17, 10.17, 10.17, 10.17},  // mu = 1
      {13.45, 13.41, 13.40, 13.39, 13.39},  // mu = 1e-4
      {13.46, 13.41, 13.40, 13.39, 13.39},  // mu = 1e-8
  };
  const std::vector<double> mus = {1.0, 1e-4, 1e-8};
  for (size_t m = 0; m < mus.size(); ++m) {
    for (size_t i = 0; i < hs.size(); ++i) {
      ParameterSet prm;
      prm.mu = mus[m];
      auto p = build_stokes_subproblem(prm, hs[i], FractionalFlavor::FREE);
      double cv = cond_of(p);
      c.require(within(cv, printed[m][i]) <= 0.10, "free mu=" + fmt(mus[m]) + " h=" + fmt(hs[i]) +
                                                       " cond=" + fmt(cv));
    }
  }
  double prev = 0;
  ParameterSet prm;
  for (double h : hs) {
    auto p = build_stokes_subproblem(prm, h, FractionalFlavor::ZERO_TRACE_00);
    double cv = cond_of(p);
    c.require(cv > prev, "zero00 flavor not strictly growing at h=" + fmt(h));
    prev = cv;
  }
  c.note("reference conditions (free flavor) within 10%, zero00 flavor strictly growing (last " + fmt(prev) + ")");
  return c;
}

Check criterion4() {
  Check c;
  // free flavor: plateau value and mu-invariance
  std::vector<double> plateau;
  for (double h : {0.03125, 0.015625}) {
    for (double mu : {1.0, 1e-8}) {
      ParameterSet prm;
      prm.mu = mu;
      auto p = build_navier_subproblem(prm, h, VectorMultiplierPrecond::FREE);
      double cv = cond_of(p);
      c.require(within(cv, 26.95) <= 0.10,
                "free mu=" + fmt(mu) + " h=" + fmt(h) + " cond=" + fmt(cv));
      plateau.push_back(cv);
    }
  }
  c.require(std::abs(plateau[0] - plateau[1]) / plateau[0] <= 0.01, "mu drift at h=2^-5");
  c.require(std::abs(plateau[2] - plateau[3]) / plateau[2] <= 0.01, "mu drift at h=2^-6");
  {
    ParameterSet prm;
    prm.mu = 1e-4;
    double cv = cond_of(build_navier_subproblem(prm, 0.03125, VectorMultiplierPrecond::FREE));
    c.require(std::abs(cv - plateau[0]) / plateau[0] <= 0.01, "mu=1e-4 drift at h=2^-5");
  }
  // wrong flavors grow monotonically under refinement
  ParameterSet prm;
  for (auto v : {VectorMultiplierPrecond::ZERO00, VectorMultiplierPrecond::N0,
                 VectorMultiplierPrecond::T0}) {
    double prev = 0;
    for (double h : {0.25, 0.125, 0.0625, 0.03125}) {
      double cv = cond_of(build_navier_subproblem(prm, h, v));
      c.require(cv > prev, "variant not strictly growing at h=" + fmt(h));
      prev = cv;
    }
  }
  c.note("plateau " + fmt(plateau[3]) + " vs reference 26.95, mu-invariant, 00/n0/t0 growing");
  return c;
}

Check criterion5() {
  Check c;
  for (double ratio : {1e6, 1.0, 1e-6}) {
    ParameterSet prm;
    prm.kappa2 = ratio;
    auto p = build_poisson_interface(prm, 0.03125, PoissonVariant::ND, PoissonVariant::ND);
    double cv = cond_of(p);
    c.require(within(cv, 5.46) <= 0.10, "nd precond ratio=" + fmt(ratio) + " cond=" + fmt(cv));
  }
  ParameterSet prm;
  prm.kappa2 = 1e-6;
  double c3 = cond_of(build_poisson_interface(prm, 0.125, PoissonVariant::ND, PoissonVariant::NN));
  double c6 = cond_of(build_poisson_interface(prm, 0.015625, PoissonVariant::ND, PoissonVariant::NN));
  c.require(c6 / c3 >= 1.5, "nn precond growth " + fmt(c3) + " -> " + fmt(c6));
  c.note("reference plateau within 10% at h=2^-5; nn growth factor " + fmt(c6 / c3));
  return c;
}

Check criterion6() {
  Check c;
  // naive preconditioner blows up in h at small K
  ParameterSet pk;
  pk.K = 1e-6;
  auto pn3 = build_darcy_stokes(pk, 0.125, DarcyStokesPrecond::NAIVE, BcMode::ALL_DIRICHLET);
  auto pn6 = build_darcy_stokes(pk, 0.015625, DarcyStokesPrecond::NAIVE, BcMode::ALL_DIRICHLET);
  int i3 = iters_of(pn3), i6 = iters_of(pn6);
  c.require(i3 > 0 && i6 > 0, "naive runs did not converge");
  c.require(i6 >= 3 * i3, "naive growth " + std::to_string(i3) + " -> " + std::to_string(i6));

  // robust preconditioner: full parameter sweep
  const std::vector<double> pars = {1.0, 1e-4, 1e-8};
  const std::vector<double> alphas = {1.0, 1e-2, 1e-4, 1e-6};
  struct Point {
    double h, mu, K, alpha;
  };
  std::vector<Point> iter_pts, cond_pts;
  for (double h : {0.125, 0.0625, 0.03125, 0.015625})
    for (double mu : pars)
      for (double K : pars)
        for (double a : alphas) iter_pts.push_back({h, mu, K, a});
  for (double h : {0.25, 0.125, 0.0625})
    for (double mu : pars)
      for (double K : pars)
        for (double a : alphas) cond_pts.push_back({h, mu, K, a});

  std::vector<int> iters(iter_pts.size());
  std::vector<double> conds(cond_pts.size());
  std::vector<int> unit_iters;
  std::mutex mu_lock;
  detail::run_parallel(g_jobs, static_cast<int>(iter_pts.size()), [&](int i) {
    ParameterSet prm;
    prm.mu = iter_pts[i].mu;
    prm.K = iter_pts[i].K;
    prm.alpha_bjs = iter_pts[i].alpha;
    auto p = build_darcy_stokes(prm, iter_pts[i].h, DarcyStokesPrecond::ROBUST, BcMode::MIXED);
    iters[i] = iters_of(p);
    if (prm.mu == 1.0 && prm.K == 1.0 && prm.alpha_bjs == 1.0) {
      std::lock_guard<std::mutex> g(mu_lock);
      unit_iters.push_back(iters[i]);
    }
  });
  detail::run_parallel(g_jobs, static_cast<int>(cond_pts.size()), [&](int i) {
    ParameterSet prm;
    prm.mu = cond_pts[i].mu;
    prm.K = cond_pts[i].K;
    prm.alpha_bjs = cond_pts[i].alpha;
    auto p = build_darcy_stokes(prm, cond_pts[i].h, DarcyStokesPrecond::ROBUST, BcMode::MIXED);
    conds[i] = cond_of(p, 1000);
  });

  int imin = *std::min_element(iters.begin(), iters.end());
  int imax = *std::max_element(iters.begin(), iters.end());
  c.require(imin > 0, "a robust run did not converge");
  c.require(imax <= 2 * imin,
            "robust iteration spread " + std::to_string(imin) + ".." + std::to_string(imax));
  // boundedness under refinement, per parameter combination (the figure's
  // curves are flat in h; across the parameter box the plateau level varies)
  std::map<std::tuple<double, double, double>, std::pair<double, double>> by_param;
  for (size_t i = 0; i < cond_pts.size(); ++i) {
    auto key = std::make_tuple(cond_pts[i].mu, cond_pts[i].K, cond_pts[i].alpha);
    auto it = by_param.find(key);
    if (it == by_param.end()) by_param[key] = {conds[i], conds[i]};
    else {
      it->second.first = std::min(it->second.first, conds[i]);
      it->second.second = std::max(it->second.second, conds[i]);
    }
  }
  for (const auto& [key, mm] : by_param)
    c.require(mm.second <= 2 * mm.first,
              "condition not h-bounded: " + fmt(mm.first) + ".." + fmt(mm.second));
  double cmin = *std::min_element(conds.begin(), conds.end());
  double cmax = *std::max_element(conds.begin(), conds.end());
  for (int it : unit_iters)
    c.require(within(static_cast<double>(it), 50.0) <= 0.15,
              "unit-parameter iterations " + std::to_string(it) + " vs 50 +-15%");
  c.note("naive " + std::to_string(i3) + "->" + std::to_string(i6) + " (x" +
         fmt(double(i6) / i3, "%.2f") + "); robust iters [" + std::to_string(imin) + "," +
         std::to_string(imax) + "], cond [" + fmt(cmin) + "," + fmt(cmax) + "]");
  return c;
}

Check criterion7() {
  Check c;
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> mus = {1.0, 1e-4, 1e-8};
  const std::vector<double> etas = {1.0, 1e3, 1e6, inf};
  const std::vector<double> ks = {1.0, 1e-2, 1e-4, 1e-6};

  struct Point {
    double h, mu, eta, k;
  };
  std::vector<Point> pts;
  for (double h : {0.5, 0.125})  // full grid on the dense levels
    for (double mu : mus)
      for (double eta : etas)
        for (double k : ks) pts.push_back({h, mu, eta, k});
  for (double h : {0.0625, 0.03125}) {  // parameter-extreme corners at the larger sizes
    for (double mu : {1.0, 1e-8})
      for (double eta : {1.0, inf})
        for (double k : {1.0, 1e-6}) pts.push_back({h, mu, eta, k});
    pts.push_back({h, 1e-4, 1e3, 1e-2});
  }

  std::vector<double> conds(pts.size());
  detail::run_parallel(g_jobs, static_cast<int>(pts.size()), [&](int i) {
    ParameterSet prm;
    prm.mu = pts[i].mu;
    prm.eta = pts[i].eta;
    prm.k = pts[i].k;
    auto p = build_stokes_navier(prm, pts[i].h, BcMode::MIXED);
    conds[i] = cond_of(p, 4000);
  });
  // bounded under refinement per parameter combination (figure curves in h)
  std::map<std::tuple<double, double, double>, std::pair<double, double>> by_param;
  for (size_t i = 0; i < pts.size(); ++i) {
    auto key = std::make_tuple(pts[i].mu, pts[i].eta, pts[i].k);
    auto it = by_param.find(key);
    if (it == by_param.end()) by_param[key] = {conds[i], conds[i]};
    else {
      it->second.first = std::min(it->second.first, conds[i]);
      it->second.second = std::max(it->second.second, conds[i]);
    }
  }
  for (const auto& [key, mm] : by_param)
    c.require(mm.second <= 3 * mm.first,
              "mixed condition not h-bounded: " + fmt(mm.first) + ".." + fmt(mm.second));
  double cmin = *std::min_element(conds.begin(), conds.end());
  double cmax = *std::max_element(conds.begin(), conds.end());

  // Dirichlet boundary conditions: eta blow-up without deflation, cured by it
  ParameterSet prm;
  prm.eta = 1e3;
  auto pd = build_stokes_navier(prm, 0.5, BcMode::ALL_DIRICHLET);
  double raw = cond_of(pd);
  c.require(raw >= 5893.0 / 2 && raw <= 5893.0 * 2, "eta=1e3 raw condition " + fmt(raw));
  double dmax = 0;
  for (double eta : etas) {
    ParameterSet pe;
    pe.eta = eta;
    auto p = build_stokes_navier(pe, 0.5, BcMode::ALL_DIRICHLET);
    dmax = std::max(dmax, cond_of(p, 8000, true));
  }
  c.require(dmax <= 60.0, "deflated condition not bounded: " + fmt(dmax));
  c.note("mixed cond [" + fmt(cmin) + "," + fmt(cmax) + "]; dirichlet raw " + fmt(raw) +
         ", deflated max " + fmt(dmax));
  return c;
}

Check criterion8() {
  Check c;
  // fractional identities on the 8-segment interface
  InterfaceMesh im;
  im.ys.resize(9);
  for (int j = 0; j <= 8; ++j) im.ys[j] = j / 8.0;
  InterfaceSpace sp{Family::P0, 1, &im};
  double w = 1.7;
  Eigen::MatrixXd M = Eigen::MatrixXd(interface_p0_mass_diagonal(im).asDiagonal());
  auto H0 = build_fractional(sp, {0.0, FractionalFlavor::FREE, w});
  c.require((H0.matrix - w * M).cwiseAbs().maxCoeff() <= 1e-10, "H(0) != w M");
  for (auto fl : {FractionalFlavor::FREE, FractionalFlavor::ZERO_TRACE_00}) {
    Eigen::MatrixXd A = Eigen::MatrixXd(assemble_interface_laplacian(sp, fl)) + M;
    auto H1 = build_fractional(sp, {1.0 - 1e-15, fl, w});
    c.require((H1.matrix - w * A).cwiseAbs().maxCoeff() <= 1e-10, "H(1) != w A");
  }
  {
    Eigen::MatrixXd Minv = Eigen::MatrixXd(interface_p0_mass_diagonal(im).cwiseInverse().asDiagonal());
    auto Ha = build_fractional(sp, {0.5, FractionalFlavor::FREE, w});
    auto Hb = build_fractional(sp, {-0.25, FractionalFlavor::FREE, w});
    auto Hc = build_fractional(sp, {0.25, FractionalFlavor::FREE, w});
    c.require((Ha.matrix * Minv * Hb.matrix - w * Hc.matrix).cwiseAbs().maxCoeff() <= 1e-10,
              "composition identity");
  }

  // every assembled system: symmetric operator, Cholesky-factorizable N
  ParameterSet prm;
  prm.mu = 1e-3;
  prm.K = 1e-5;
  prm.eta = 1e4;
  prm.k = 1e-2;
  std::vector<Problem> probs;
  probs.push_back(build_poisson_interface(prm, 0.25, PoissonVariant::ND, PoissonVariant::ND));
  probs.push_back(build_stokes_subproblem(prm, 0.25, FractionalFlavor::FREE));
  probs.push_back(build_darcy_subproblem(prm, 0.25, FractionalFlavor::ZERO_TRACE_00));
  probs.push_back(build_navier_subproblem(prm, 0.25, VectorMultiplierPrecond::FREE));
  probs.push_back(build_darcy_stokes(prm, 0.25, DarcyStokesPrecond::ROBUST, BcMode::MIXED));
  probs.push_back(build_darcy_stokes(prm, 0.25, DarcyStokesPrecond::ROBUST, BcMode::ALL_DIRICHLET));
  probs.push_back(build_stokes_navier(prm, 0.25, BcMode::MIXED));
  probs.push_back(build_stokes_navier(prm, 0.25, BcMode::ALL_DIRICHLET));
  for (const auto& p : probs) {
    double scale = 0, defect = 0;
    SpMat D = SpMat(p.bundle.A - SpMat(p.bundle.A.transpose()));
    for (int col = 0; col < p.bundle.A.outerSize(); ++col)
      for (SpMat::InnerIterator it(p.bundle.A, col); it; ++it)
        scale = std::max(scale, std::abs(it.value()));
    for (int col = 0; col < D.outerSize(); ++col)
      for (SpMat::InnerIterator it(D, col); it; ++it) defect = std::max(defect, std::abs(it.value()));
    c.require(defect <= 1e-13 * scale, p.id + ": operator asymmetry");
    try {
      p.bundle.N.factorize();
    } catch (const std::exception& e) {
      c.require(false, p.id + ": preconditioner Cholesky failed");
    }
  }

  // minres residual monotonicity
  {
    auto p = build_darcy_stokes(prm, 0.25, DarcyStokesPrecond::ROBUST, BcMode::MIXED);
    p.bundle.N.factorize();
    auto [x, rep] = minres(p.bundle.A, p.bundle.N, p.bundle.rhs, 11, 1e-12, 2000);
    c.require(rep.converged, "minres did not converge");
    for (size_t i = 1; i < rep.residuals.size(); ++i)
      c.require(rep.residuals[i] <= rep.residuals[i - 1] * (1 + 1e-12), "residual not monotone");
  }

  // RT0 normal-trace closed form and epsilon-form rigid motions
  {
    CoupledMesh cm = build_coupled_mesh(0.25, CoupledGeometry::DARCY_STOKES);
    InterfaceSpace ifs{Family::P0, 1, &cm.interface};
    SpMat Tn = assemble_normal_trace(rt0_space(cm.porous), ifs, 1.0);
    auto seg_facet = match_interface_facets(cm.porous, cm.interface);
    for (int s = 0; s < cm.interface.num_segments(); ++s) {
      c.require(std::abs(Tn.coeff(s, seg_facet[s]) - cm.porous.facet_length(seg_facet[s])) <= 1e-14,
                "RT0 normal trace entry");
      c.require(Eigen::RowVectorXd(Tn.row(s)).cwiseAbs().sum() -
                        cm.porous.facet_length(seg_facet[s]) <=
                    1e-14,
                "RT0 normal trace off-diagonal");
    }
    auto vs = vector_space(cm.fluid, Family::P2);
    SpMat E = assemble_epsilon_form(vs, 1.0);
    Eigen::VectorXd rot = interpolate(vs, std::function<Vec2(const Vec2&)>([](const Vec2& x) {
                                        return Vec2(-x.y(), x.x());
                                      }));
    c.require((E * rot).cwiseAbs().maxCoeff() <= 1e-12, "rigid rotation not in eps kernel");
  }

  // assembled forms against the dense quadrature oracle on a small mesh
  {
    Mesh m = build_rect_mesh(0, 1, 0, 0.5, 2, 1);
    auto diff = [](const SpMat& A, const Eigen::MatrixXd& O) {
      return (Eigen::MatrixXd(A) - O).cwiseAbs().maxCoeff();
    };
    c.require(diff(assemble_stiffness(scalar_space(m, Family::P2), 1.0),
                   oracle::dense_form(oracle::Form::STIFFNESS, Family::P2, 1, m, 1.0)) <= 1e-12,
              "stiffness oracle");
    c.require(diff(assemble_epsilon_form(vector_space(m, Family::P2), 1.0),
                   oracle::dense_form(oracle::Form::EPS, Family::P2, 2, m, 1.0)) <= 1e-12,
              "epsilon oracle");
    c.require(diff(assemble_mass(rt0_space(m), 1.0),
                   oracle::dense_form(oracle::Form::MASS, Family::RT0, 1, m, 1.0)) <= 1e-12,
              "RT0 mass oracle");
    c.require(diff(assemble_hdiv_operator(rt0_space(m), 1.0),
                   oracle::dense_form(oracle::Form::DIVDIV, Family::RT0, 1, m, 1.0)) <= 1e-12,
              "hdiv oracle");
    c.require((Eigen::MatrixXd(assemble_div(rt0_space(m), scalar_space(m, Family::P0))) -
               oracle::dense_div(Family::RT0, Family::P0, m))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-12,
              "div oracle");
  }
  c.note("fractional identities, symmetry, SPD, monotone MinRes, closed forms, oracle agreement");
  return c;
}

Check criterion9() {
  Check c;
  const std::vector<double> hs = {0.5, 0.25, 0.125, 0.0625};
  auto slopes = [&](const std::string& id, const std::string& precond) {
    std::map<std::string, std::vector<double>> hist;
    ParameterSet prm;
    for (double h : hs) {
      Problem p = build_problem(id, prm, h, precond, "unit");
      Factorization lu(p.bundle.A, FactorKind::LU);
      VecX x = lu.solve(p.bundle.rhs);
      for (const auto& [name, err] : energy_error(p, x)) hist[name].push_back(err);
    }
    std::map<std::string, double> out;
    for (const auto& [name, errs] : hist) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int n = static_cast<int>(hs.size());
      for (int i = 0; i < n; ++i) {
        double lx = std::log(hs[i]), ly = std::log(errs[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      out[name] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return out;
  };

  auto st = slopes("stokes-sub", "free");
  auto da = slopes("darcy-sub", "zero00");
  auto na = slopes("navier-sub", "free");
  auto check_slope = [&](const char* label, double got, double want) {
    c.require(std::abs(got - want) <= 0.2,
              std::string(label) + " slope " + fmt(got, "%.2f") + " vs " + fmt(want, "%.1f") +
                  " +-0.2");
  };
  check_slope("stokes velocity", st["u"], 2.0);
  check_slope("stokes pressure", st["p"], 2.0);
  check_slope("stokes multiplier", st["lambda"], 2.0);
  check_slope("darcy flux", da["u"], 1.0);
  check_slope("darcy pressure", da["p"], 1.0);
  check_slope("navier velocity", na["u"], 2.0);
  check_slope("navier multiplier", na["lambda"], 1.0);
  c.note("slopes: stokes u/p/l " + fmt(st["u"], "%.2f") + "/" + fmt(st["p"], "%.2f") + "/" +
         fmt(st["lambda"], "%.2f") + ", darcy u/p " + fmt(da["u"], "%.2f") + "/" +
         fmt(da["p"], "%.2f") + ", navier u/l " + fmt(na["u"], "%.2f") + "/" +
         fmt(na["lambda"], "%.2f") +
         " (the navier multiplier superconverges here; the target encodes the reference results, see README)");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
  std::vector<std::pair<int, std::function<Check()>>> all = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strncmp(argv[i], "--jobs=", 7) == 0) {
      g_jobs = std::atoi(argv[i] + 7);
      continue;
    }
    selected.push_back(std::atoi(argv[i]));
  }
  int failures = 0;
  for (auto& [num, fn] : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), num) == selected.end())
      continue;
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d (%.1fs): %s\n", c.ok ? "PASS" : "FAIL", num, dt,
                c.detail.c_str());
    std::fflush(stdout);
    failures += c.ok ? 0 : 1;
  }
  return failures;
}
