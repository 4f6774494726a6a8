#pragma once

#include "mpprecond/solvers.hpp"
#include "mpprecond/systems.hpp"

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mpp {

struct ExperimentConfig {
  std::string problem;
  std::string mode = "cond";  // solve | cond | mms | dofs | time
  std::vector<double> h;
  std::vector<double> mu{1.0};
  std::vector<double> K{1.0};
  std::vector<double> alpha{1.0};
  std::vector<double> eta{1.0};
  std::vector<double> k{1.0};
  std::vector<double> kappa_ratio{1.0};
  std::string precond;  // empty = problem default
  std::string domain = "unit";
  std::uint64_t seed = 1;
  double tol = 1e-12;
  int max_iter = 2000;
  int jobs = 1;
  int dense_eig_limit = 8000;
  bool deflate = false;
  bool plot_data = false;
  std::string mms_fields = "trig";  // trig | polynomial (exact-in-space patch data)
  std::string out = "-";

  void validate() const {
    static const std::vector<std::string> problems = {
        "poisson-nd",   "poisson-dd",       "poisson-nn",
        "darcy-stokes", "darcy-stokes-dirichlet", "stokes-sub",
        "darcy-sub",    "navier-sub",       "stokes-navier",
        "stokes-navier-dirichlet"};
    bool known = false;
    for (const auto& p : problems) known |= p == problem;
    if (!known && mode != "time") throw std::invalid_argument("unknown problem id: " + problem);
    if (h.empty()) throw std::invalid_argument("empty h grid");
    if (mu.empty() || K.empty() || alpha.empty() || eta.empty() || k.empty() || kappa_ratio.empty())
      throw std::invalid_argument("empty parameter grid");
    if (mode != "solve" && mode != "cond" && mode != "mms" && mode != "dofs" && mode != "time")
      throw std::invalid_argument("unknown mode: " + mode);
  }
};

namespace detail {

inline double parse_h_token(const std::string& tok) {
  auto caret = tok.find("^");
  if (caret != std::string::npos) {
    double base = std::stod(tok.substr(0, caret));
    double expo = std::stod(tok.substr(caret + 1));
    return std::pow(base, expo);
  }
  return std::stod(tok);
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "inf") out.push_back(std::numeric_limits<double>::infinity());
    else out.push_back(parse_h_token(tok));
  }
  return out;
}

inline std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string default_precond(const std::string& problem) {
  if (problem == "poisson-nd") return "nd";
  if (problem == "poisson-dd") return "dd";
  if (problem == "poisson-nn") return "nn";
  if (problem == "darcy-stokes" || problem == "darcy-stokes-dirichlet") return "robust";
  if (problem == "stokes-sub" || problem == "navier-sub") return "free";
  if (problem == "darcy-sub") return "zero00";
  return "robust";  // stokes-navier: the single robust choice
}

inline FractionalFlavor flavor_of(const std::string& s) {
  if (s == "free") return FractionalFlavor::FREE;
  if (s == "zero00") return FractionalFlavor::ZERO_TRACE_00;
  throw std::invalid_argument("unknown flavor preconditioner: " + s);
}

}  // namespace detail

/// Instantiate one grid point of an experiment.
inline Problem build_problem(const std::string& id, const ParameterSet& prm, double h_label,
                             std::string precond, const std::string& domain,
                             MmsFields fields = MmsFields::TRIG) {
  if (precond.empty()) precond = detail::default_precond(id);
  auto pv = [&](const std::string& s) {
    if (s == "dd") return PoissonVariant::DD;
    if (s == "nd") return PoissonVariant::ND;
    if (s == "nn") return PoissonVariant::NN;
    throw std::invalid_argument("unknown poisson preconditioner: " + s);
  };
  SubproblemDomain domF = domain == "half" ? SubproblemDomain::HALF_F : SubproblemDomain::UNIT;
  SubproblemDomain domP = domain == "half" ? SubproblemDomain::HALF_P : SubproblemDomain::UNIT;

  if (id == "poisson-nd")
    return build_poisson_interface(prm, h_label, PoissonVariant::ND, pv(precond), fields);
  if (id == "poisson-dd")
    return build_poisson_interface(prm, h_label, PoissonVariant::DD, pv(precond), fields);
  if (id == "poisson-nn")
    return build_poisson_interface(prm, h_label, PoissonVariant::NN, pv(precond), fields);
  if (id == "darcy-stokes" || id == "darcy-stokes-dirichlet") {
    DarcyStokesPrecond dp = precond == "naive" ? DarcyStokesPrecond::NAIVE : DarcyStokesPrecond::ROBUST;
    if (precond != "naive" && precond != "robust")
      throw std::invalid_argument("darcy-stokes preconditioner must be naive or robust");
    return build_darcy_stokes(prm, h_label, dp,
                              id == "darcy-stokes" ? BcMode::MIXED : BcMode::ALL_DIRICHLET, fields);
  }
  if (id == "stokes-sub")
    return build_stokes_subproblem(prm, h_label, detail::flavor_of(precond), domF, fields);
  if (id == "darcy-sub")
    return build_darcy_subproblem(prm, h_label, detail::flavor_of(precond), domP, fields);
  if (id == "navier-sub") {
    VectorMultiplierPrecond vp;
    if (precond == "free") vp = VectorMultiplierPrecond::FREE;
    else if (precond == "zero00") vp = VectorMultiplierPrecond::ZERO00;
    else if (precond == "n0") vp = VectorMultiplierPrecond::N0;
    else if (precond == "t0") vp = VectorMultiplierPrecond::T0;
    else throw std::invalid_argument("unknown navier preconditioner: " + precond);
    return build_navier_subproblem(prm, h_label, vp, domF, fields);
  }
  if (id == "stokes-navier" || id == "stokes-navier-dirichlet")
    return build_stokes_navier(prm, h_label,
                               id == "stokes-navier" ? BcMode::MIXED : BcMode::ALL_DIRICHLET, fields);
  throw std::invalid_argument("unknown problem id: " + id);
}

struct GridPoint {
  double h, mu, K, alpha, eta, k, kappa;
};

inline std::vector<GridPoint> grid_points(const ExperimentConfig& cfg) {
  std::vector<GridPoint> pts;
  for (double h : cfg.h)
    for (double mu : cfg.mu)
      for (double K : cfg.K)
        for (double a : cfg.alpha)
          for (double eta : cfg.eta)
            for (double k : cfg.k)
              for (double kp : cfg.kappa_ratio) pts.push_back({h, mu, K, a, eta, k, kp});
  return pts;
}

inline ParameterSet params_of(const GridPoint& g) {
  ParameterSet prm;
  prm.mu = g.mu;
  prm.K = g.K;
  prm.alpha_bjs = g.alpha;
  prm.eta = g.eta;
  prm.k = g.k;
  prm.kappa1 = 1.0;
  prm.kappa2 = g.kappa;
  return prm;
}

struct ResultRow {
  GridPoint g;
  int ndof = 0;
  int iters = -1;        // -1 = missing
  double cond = -1.0;    // < 0 = missing
  double time_s = -1.0;  // < 0 = missing
  std::string error;
  std::vector<std::pair<std::string, double>> field_errors;  // mms mode
};

namespace detail {

inline bool is_poisson(const std::string& id) { return id.rfind("poisson", 0) == 0; }

template <class Fn>
inline void run_parallel(int jobs, int n, Fn&& fn) {
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Cartesian sweep in solve/cond mode; returns the number of errored rows.
inline int run_sweep(const ExperimentConfig& cfg, std::ostream& os, std::ostream* plot = nullptr) {
  cfg.validate();
  std::string precond = cfg.precond.empty() ? detail::default_precond(cfg.problem) : cfg.precond;
  auto pts = grid_points(cfg);
  std::vector<ResultRow> rows(pts.size());

  detail::run_parallel(cfg.jobs, static_cast<int>(pts.size()), [&](int i) {
    ResultRow& r = rows[i];
    r.g = pts[i];
    try {
      Problem p = build_problem(cfg.problem, params_of(pts[i]), pts[i].h, precond, cfg.domain);
      r.ndof = p.dofs();
      if (cfg.mode == "solve") {
        p.bundle.N.factorize();
        auto [x, rep] = minres(p.bundle.A, p.bundle.N, p.bundle.rhs, cfg.seed, cfg.tol, cfg.max_iter);
        if (!rep.converged) r.error = "minres did not converge";
        r.iters = rep.iterations;
        r.time_s = rep.wall_time;
      } else {
        SpectrumOptions opts;
        opts.dense_limit = cfg.dense_eig_limit;
        opts.seed = cfg.seed;
        opts.deflate = cfg.deflate;
        auto rep = condition_number(p.bundle.A, p.bundle.N, opts, p.bundle.deflation);
        r.cond = rep.condition;
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });

  os << "problem,h,mu,K,alpha_bjs,eta,k,precond,ndof,iters,cond,time_s\n";
  if (plot) *plot << "problem,h,mu,K,alpha_bjs,eta,k,precond,metric,value\n";
  int errors = 0;
  const bool poisson = detail::is_poisson(cfg.problem);
  for (const auto& r : rows) {
    std::ostringstream head;
    head << cfg.problem << "," << detail::fmt(r.g.h) << ",";
    if (poisson)
      head << "," << detail::fmt(r.g.kappa) << ",,,,";
    else
      head << detail::fmt(r.g.mu) << "," << detail::fmt(r.g.K) << "," << detail::fmt(r.g.alpha)
           << "," << detail::fmt(r.g.eta) << "," << detail::fmt(r.g.k) << ",";
    head << precond << ",";
    os << head.str();
    os << (r.ndof > 0 ? std::to_string(r.ndof) : "") << ",";
    os << (r.iters >= 0 ? std::to_string(r.iters) : "") << ",";
    os << (r.cond >= 0 ? detail::fmt(r.cond) : "") << ",";
    if (r.time_s >= 0) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", r.time_s);
      os << buf;
    }
    if (!r.error.empty()) {
      os << ",error:" << r.error;
      ++errors;
    }
    os << "\n";
    if (plot) {
      if (r.iters >= 0) *plot << head.str() << "iters," << r.iters << "\n";
      if (r.cond >= 0) *plot << head.str() << "cond," << detail::fmt(r.cond) << "\n";
    }
  }
  return errors;
}

/// Error-convergence study: one direct solve per level, least-squares slopes.
inline int run_mms(const ExperimentConfig& cfg, std::ostream& os) {
  cfg.validate();
  if (cfg.problem == "darcy-stokes-dirichlet" || cfg.problem == "stokes-navier-dirichlet")
    throw std::invalid_argument("no analytic solution registered for " + cfg.problem);
  std::string precond = cfg.precond.empty() ? detail::default_precond(cfg.problem) : cfg.precond;
  ParameterSet prm = params_of(grid_points(cfg).front());

  const MmsFields fields = cfg.mms_fields == "polynomial" ? MmsFields::POLYNOMIAL : MmsFields::TRIG;
  std::vector<double> hs = cfg.h;
  std::vector<std::vector<std::pair<std::string, double>>> per_level(hs.size());
  std::vector<std::string> errs(hs.size());
  detail::run_parallel(cfg.jobs, static_cast<int>(hs.size()), [&](int i) {
    try {
      Problem p = build_problem(cfg.problem, prm, hs[i], precond, cfg.domain, fields);
      Factorization lu(p.bundle.A, FactorKind::LU);
      VecX x = lu.solve(p.bundle.rhs);
      per_level[i] = energy_error(p, x);
    } catch (const std::exception& e) {
      errs[i] = e.what();
    }
  });

  os << "problem,h,field,error,rate\n";
  int nerr = 0;
  for (size_t i = 0; i < hs.size(); ++i) {
    if (!errs[i].empty()) {
      os << cfg.problem << "," << detail::fmt(hs[i]) << ",,,error:" << errs[i] << "\n";
      ++nerr;
      continue;
    }
    for (size_t f = 0; f < per_level[i].size(); ++f) {
      os << cfg.problem << "," << detail::fmt(hs[i]) << "," << per_level[i][f].first << ","
         << detail::fmt(per_level[i][f].second) << ",";
      if (i > 0 && errs[i - 1].empty() && per_level[i - 1][f].second > 0 &&
          per_level[i][f].second > 0)
        os << detail::fmt(std::log2(per_level[i - 1][f].second / per_level[i][f].second));
      os << "\n";
    }
  }
  // least-squares slopes over all levels; errors below roundoff report "saturated"
  if (nerr == 0 && !per_level.empty()) {
    for (size_t f = 0; f < per_level[0].size(); ++f) {
      bool saturated = true;
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int n = 0;
      for (size_t i = 0; i < hs.size(); ++i) {
        double e = per_level[i][f].second;
        saturated &= e < 1e-10;
        if (e <= 0) continue;
        double x = std::log(hs[i]), y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
      }
      os << cfg.problem << ",fit," << per_level[0][f].first << ",,";
      if (saturated) os << "saturated";
      else if (n >= 2) os << detail::fmt((n * sxy - sx * sy) / (n * sxx - sx * sx));
      os << "\n";
    }
  }
  return nerr;
}

/// Per-field dof counts, one row per h, columns in velocity/pressure pair
/// order matching the reference dimension table.
inline int report_dofs(const ExperimentConfig& cfg, std::ostream& os) {
  cfg.validate();
  std::string precond = cfg.precond.empty() ? detail::default_precond(cfg.problem) : cfg.precond;
  ParameterSet prm = params_of(grid_points(cfg).front());
  static const std::vector<std::string> canon = {"u_f", "p_f", "u_p", "p_p",
                                                 "u1",  "u2",  "u",   "p",   "lambda"};
  bool header = false;
  std::vector<int> order;
  for (double h : cfg.h) {
    Problem p = build_problem(cfg.problem, prm, h, precond, cfg.domain);
    const FieldLayout& L = p.bundle.layout;
    if (!header) {
      order.clear();
      for (const auto& want : canon)
        for (int i = 0; i < L.count(); ++i)
          if (L.names[i] == want) order.push_back(i);
      os << "problem,h";
      for (int i : order) os << "," << L.names[i];
      os << ",total\n";
      header = true;
    }
    os << cfg.problem << "," << detail::fmt(h);
    for (int i : order) os << "," << L.sizes[i];
    os << "," << L.total << "\n";
  }
  return 0;
}

/// MinRes wall times (setup excluded) for a list of problems; coupled rows get
/// the monolithic-over-subproblems cost ratio where the components are present.
inline int run_timing(const std::vector<std::string>& problems, const ExperimentConfig& cfg,
                      std::ostream& os) {
  struct TRow {
    std::string problem;
    double h;
    int ndof = 0, iters = -1;
    double time_s = -1;
    std::string error;
  };
  std::vector<TRow> rows;
  ParameterSet prm = params_of(grid_points(cfg).front());
  for (double h : cfg.h) {
    for (const auto& id : problems) {
      TRow r;
      r.problem = id;
      r.h = h;
      try {
        std::string dom = id.find("-sub") != std::string::npos ? "half" : cfg.domain;
        Problem p = build_problem(id, prm, h, "", dom);
        r.ndof = p.dofs();
        p.bundle.N.factorize();  // setup excluded from the reported time
        auto [x, rep] = minres(p.bundle.A, p.bundle.N, p.bundle.rhs, cfg.seed, cfg.tol, cfg.max_iter);
        r.iters = rep.iterations;
        r.time_s = rep.wall_time;
        if (!rep.converged) r.error = "minres did not converge";
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      rows.push_back(std::move(r));
    }
  }
  auto time_of = [&](const std::string& id, double h) -> double {
    for (const auto& r : rows)
      if (r.problem == id && r.h == h && r.time_s >= 0) return r.time_s;
    return -1;
  };
  os << "problem,h,ndof,iters,time_s,ratio\n";
  int errors = 0;
  for (const auto& r : rows) {
    os << r.problem << "," << detail::fmt(r.h) << "," << r.ndof << ","
       << (r.iters >= 0 ? std::to_string(r.iters) : "") << ",";
    if (r.time_s >= 0) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", r.time_s);
      os << buf;
    }
    os << ",";
    if (r.problem == "darcy-stokes") {
      double td = time_of("darcy-sub", r.h), ts = time_of("stokes-sub", r.h);
      if (td >= 0 && ts >= 0 && r.time_s >= 0) os << detail::fmt(r.time_s / (td + ts));
    } else if (r.problem == "stokes-navier") {
      double tn = time_of("navier-sub", r.h);
      if (tn >= 0 && r.time_s >= 0) os << detail::fmt(r.time_s / (2.0 * tn));
    }
    if (!r.error.empty()) {
      os << ",error:" << r.error;
      ++errors;
    }
    os << "\n";
  }
  return errors;
}

/// Flat key=value config file; '#' starts a comment, lists are comma separated.
inline void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) continue;
    if (key == "problem") cfg.problem = val;
    else if (key == "mode") cfg.mode = val;
    else if (key == "h") cfg.h = detail::parse_list(val);
    else if (key == "mu") cfg.mu = detail::parse_list(val);
    else if (key == "K") cfg.K = detail::parse_list(val);
    else if (key == "alpha") cfg.alpha = detail::parse_list(val);
    else if (key == "eta") cfg.eta = detail::parse_list(val);
    else if (key == "k") cfg.k = detail::parse_list(val);
    else if (key == "kappa-ratio") cfg.kappa_ratio = detail::parse_list(val);
    else if (key == "precond") cfg.precond = val;
    else if (key == "domain") cfg.domain = val;
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "tol") cfg.tol = std::stod(val);
    else if (key == "max-iter") cfg.max_iter = std::stoi(val);
    else if (key == "jobs") cfg.jobs = std::stoi(val);
    else if (key == "dense-eig-limit") cfg.dense_eig_limit = std::stoi(val);
    else if (key == "deflate") cfg.deflate = val == "1" || val == "true";
    else if (key == "out") cfg.out = val;
    else throw std::invalid_argument("unknown config key: " + key);
  }
}

}  // namespace mpp
