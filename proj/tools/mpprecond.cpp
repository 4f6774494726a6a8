// Experiment driver around the mpprecond library: parameter sweeps,
// condition-number studies, convergence studies, dof tables and timings,
// all emitted as CSV.

#include "mpprecond/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int write_out(const std::string& path, const std::string& text) {
  if (path == "-" || path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot open output file: " << path << "\n";
    return 1;
  }
  out << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // grid points run single-threaded; keep the BLAS pool out of the way
  setenv("OPENBLAS_NUM_THREADS", "1", 0);

  CLI::App app{"Operator preconditioners for interface-coupled systems"};
  app.require_subcommand(1);

  mpp::ExperimentConfig cfg;
  std::string config_file, h_list, mu_list, K_list, alpha_list, eta_list, k_list, kappa_list;
  std::string problem_list;

  app.set_help_flag("--help", "print help");

  auto add_common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "print help");
    sub->add_option("--problem", problem_list, "problem id (time mode: comma-separated list)");
    sub->add_option("--h", h_list, "resolution labels, e.g. 2^-3,2^-4 or 0.125");
    sub->add_option("--mu", mu_list, "viscosity grid");
    sub->add_option("--K", K_list, "hydraulic conductivity grid");
    sub->add_option("--alpha", alpha_list, "Beavers-Joseph-Saffman coefficient grid");
    sub->add_option("--eta", eta_list, "penalty parameter grid ('inf' allowed)");
    sub->add_option("--k", k_list, "time-step coupling weight grid");
    sub->add_option("--kappa-ratio", kappa_list, "kappa2/kappa1 grid (poisson problems)");
    sub->add_option("--precond", cfg.precond,
                    "preconditioner variant (robust|naive|free|zero00|n0|t0|nd|dd|nn)");
    sub->add_option("--domain", cfg.domain, "subproblem domain: unit|half")
        ->check(CLI::IsMember({"unit", "half"}));
    sub->add_option("--seed", cfg.seed, "seed for the random MinRes/Lanczos start vectors");
    sub->add_option("--tol", cfg.tol, "MinRes relative residual tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "MinRes iteration cap");
    sub->add_option("--jobs", cfg.jobs, "number of grid points run concurrently");
    sub->add_option("--dense-eig-limit", cfg.dense_eig_limit,
                    "full spectra are computed below this many dofs");
    sub->add_flag("--deflate", cfg.deflate, "restrict spectra to the complement of the nullspace vector");
    sub->add_flag("--plot-data", cfg.plot_data, "also emit <out>.plot.csv in long format");
    sub->add_option("--mms-fields", cfg.mms_fields, "mms data: trig|polynomial")
        ->check(CLI::IsMember({"trig", "polynomial"}));
    sub->add_option("--out", cfg.out, "output CSV path ('-' = stdout)");
    sub->add_option("--config", config_file, "flat key=value config file (CLI flags override)");
  };

  CLI::App* solve = app.add_subcommand("solve", "preconditioned MinRes iteration counts");
  CLI::App* cond = app.add_subcommand("cond", "spectral condition numbers of B^-1 A");
  CLI::App* mms = app.add_subcommand("mms", "manufactured-solution error convergence");
  CLI::App* dofs = app.add_subcommand("dofs", "per-field dof counts");
  CLI::App* time_ = app.add_subcommand("time", "MinRes wall times and cost ratios");
  for (CLI::App* sub : {solve, cond, mms, dofs, time_}) add_common(sub);

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  cfg.mode = sub->get_name() == "time" ? "time" : sub->get_name();

  try {
    if (!config_file.empty()) {
      // config supplies defaults; explicitly passed CLI flags win
      mpp::ExperimentConfig file_cfg;
      file_cfg.mode = cfg.mode;
      mpp::load_config_file(config_file, file_cfg);
      if (sub->count("--precond")) file_cfg.precond = cfg.precond;
      if (sub->count("--domain")) file_cfg.domain = cfg.domain;
      if (sub->count("--seed")) file_cfg.seed = cfg.seed;
      if (sub->count("--tol")) file_cfg.tol = cfg.tol;
      if (sub->count("--max-iter")) file_cfg.max_iter = cfg.max_iter;
      if (sub->count("--jobs")) file_cfg.jobs = cfg.jobs;
      if (sub->count("--dense-eig-limit")) file_cfg.dense_eig_limit = cfg.dense_eig_limit;
      if (sub->count("--deflate")) file_cfg.deflate = cfg.deflate;
      if (sub->count("--plot-data")) file_cfg.plot_data = cfg.plot_data;
      if (sub->count("--mms-fields")) file_cfg.mms_fields = cfg.mms_fields;
      if (sub->count("--out")) file_cfg.out = cfg.out;
      std::swap(cfg, file_cfg);
    }
    if (!problem_list.empty()) cfg.problem = problem_list;
    if (!h_list.empty()) cfg.h = mpp::detail::parse_list(h_list);
    if (!mu_list.empty()) cfg.mu = mpp::detail::parse_list(mu_list);
    if (!K_list.empty()) cfg.K = mpp::detail::parse_list(K_list);
    if (!alpha_list.empty()) cfg.alpha = mpp::detail::parse_list(alpha_list);
    if (!eta_list.empty()) cfg.eta = mpp::detail::parse_list(eta_list);
    if (!k_list.empty()) cfg.k = mpp::detail::parse_list(k_list);
    if (!kappa_list.empty()) cfg.kappa_ratio = mpp::detail::parse_list(kappa_list);

    std::ostringstream os, plot;
    int errors = 0;
    if (cfg.mode == "solve" || cfg.mode == "cond") {
      errors = mpp::run_sweep(cfg, os, cfg.plot_data ? &plot : nullptr);
    } else if (cfg.mode == "mms") {
      errors = mpp::run_mms(cfg, os);
    } else if (cfg.mode == "dofs") {
      errors = mpp::report_dofs(cfg, os);
    } else {
      std::vector<std::string> problems;
      std::stringstream ss(cfg.problem);
      std::string tok;
      while (std::getline(ss, tok, ',')) problems.push_back(tok);
      if (problems.empty()) throw std::invalid_argument("time mode needs --problem list");
      if (cfg.h.empty()) throw std::invalid_argument("empty h grid");
      errors = mpp::run_timing(problems, cfg, os);
    }
    if (write_out(cfg.out, os.str()) != 0) return 1;
    if (cfg.plot_data && cfg.out != "-" && !cfg.out.empty())
      write_out(cfg.out + ".plot.csv", plot.str());
    return errors > 0 ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
