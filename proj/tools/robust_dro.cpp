// Command line front end: data generation, contamination, solving, baselines,
// robust mean estimation and the epsilon-sweep benchmark.

#include "rdro/baselines.hpp"
#include "rdro/data_model.hpp"
#include "rdro/dataset_io.hpp"
#include "rdro/dro_solver.hpp"
#include "rdro/errors.hpp"
#include "rdro/harness.hpp"
#include "rdro/robust_mean.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

using json = nlohmann::json;
using namespace rdro;

namespace {

bool is_binary_path(std::string const &path) { return path.size() >= 4 && path.substr(path.size() - 4) == ".bin"; }

Dataset load_dataset(std::string const &path, double sigma)
{
  if (is_binary_path(path)) {
    Dataset d = read_binary(path);
    d.sigma = sigma;
    return d;
  }
  return read_csv(std::filesystem::path(path), sigma);
}

void save_dataset(Dataset const &data, std::string const &path)
{
  if (is_binary_path(path)) {
    write_binary(data, path);
  } else {
    write_csv(data, std::filesystem::path(path));
  }
}

json vec_json(Eigen::VectorXd const &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_json(json const &j, std::string const &path)
{
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) { throw InvalidArgument("cannot open " + path + " for writing"); }
  out << j.dump(2) << '\n';
}

struct SolveFlags
{
  std::string loss = "hinge";
  std::string reg_s = "2";
  double rho = 0.1;
  double epsilon = 0.1;
  double sigma = 1.0;
  double delta_const = 2.0;
  double w0_bound = 10.0;
  std::optional<double> gamma_dist;
  std::optional<double> delta;
  std::string oracle = "robust";
  std::string sigma_mode = "given";
  double c_eval = 2.0;
  int max_T_cap = 100000;
  std::uint64_t seed = 0;
  std::string input;
  std::string output = "-";
};

void add_solve_flags(CLI::App *cmd, SolveFlags &f)
{
  cmd->add_option("--loss", f.loss, "lad, huber, hinge or logistic")->capture_default_str();
  cmd->add_option("--reg-s", f.reg_s, "regularizer norm: 1, 2 or inf")->capture_default_str();
  cmd->add_option("--rho", f.rho, "Wasserstein radius")->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "corruption fraction")->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "covariance bound (standard deviation scale)")->capture_default_str();
  cmd->add_option("--delta-const", f.delta_const, "C_Delta in Delta = C_Delta sigma zeta sqrt(epsilon)")
    ->capture_default_str();
  cmd->add_option("--w0-bound", f.w0_bound, "upper bound W0 on ||w0 - w*|| for the gamma search")
    ->capture_default_str();
  cmd->add_option("--gamma-dist", f.gamma_dist, "fixed distance D (gamma = D / (zeta sqrt N)); skips the search");
  cmd->add_option("--delta", f.delta, "override Delta (required with --oracle exact)");
  cmd->add_option("--oracle", f.oracle, "robust, exact or trimmed")->capture_default_str();
  cmd->add_option("--sigma-mode", f.sigma_mode, "given or estimated")->capture_default_str();
  cmd->add_option("--c-eval", f.c_eval, "constant of the early-stopping slack")->capture_default_str();
  cmd->add_option("--max-T", f.max_T_cap, "iteration cap")->capture_default_str();
  cmd->add_option("--seed", f.seed, "seed (used by randomized baselines)")->capture_default_str();
  cmd->add_option("--input", f.input, "dataset CSV (x0..x{d-1},y, no intercept column) or .bin")->required();
  cmd->add_option("--output", f.output, "output JSON path, '-' for stdout")->capture_default_str();
}

PDHGConfig solver_config(SolveFlags const &f)
{
  PDHGConfig cfg;
  cfg.epsilon = f.epsilon;
  cfg.sigma = f.sigma;
  cfg.delta_constant = f.delta_const;
  cfg.W0 = f.w0_bound;
  cfg.gamma_override = f.gamma_dist;
  cfg.delta_override = f.delta;
  cfg.s = parse_norm_kind(f.reg_s);
  cfg.rho = f.rho;
  cfg.c_eval = f.c_eval;
  cfg.max_T_cap = f.max_T_cap;
  if (f.oracle == "robust") {
    cfg.oracle = OracleMode::Robust;
  } else if (f.oracle == "exact") {
    cfg.oracle = OracleMode::Exact;
  } else if (f.oracle == "trimmed") {
    cfg.oracle = OracleMode::CoordinateTrimmed;
  } else {
    throw InvalidArgument("unknown oracle '" + f.oracle + "' (expected robust, exact or trimmed)");
  }
  if (f.sigma_mode == "given") {
    cfg.sigma_mode = SigmaMode::Given;
  } else if (f.sigma_mode == "estimated") {
    cfg.sigma_mode = SigmaMode::Estimated;
  } else {
    throw InvalidArgument("unknown sigma mode '" + f.sigma_mode + "'");
  }
  cfg.validate();
  return cfg;
}

json config_echo(SolveFlags const &f)
{
  json j{{"loss", f.loss},         {"reg_s", f.reg_s},   {"rho", f.rho},         {"epsilon", f.epsilon},
         {"sigma", f.sigma},       {"delta_const", f.delta_const},               {"w0_bound", f.w0_bound},
         {"oracle", f.oracle},     {"sigma_mode", f.sigma_mode},                 {"c_eval", f.c_eval},
         {"max_T", f.max_T_cap},   {"seed", f.seed},     {"input", f.input}};
  j["gamma_dist"] = f.gamma_dist ? json(*f.gamma_dist) : json(nullptr);
  j["delta"] = f.delta ? json(*f.delta) : json(nullptr);
  return j;
}

ReportFormat format_of(std::string const &path, std::string const &explicit_format)
{
  std::string const fmt = !explicit_format.empty()
                            ? explicit_format
                            : (path.size() >= 5 && path.substr(path.size() - 5) == ".json" ? "json" : "csv");
  if (fmt == "csv") { return ReportFormat::Csv; }
  if (fmt == "json") { return ReportFormat::Json; }
  throw InvalidArgument("unknown report format '" + fmt + "' (expected csv or json)");
}

double median(std::vector<double> v)
{
  if (v.empty()) { return 0.0; }
  std::sort(v.begin(), v.end());
  std::size_t const m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void print_summary(std::vector<MetricsRow> const &rows)
{
  // Group by (method, adversary, epsilon) in first-appearance order.
  std::vector<std::tuple<std::string, std::string, double>> keys;
  std::map<std::tuple<std::string, std::string, double>, std::vector<double>> excess;
  std::map<std::tuple<std::string, std::string, double>, int> failed;
  for (auto const &r : rows) {
    auto const key = std::make_tuple(r.method, r.adversary, r.epsilon);
    if (!excess.count(key) && !failed.count(key)) { keys.push_back(key); }
    if (r.ok()) {
      excess[key].push_back(r.excess_clean_objective);
    } else {
      ++failed[key];
    }
  }
  std::printf("%-14s %-22s %10s %6s %7s %16s\n", "method", "adversary", "epsilon", "rows", "failed", "median_excess");
  for (auto const &key : keys) {
    auto const &v = excess[key];
    std::printf("%-14s %-22s %10.4g %6zu %7d %16.6g\n", std::get<0>(key).c_str(), std::get<1>(key).c_str(),
                std::get<2>(key), v.size() + static_cast<std::size_t>(failed[key]), failed[key], median(v));
  }
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Distributionally robust GLM training under adversarial contamination"};
  app.require_subcommand(1);

  // generate
  auto *gen = app.add_subcommand("generate", "draw a synthetic dataset");
  int g_d = 5;
  int g_n = 1000;
  double g_sigma = 1.0;
  std::string g_law = "gaussian";
  double g_dof = 5.0;
  std::string g_task = "classification";
  double g_noise = 0.1;
  double g_flip = 0.0;
  double g_norm = 1.0;
  double g_intercept = 0.0;
  std::uint64_t g_planted_seed = 0;
  std::uint64_t g_seed = 0;
  std::string g_out;
  gen->add_option("--d", g_d, "model dimension including the intercept slot (d - 1 raw columns)")
    ->capture_default_str();
  gen->add_option("--n", g_n, "sample count")->capture_default_str();
  gen->add_option("--sigma", g_sigma, "covariate standard deviation")->capture_default_str();
  gen->add_option("--law", g_law, "gaussian or student_t")->capture_default_str();
  gen->add_option("--dof", g_dof, "Student-t degrees of freedom (> 2)")->capture_default_str();
  gen->add_option("--task", g_task, "regression or classification")->capture_default_str();
  gen->add_option("--noise-std", g_noise, "regression label noise")->capture_default_str();
  gen->add_option("--flip-prob", g_flip, "classification label flip probability")->capture_default_str();
  gen->add_option("--planted-norm", g_norm, "norm of the planted slope")->capture_default_str();
  gen->add_option("--planted-intercept", g_intercept, "planted intercept")->capture_default_str();
  gen->add_option("--planted-seed", g_planted_seed, "seed of the planted direction")->capture_default_str();
  gen->add_option("--seed", g_seed, "sampling seed")->capture_default_str();
  gen->add_option("--output", g_out, "CSV or .bin output path")->required();

  // corrupt
  auto *cor = app.add_subcommand("corrupt", "replace an epsilon fraction of a dataset");
  std::string c_in;
  std::string c_out;
  std::string c_sidecar;
  std::string c_adv = "far_cluster";
  double c_eps = 0.1;
  std::optional<double> c_mag;
  double c_sigma = 1.0;
  std::uint64_t c_seed = 0;
  cor->add_option("--input", c_in, "dataset CSV or .bin")->required();
  cor->add_option("--output", c_out, "output path")->required();
  cor->add_option("--sidecar", c_sidecar, "JSON file for the corrupted indices");
  cor->add_option("--adversary", c_adv, "none, far_cluster, doro_counterexample, label_flip_leverage")
    ->capture_default_str();
  cor->add_option("--epsilon", c_eps, "corruption fraction")->capture_default_str();
  cor->add_option("--magnitude", c_mag, "outlier magnitude");
  cor->add_option("--sigma", c_sigma, "covariance bound of the clean data")->capture_default_str();
  cor->add_option("--seed", c_seed, "seed choosing the replaced rows")->capture_default_str();

  // solve
  auto *solve = app.add_subcommand("solve", "run the robust primal-dual solver");
  SolveFlags s_flags;
  add_solve_flags(solve, s_flags);

  // baseline
  auto *base = app.add_subcommand("baseline", "run a comparison method");
  SolveFlags b_flags;
  std::string b_method = "erm";
  long b_iters = 2000;
  double b_alpha = 1.0;
  double b_tol = 1e-6;
  add_solve_flags(base, b_flags);
  base->add_option("--method", b_method, "oracle, erm, doro or trimmed_mean")->capture_default_str();
  base->add_option("--iters", b_iters, "iterations (erm, doro) or budget (oracle)")->capture_default_str();
  base->add_option("--alpha", b_alpha, "CVaR level for doro")->capture_default_str();
  base->add_option("--tol", b_tol, "oracle tolerance")->capture_default_str();

  // robust-mean
  auto *rm = app.add_subcommand("robust-mean", "robust mean of the rows of a CSV");
  std::string rm_in;
  double rm_eps = 0.1;
  rm->add_option("--input", rm_in, "CSV with a header row; every column is a coordinate")->required();
  rm->add_option("--epsilon", rm_eps, "corruption fraction, in (0, 1/2)")->capture_default_str();

  // bench
  auto *bench = app.add_subcommand("bench", "run an epsilon sweep from a JSON config");
  std::string bench_cfg;
  std::string bench_csv;
  std::string bench_json;
  bench->add_option("--config", bench_cfg, "experiment config JSON")->required();
  bench->add_option("--csv", bench_csv, "CSV report path (overrides the config)");
  bench->add_option("--json", bench_json, "JSON report path (overrides the config)");

  // report
  auto *rep = app.add_subcommand("report", "summarize or convert a report");
  std::string rep_in;
  std::string rep_format;
  std::string rep_out;
  std::string rep_out_format;
  rep->add_option("--input", rep_in, "report file (csv or json)")->required();
  rep->add_option("--format", rep_format, "input format, inferred from the extension by default");
  rep->add_option("--output", rep_out, "write the rows to this path");
  rep->add_option("--output-format", rep_out_format, "csv or json, inferred from the extension by default");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      Eigen::VectorXd planted = Eigen::VectorXd::Zero(g_d);
      planted[0] = g_intercept;
      DataSpec spec;
      spec.d = g_d;
      spec.planted_norm = g_norm;
      spec.planted_intercept = g_intercept;
      spec.planted_seed = g_planted_seed;
      planted = planted_weights(spec);
      NoiseSpec noise;
      if (g_task == "classification") {
        noise.task = Task::Classification;
      } else if (g_task == "regression") {
        noise.task = Task::Regression;
      } else {
        throw InvalidArgument("unknown task '" + g_task + "'");
      }
      noise.noise_std = g_noise;
      noise.flip_prob = g_flip;
      CovariateLaw law = GaussianLaw{};
      if (g_law == "student_t") {
        law = StudentTLaw{g_dof};
      } else if (g_law != "gaussian") {
        throw InvalidArgument("unknown law '" + g_law + "'");
      }
      Dataset const data = generate_synthetic(g_d, g_n, planted, noise, law, g_sigma, g_seed);
      save_dataset(data, g_out);
      std::cout << json{{"planted_w", vec_json(planted)}, {"n", g_n}, {"d", g_d}}.dump() << '\n';
      return 0;
    }
    if (*cor) {
      Dataset const data = load_dataset(c_in, c_sigma);
      Adversary adv = NoAdversary{};
      if (c_adv == "far_cluster") {
        FarCluster fc;
        fc.magnitude = c_mag;
        adv = fc;
      } else if (c_adv == "doro_counterexample") {
        adv = DoroCounterexample{};
      } else if (c_adv == "label_flip_leverage") {
        LabelFlipPlusLeverage lf;
        if (c_mag) { lf.magnitude = *c_mag; }
        adv = lf;
      } else if (c_adv != "none") {
        throw InvalidArgument("unknown adversary '" + c_adv + "'");
      }
      Dataset const out = contaminate(data, ContaminationSpec{c_eps, adv}, c_seed);
      save_dataset(out, c_out);
      if (!c_sidecar.empty()) { write_sidecar(out, c_sidecar); }
      std::cout << json{{"corrupted", out.corrupted ? out.corrupted->size() : 0}}.dump() << '\n';
      return 0;
    }
    if (*solve) {
      PDHGConfig const cfg = solver_config(s_flags);
      LossFamily const loss = LossFamily::make(parse_loss_kind(s_flags.loss));
      Dataset const data = load_dataset(s_flags.input, s_flags.sigma);
      SolveResult const res = pipeline(data, loss, cfg.regularizer(), cfg);
      json out{{"w_hat", vec_json(res.w_hat)},
               {"objective_trace", res.objective_trace},
               {"oracle_calls", res.oracle_calls},
               {"gamma_used", res.gamma_used},
               {"T_used", res.T_used},
               {"delta", res.delta},
               {"runs", res.runs},
               {"max_abs_alpha", res.max_abs_alpha},
               {"max_abs_beta", res.max_abs_beta},
               {"config", config_echo(s_flags)}};
      if (res.mu_hat) { out["mu_hat"] = vec_json(*res.mu_hat); }
      json cands = json::array();
      for (auto const &c : res.candidates) {
        cands.push_back({{"distance", c.distance}, {"objective_estimate", c.objective_estimate}});
      }
      out["candidates"] = cands;
      write_json(out, s_flags.output);
      return 0;
    }
    if (*base) {
      BaselineMethod const method{parse_baseline_kind(b_method), b_alpha};
      method.validate();
      LossFamily const loss = LossFamily::make(parse_loss_kind(b_flags.loss));
      NormRegularizer const reg = NormRegularizer::make(parse_norm_kind(b_flags.reg_s), b_flags.rho, loss.zeta);
      Dataset const raw = load_dataset(b_flags.input, b_flags.sigma);
      Dataset const data = prepend_ones(raw);
      json out{{"method", b_method}, {"config", config_echo(b_flags)}};
      Eigen::VectorXd w;
      switch (method.kind) {
      case BaselineKind::OracleProxSubgradient: {
        OracleOptions opts;
        opts.max_iters = b_iters;
        OracleResult const res = oracle_solve(data, loss, reg, b_tol, opts);
        w = res.w;
        out["iterations"] = res.iterations;
        out["budget_exhausted"] = res.budget_exhausted;
        break;
      }
      case BaselineKind::VanillaERM: w = erm_subgradient(data, loss, reg, b_iters); break;
      case BaselineKind::DoroCvar: w = doro_cvar(data, loss, b_flags.epsilon, b_alpha, b_iters, b_flags.seed); break;
      case BaselineKind::TrimmedMeanEstimation: {
        SolveFlags f = b_flags;
        f.oracle = "trimmed";
        PDHGConfig const cfg = solver_config(f);
        w = pipeline(raw, loss, reg, cfg).w_hat;
        break;
      }
      }
      out["w_hat"] = vec_json(w);
      out["objective"] = dro_objective_eval(w, data, loss, reg);
      write_json(out, b_flags.output);
      return 0;
    }
    if (*rm) {
      Eigen::MatrixXd const points = read_points_csv(std::filesystem::path(rm_in));
      RobustMeanResult const res = robust_mean_estimation_detailed(points, rm_eps);
      std::cout << json{{"mean", vec_json(res.mean)}, {"iterations", res.state.iterations}}.dump(2) << '\n';
      return 0;
    }
    if (*bench) {
      ExperimentConfig cfg = load_experiment_config(bench_cfg);
      if (!bench_csv.empty()) { cfg.csv_output = bench_csv; }
      if (!bench_json.empty()) { cfg.json_output = bench_json; }
      std::vector<MetricsRow> const rows = run_experiment(cfg);
      if (cfg.csv_output) { emit_report(rows, ReportFormat::Csv, *cfg.csv_output); }
      if (cfg.json_output) { emit_report(rows, ReportFormat::Json, *cfg.json_output); }
      if (!cfg.csv_output && !cfg.json_output) { emit_report(rows, ReportFormat::Csv, std::cout); }
      print_summary(rows);
      bool const all_ok = std::all_of(rows.begin(), rows.end(), [](MetricsRow const &r) { return r.ok(); });
      for (auto const &r : rows) {
        if (!r.ok()) { std::cerr << r.method << " eps=" << r.epsilon << " seed=" << r.seed << ": " << r.status << '\n'; }
      }
      return all_ok ? 0 : 1;
    }
    if (*rep) {
      std::vector<MetricsRow> const rows = read_report(std::filesystem::path(rep_in), format_of(rep_in, rep_format));
      if (!rep_out.empty()) { emit_report(rows, format_of(rep_out, rep_out_format), std::filesystem::path(rep_out)); }
      print_summary(rows);
      return 0;
    }
  } catch (std::exception const &e) {
    std::cerr << "robust-dro: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
