#include "rdro/dro_solver.hpp"

#include "rdro/errors.hpp"
#include "rdro/robust_mean.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace rdro {

void PDHGConfig::validate() const
{
  if (oracle != OracleMode::Exact && !(epsilon > 0 && epsilon < 0.25)) {
    throw ConfigError("robust oracles need 0 < epsilon < 1/4, got " + std::to_string(epsilon));
  }
  if (oracle == OracleMode::Exact) {
    if (!(epsilon >= 0 && epsilon < 0.25)) { throw ConfigError("epsilon must lie in [0, 1/4)"); }
    if (!delta_override) { throw ConfigError("exact oracle mode needs delta_override to size T"); }
  }
  if (!(sigma > 0)) { throw ConfigError("sigma must be positive"); }
  if (!(zeta > 0)) { throw ConfigError("zeta must be positive"); }
  if (!(delta_constant > 0)) { throw ConfigError("delta_constant must be positive"); }
  if (!(W0 > 0)) { throw ConfigError("W0 must be positive"); }
  if (gamma_override && !(*gamma_override > 0)) { throw ConfigError("gamma distance must be positive"); }
  if (delta_override && !(*delta_override > 0)) { throw ConfigError("delta_override must be positive"); }
  if (!(rho >= 0)) { throw ConfigError("rho must be nonnegative"); }
  if (max_T_cap < 1) { throw ConfigError("max_T_cap must be at least 1"); }
  if (!(c_eval >= 0)) { throw ConfigError("c_eval must be nonnegative"); }
}

double sigma_proxy_of(double sigma) { return sigma >= 1.0 ? sigma : std::sqrt(sigma * sigma + 1.0); }

double delta_of(PDHGConfig const &cfg, double sigma_proxy)
{
  if (cfg.delta_override) { return *cfg.delta_override; }
  return cfg.delta_constant * sigma_proxy * cfg.zeta * std::sqrt(cfg.epsilon);
}

Schedule schedule(PDHGConfig const &cfg, double sigma_proxy, Eigen::Index n, int k)
{
  if (k < 1) { throw InvalidArgument("schedule: k must be at least 1"); }
  if (n < 1) { throw InvalidArgument("schedule: N must be at least 1"); }
  double const delta = delta_of(cfg, sigma_proxy);
  if (!(delta > 0)) { throw ConfigError("Delta must be positive; epsilon = 0 needs delta_override"); }
  double const t_real = 2.0 * cfg.zeta * sigma_proxy / delta;
  if (t_real > static_cast<double>(cfg.max_T_cap) + 1.0) {
    throw ConfigError("T = " + std::to_string(t_real) + " exceeds max_T_cap = " + std::to_string(cfg.max_T_cap));
  }
  Schedule out;
  out.T = std::max<int>(1, static_cast<int>(count_ceil(t_real)));
  if (out.T > cfg.max_T_cap) {
    throw ConfigError("T = " + std::to_string(out.T) + " exceeds max_T_cap = " + std::to_string(cfg.max_T_cap));
  }
  out.a = std::sqrt(static_cast<double>(n)) / sigma_proxy;
  out.c = 2.0 - static_cast<double>(k) / out.T;
  return out;
}

namespace {

struct Resolved
{
  double sigma_proxy = 1.0;
  double delta = 0.0;
  int T = 0;
};

double estimated_sigma(Dataset const &data, PDHGConfig const &cfg)
{
  Eigen::Index const n = data.size();
  Eigen::Index const offset = data.has_intercept ? 1 : 0;
  Eigen::VectorXd q = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (cfg.oracle == OracleMode::Robust && data.dim() > offset && n >= 2) {
    q = robust_mean_estimation_detailed(data.covariates.rightCols(data.dim() - offset), 2.0 * cfg.epsilon)
          .state.weights;
  }
  Eigen::MatrixXd const scaled = data.covariates.array().colwise() * q.array().sqrt();
  Eigen::MatrixXd const second = scaled.transpose() * scaled / q.sum();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second, Eigen::EigenvaluesOnly);
  double const top = eig.eigenvalues().size() > 0 ? eig.eigenvalues().maxCoeff() : 0.0;
  return std::sqrt(std::max(top, 1.0));
}

Resolved resolve(Dataset const &data, PDHGConfig const &cfg)
{
  cfg.validate();
  data.validate();
  if (!data.has_intercept) { throw InvalidArgument("solver input must carry the prepended intercept column"); }
  if (data.size() < 1) { throw InvalidArgument("solver input is empty"); }
  if (cfg.w0 && cfg.w0->size() != data.dim()) { throw InvalidArgument("w0 has the wrong dimension"); }
  Resolved r;
  r.sigma_proxy = cfg.sigma_mode == SigmaMode::Estimated ? estimated_sigma(data, cfg) : sigma_proxy_of(cfg.sigma);
  r.delta = delta_of(cfg, r.sigma_proxy);
  r.T = schedule(cfg, r.sigma_proxy, data.size(), 1).T;
  return r;
}

SolveResult run_iterations(Dataset const &data,
                           LossFamily const &loss,
                           NormRegularizer const &reg,
                           PDHGConfig const &cfg,
                           Resolved const &res,
                           double distance,
                           GradientSource const &z_source,
                           IterationObserver const &observer)
{
  Eigen::Index const n = data.size();
  Eigen::Index const d = data.dim();
  double const nd = static_cast<double>(n);
  double const beta_bound = 3.0 * cfg.zeta + 1e-9;

  PDHGState st;
  st.w = cfg.w0 ? *cfg.w0 : Eigen::VectorXd::Zero(d);
  st.alpha = Eigen::VectorXd::Constant(n, 1.0 / nd);
  st.alpha_prev = st.alpha;
  st.gamma = distance / (cfg.zeta * std::sqrt(nd));
  st.w_avg_accum = Eigen::VectorXd::Zero(d);
  if (!(st.gamma > 0)) { throw ConfigError("gamma must be positive"); }

  SolveResult out;
  out.T_used = res.T;
  out.delta = res.delta;
  out.sigma_proxy = res.sigma_proxy;
  out.gamma_used = st.gamma;
  out.max_abs_alpha = st.alpha.cwiseAbs().maxCoeff();
  out.objective_trace.reserve(static_cast<std::size_t>(res.T));

  Eigen::VectorXd beta_bar(n);
  Eigen::VectorXd xw(n);
  for (int k = 1; k <= res.T; ++k) {
    Schedule const sch = schedule(cfg, res.sigma_proxy, n, k);
    double const a_prev = st.a_k;
    st.a_k = sch.a;
    st.A_k += sch.a;
    st.c_k = sch.c;
    st.k = k;

    beta_bar = st.alpha + (a_prev / st.a_k) * (st.alpha - st.alpha_prev);
    double const max_beta = beta_bar.cwiseAbs().maxCoeff();
    out.max_abs_beta = std::max(out.max_abs_beta, max_beta);
    if (max_beta > beta_bound) {
      throw ContractError("extrapolated dual exceeds 3 zeta at iteration " + std::to_string(k));
    }

    Eigen::VectorXd const z_bar = z_source(k, beta_bar);
    ++out.oracle_calls;
    if (z_bar.size() != d) { throw ContractError("gradient source returned the wrong dimension"); }

    double const tau = st.a_k * st.gamma / st.c_k;
    st.w = reg_prox(reg, st.w - tau * z_bar, tau);

    xw.noalias() = data.covariates * st.w;
    st.alpha_prev = st.alpha;
    for (Eigen::Index i = 0; i < n; ++i) {
      st.alpha[i] = conjugate_prox(loss, data.labels[i], xw[i], st.alpha_prev[i], st.a_k, nd, st.gamma);
    }
    out.max_abs_alpha = std::max(out.max_abs_alpha, st.alpha.cwiseAbs().maxCoeff());

    st.w_avg_accum += st.a_k * st.w;
    Eigen::VectorXd const running = st.w_avg_accum / st.A_k;
    out.objective_trace.push_back(robust_objective_estimate(data, loss, reg, running, cfg.epsilon));

    if (observer) { observer(IterationView{k, st, beta_bar, z_bar}); }
  }
  out.w_hat = st.w_avg_accum / st.A_k;
  return out;
}

GradientSource oracle_source(Dataset const &data, PDHGConfig const &cfg)
{
  if (cfg.oracle == OracleMode::Exact) {
    return [&data](int, Eigen::VectorXd const &beta) -> Eigen::VectorXd {
      return data.covariates.transpose() * beta / static_cast<double>(data.size());
    };
  }
  if (cfg.oracle == OracleMode::CoordinateTrimmed) {
    return [&data, &cfg](int, Eigen::VectorXd const &beta) -> Eigen::VectorXd {
      Eigen::MatrixXd const scaled = data.covariates.array().colwise() * beta.array();
      return coordinatewise_trimmed_mean(scaled, cfg.epsilon);
    };
  }
  return [&data, &cfg](int, Eigen::VectorXd const &beta) -> Eigen::VectorXd {
    return inexact_hybrid_gradient_oracle(beta, data.covariates, cfg.epsilon, cfg.zeta);
  };
}

double distance_of(PDHGConfig const &cfg) { return cfg.gamma_override ? *cfg.gamma_override : cfg.W0; }

} // namespace

SolveResult pdhg_solve(Dataset const &data,
                       LossFamily const &loss,
                       NormRegularizer const &reg,
                       PDHGConfig const &cfg,
                       IterationObserver const &observer)
{
  Resolved const res = resolve(data, cfg);
  return run_iterations(data, loss, reg, cfg, res, distance_of(cfg), oracle_source(data, cfg), observer);
}

SolveResult idealized_solve(Dataset const &stable,
                            LossFamily const &loss,
                            NormRegularizer const &reg,
                            PDHGConfig const &cfg,
                            GradientSource const &z_source,
                            IterationObserver const &observer)
{
  if (!z_source) { throw InvalidArgument("idealized_solve needs a gradient source"); }
  Resolved const res = resolve(stable, cfg);
  return run_iterations(stable, loss, reg, cfg, res, distance_of(cfg), z_source, observer);
}

double robust_objective_estimate(Dataset const &data,
                                 LossFamily const &loss,
                                 NormRegularizer const &reg,
                                 Eigen::Ref<Eigen::VectorXd const> w,
                                 double epsilon)
{
  Eigen::VectorXd const xw = data.covariates * w;
  std::vector<double> losses(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    losses[static_cast<std::size_t>(i)] = loss_eval(loss, data.labels[i], xw[i]);
  }
  return trimmed_mean_1d(std::move(losses), epsilon) + reg.value(w);
}

SolveResult tune_gamma(Dataset const &data, LossFamily const &loss, NormRegularizer const &reg, PDHGConfig const &cfg)
{
  Resolved const res = resolve(data, cfg);
  double const base = res.delta / cfg.zeta;
  double const ratio = cfg.W0 / base;
  int const last = ratio > 1.0 ? static_cast<int>(count_ceil(std::log2(ratio))) : 0;
  double const w0_norm = cfg.w0 ? cfg.w0->norm() : 0.0;
  double const e_ub = cfg.c_eval * cfg.zeta * (w0_norm + cfg.W0) * res.sigma_proxy * std::sqrt(cfg.epsilon);
  auto const source = oracle_source(data, cfg);

  SolveResult best;
  double best_f = std::numeric_limits<double>::infinity();
  long calls = 0;
  double max_alpha = 0.0;
  double max_beta = 0.0;
  std::vector<TuningCandidate> candidates;
  for (int j = 0; j <= last; ++j) {
    double const dist = std::ldexp(base, j);
    SolveResult run = run_iterations(data, loss, reg, cfg, res, dist, source, {});
    calls += run.oracle_calls;
    max_alpha = std::max(max_alpha, run.max_abs_alpha);
    max_beta = std::max(max_beta, run.max_abs_beta);
    double const f = robust_objective_estimate(data, loss, reg, run.w_hat, cfg.epsilon);
    candidates.push_back({dist, f});
    // Strict comparison keeps the smaller D_j on ties.
    if (f < best_f) {
      best_f = f;
      best = std::move(run);
    } else if (f > best_f + 3.0 * e_ub) {
      break;
    }
  }
  best.oracle_calls = calls;
  best.max_abs_alpha = max_alpha;
  best.max_abs_beta = max_beta;
  best.runs = static_cast<int>(candidates.size());
  best.candidates = std::move(candidates);
  return best;
}

SolveResult pipeline(Dataset const &raw, LossFamily const &loss, NormRegularizer const &reg, PDHGConfig const &cfg)
{
  cfg.validate();
  raw.validate();
  if (raw.has_intercept) { throw InvalidArgument("pipeline expects raw covariates without an intercept column"); }
  if (raw.size() < 1) { throw InvalidArgument("pipeline input is empty"); }
  Eigen::Index const k = raw.dim();

  Eigen::VectorXd mu_hat = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    if (cfg.oracle == OracleMode::Robust) {
      mu_hat = robust_mean_estimation(raw.covariates, 2.0 * cfg.epsilon);
    } else if (cfg.oracle == OracleMode::CoordinateTrimmed) {
      mu_hat = coordinatewise_trimmed_mean(raw.covariates, cfg.epsilon);
    } else {
      mu_hat = raw.covariates.colwise().mean().transpose();
    }
  }
  Dataset const prepared = prepend_ones(center_with_estimate(raw, mu_hat));

  SolveResult out = cfg.gamma_override ? pdhg_solve(prepared, loss, reg, cfg) : tune_gamma(prepared, loss, reg, cfg);
  if (k > 0) { out.w_hat[0] -= out.w_hat.tail(k).dot(mu_hat); }
  out.mu_hat = std::move(mu_hat);
  return out;
}

Eigen::VectorXd clip_weight(Eigen::Ref<Eigen::VectorXd const> w, double lambda, double sigma)
{
  if (!(lambda > 0) || !(sigma > 0)) { throw InvalidArgument("clip_weight needs lambda > 0 and sigma > 0"); }
  double const radius = 1.0 / (lambda * sigma);
  double const norm = w.norm();
  if (norm <= radius) { return w; }
  return w * (radius / norm);
}

} // namespace rdro
