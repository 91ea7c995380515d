#pragma once

#include "rdro/data_model.hpp"
#include "rdro/losses.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

namespace rdro {

enum class OracleMode
{
  Robust,           // spectral filter on {beta_i x_i} with parameter 2 epsilon
  Exact,            // plain mean; only meaningful on uncorrupted data (epsilon = 0)
  CoordinateTrimmed // coordinatewise trimmed mean, a comparison baseline
};

enum class SigmaMode
{
  Given,    // use cfg.sigma
  Estimated // top eigenvalue of the robustly reweighted second moment of the covariates
};

struct PDHGConfig
{
  double epsilon = 0.1;
  double sigma = 1.0;
  double zeta = 1.0;
  double delta_constant = 2.0;        // C_Delta in Delta = C_Delta sigma zeta sqrt(epsilon)
  double W0 = 10.0;                   // upper bound on ||w0 - w*||_2 for the gamma search
  std::optional<double> gamma_override; // distance D, gamma = D / (zeta sqrt(N)); skips tuning
  NormKind s = NormKind::Two;
  double rho = 0.1;
  int max_T_cap = 100000;
  OracleMode oracle = OracleMode::Robust;
  std::optional<double> delta_override; // replaces C_Delta sigma zeta sqrt(epsilon); required for Exact
  SigmaMode sigma_mode = SigmaMode::Given;
  double c_eval = 2.0;                // E_ub = c_eval zeta (||w0|| + W0) sigma sqrt(epsilon)
  std::optional<Eigen::VectorXd> w0;  // defaults to zero

  void validate() const;
  NormRegularizer regularizer() const { return NormRegularizer::make(s, rho, zeta); }
};

/// sigma if sigma >= 1, else sqrt(sigma^2 + 1). The convergence analysis takes
/// sigma >= 1 (the intercept column alone contributes 1 to the second moment).
double sigma_proxy_of(double sigma);

/// Estimation guarantee Delta used to size T and the gamma grid.
double delta_of(PDHGConfig const &cfg, double sigma_proxy);

struct Schedule
{
  double a = 0.0; // a_k, constant in k
  double c = 0.0; // c_k = 2 - k / T
  int T = 0;
};

Schedule schedule(PDHGConfig const &cfg, double sigma_proxy, Eigen::Index n, int k);

struct PDHGState
{
  Eigen::VectorXd w;
  Eigen::VectorXd alpha;
  Eigen::VectorXd alpha_prev;
  double a_k = 0.0;
  double A_k = 0.0;
  double c_k = 2.0;
  double gamma = 0.0;
  Eigen::VectorXd w_avg_accum; // sum_j a_j w_j
  int k = 0;
};

/// Snapshot handed to an observer after each iteration.
struct IterationView
{
  int k;
  PDHGState const &state;
  Eigen::VectorXd const &beta_bar; // extrapolated duals fed to the oracle
  Eigen::VectorXd const &z_bar;    // oracle output
};

using IterationObserver = std::function<void(IterationView const &)>;

struct TuningCandidate
{
  double distance = 0.0; // D_j
  double objective_estimate = 0.0;
};

struct SolveResult
{
  Eigen::VectorXd w_hat;
  std::vector<double> objective_trace; // one entry per iteration
  long oracle_calls = 0;
  double gamma_used = 0.0;
  int T_used = 0;
  double delta = 0.0;
  double sigma_proxy = 0.0;
  double max_abs_alpha = 0.0;
  double max_abs_beta = 0.0;
  int runs = 1;
  std::vector<TuningCandidate> candidates; // filled by tune_gamma
  std::optional<Eigen::VectorXd> mu_hat;   // filled by pipeline
};

/// Runs the filtered primal-dual method on data that already carries an
/// intercept column. Uses gamma = gamma_override / (zeta sqrt(N)), or W0 when no
/// override is set.
SolveResult pdhg_solve(Dataset const &data,
                       LossFamily const &loss,
                       NormRegularizer const &reg,
                       PDHGConfig const &cfg,
                       IterationObserver const &observer = {});

/// Supplies z_k given the iteration index and the extrapolated duals.
using GradientSource = std::function<Eigen::VectorXd(int k, Eigen::VectorXd const &beta_bar)>;

/// The idealized iteration on stable samples where the caller injects z_k. Shares
/// the update code with pdhg_solve, so feeding it the oracle outputs of a
/// pdhg_solve run reproduces that run's primal iterates exactly.
SolveResult idealized_solve(Dataset const &stable,
                            LossFamily const &loss,
                            NormRegularizer const &reg,
                            PDHGConfig const &cfg,
                            GradientSource const &z_source,
                            IterationObserver const &observer = {});

/// Robust estimate of the regularized objective: trimmed mean of per-sample losses
/// plus psi(w).
double robust_objective_estimate(Dataset const &data,
                                 LossFamily const &loss,
                                 NormRegularizer const &reg,
                                 Eigen::Ref<Eigen::VectorXd const> w,
                                 double epsilon);

/// Geometric search over the distance parameter D_j = (Delta / zeta) 2^j with
/// early stopping; returns the run with the smallest robust objective estimate.
/// oracle_calls, max_abs_alpha and max_abs_beta cover every candidate run.
SolveResult tune_gamma(Dataset const &data, LossFamily const &loss, NormRegularizer const &reg, PDHGConfig const &cfg);

/// Arbitrary-mean pipeline on raw covariates without an intercept column: robust
/// centering, prepend_ones, solve, and map back to the original coordinates.
SolveResult pipeline(Dataset const &raw, LossFamily const &loss, NormRegularizer const &reg, PDHGConfig const &cfg);

/// Projection of w onto the Euclidean ball of radius 1 / (lambda sigma).
Eigen::VectorXd clip_weight(Eigen::Ref<Eigen::VectorXd const> w, double lambda, double sigma);

} // namespace rdro
