#pragma once

#include "rdro/data_model.hpp"
#include "rdro/losses.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rdro {

enum class BaselineKind
{
  OracleProxSubgradient,
  VanillaERM,
  DoroCvar,
  TrimmedMeanEstimation
};

struct BaselineMethod
{
  BaselineKind kind = BaselineKind::VanillaERM;
  double alpha = 1.0; // CVaR level for DoroCvar, in (0, 1]

  void validate() const;
};

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view name); // "oracle", "erm", "doro", "trimmed_mean"

/// (1/N) sum_i l_{y_i}(x_i . w) + psi(w); for these loss/cost pairs this equals
/// the Wasserstein-1 worst case over the ball of radius rho.
double dro_objective_eval(Eigen::Ref<Eigen::VectorXd const> w,
                          Dataset const &data,
                          LossFamily const &loss,
                          NormRegularizer const &reg);

struct OracleOptions
{
  long max_iters = 1000000;
  int window = 500;          // iterations between progress checks
  double step_scale = 1.0;   // multiplies the auto-scaled initial step
  std::optional<Eigen::VectorXd> w0;
};

struct OracleResult
{
  Eigen::VectorXd w;
  double f = 0.0;
  long iterations = 0;
  int stages = 0;
  bool budget_exhausted = false; // warning: tol was not reached
};

/// Reference minimizer of the regularized empirical objective by restarted
/// proximal subgradient descent. Within a stage the step is c / sqrt(k), with c
/// scaled from the initial subgradient norm; a stage ends when a window improves
/// the best objective by less than tol, and the next stage restarts from the best
/// iterate with c halved. Stops when a whole stage improves by less than tol.
OracleResult oracle_solve(Dataset const &data,
                          LossFamily const &loss,
                          NormRegularizer const &reg,
                          double tol,
                          OracleOptions const &opts = {});

/// Averaged proximal subgradient descent on the (possibly corrupted) objective,
/// steps eta0 / sqrt(k) with eta0 = 1 / ||initial subgradient||.
Eigen::VectorXd erm_subgradient(Dataset const &data,
                                LossFamily const &loss,
                                NormRegularizer const &reg,
                                long iters,
                                std::optional<Eigen::VectorXd> const &w0 = std::nullopt);

struct DoroOptions
{
  double step = 1.0; // step k is step / sqrt(k) scaled by 1 / ||initial gradient||
  std::optional<Eigen::VectorXd> w0;
};

/// Trimmed-loss CVaR iteration: drop the floor(epsilon N) largest current losses,
/// minimize the CVaR_alpha surrogate in eta (an order statistic of the kept
/// losses) and take one subgradient step in w. The seed breaks ties between equal
/// losses.
Eigen::VectorXd doro_cvar(Dataset const &data,
                          LossFamily const &loss,
                          double epsilon,
                          double alpha,
                          long iters,
                          std::uint64_t seed,
                          DoroOptions const &opts = {});

/// Full-batch subgradient descent with the same step rule as doro_cvar; the
/// epsilon = 0, alpha = 1 reference.
Eigen::VectorXd gradient_descent(Dataset const &data, LossFamily const &loss, long iters, DoroOptions const &opts = {});

/// doro_cvar for mean estimation with the loss 0.5 ||x - w||^2; with step 1 and
/// alpha = 1 each iteration sets w to the mean of the kept points.
Eigen::VectorXd doro_mean_estimation(Eigen::Ref<Eigen::MatrixXd const> points,
                                     double epsilon,
                                     double alpha,
                                     long iters,
                                     Eigen::Ref<Eigen::VectorXd const> w_init,
                                     double step = 1.0);

struct PerturbationGrid
{
  double magnitude_step = 1e-3;
  int directions = 720; // points on the unit circle (d = 2) or sphere (d = 3)
};

struct LowerBoundResult
{
  double value = 0.0;
  bool coarse = false; // best value found at the smallest nonzero magnitude
};

/// Brute-force lower bound on sup { E_Q l : W1(P_hat, Q) <= rho } with transport
/// cost ||x - x'||_r and immovable labels. Searches single-sample transports with
/// the whole budget rho N and the even split of the budget over all samples, over
/// a grid of directions on the unit l_r sphere and of magnitudes. Tiny instances
/// only (N <= 20, d <= 3).
LowerBoundResult dro_sup_lower_bound(Eigen::Ref<Eigen::VectorXd const> w,
                                     Dataset const &data,
                                     LossFamily const &loss,
                                     double rho,
                                     NormKind r,
                                     PerturbationGrid const &grid = {});

} // namespace rdro
