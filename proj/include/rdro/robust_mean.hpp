#pragma once

#include "rdro/data_model.hpp"

#include <Eigen/Core>

#include <vector>

namespace rdro {

/// Per-sample weights of the spectral filter and loop diagnostics.
struct FilterState
{
  Eigen::VectorXd weights;                  // starts at 1/N, never increases
  int iterations = 0;
  std::vector<double> removed_mass_history; // weight removed by each pass
};

struct RobustMeanResult
{
  Eigen::VectorXd mean;
  FilterState state;
};

/// Spectral filtering mean estimator. Repeatedly downweights points with large
/// projections onto the top principal direction of the weighted covariance until
/// the remaining total weight drops below 1 - 2 epsilon. Needs only epsilon, not
/// the covariance bound. Rows of `points` are samples. 0 < epsilon < 1/2.
RobustMeanResult robust_mean_estimation_detailed(Eigen::Ref<Eigen::MatrixXd const> points, double epsilon);
Eigen::VectorXd robust_mean_estimation(Eigen::Ref<Eigen::MatrixXd const> points, double epsilon);

struct EigenPair
{
  Eigen::VectorXd vector; // unit norm
  double value = 0.0;
  int iterations = 0;
};

/// Power iteration on a symmetric PSD matrix from the normalized all-ones vector.
/// Stops once ||S v - lambda v|| <= 1e-8 lambda or after 1000 iterations.
EigenPair top_eigenvector(Eigen::Ref<Eigen::MatrixXd const> s);

struct StabilityReport
{
  double mean_deviation = 0.0; // ||mu_S - mu||_2
  double cov_opnorm = 0.0;     // ||Cov(S)||_op
  bool is_stable = false;
};

/// Checks the two stability conditions: mean deviation <= epsilon and covariance
/// operator norm <= c_stab * sigma2.
StabilityReport stability_check(Eigen::Ref<Eigen::MatrixXd const> points,
                                Eigen::Ref<Eigen::VectorXd const> mu,
                                double sigma2,
                                double epsilon,
                                double c_stab = 4.0);

/// Indices of samples within 2 sigma sqrt(d / epsilon) of the sample mean, where
/// d is the number of non-intercept covariates.
std::vector<std::size_t> stability_filter(Dataset const &data, double epsilon);

/// Drops ceil(2 epsilon N) values from each end and averages the rest.
double trimmed_mean_1d(std::vector<double> values, double epsilon);

/// trimmed_mean_1d applied to each column separately.
Eigen::VectorXd coordinatewise_trimmed_mean(Eigen::Ref<Eigen::MatrixXd const> points, double epsilon);

/// Robust estimate of (1/N) sum_i beta_i x_i from corrupted covariates: runs the
/// spectral filter on {beta_i x_i} with parameter 2 epsilon. Requires
/// |beta_i| <= 3 zeta; a violation is a caller bug and throws ContractError.
Eigen::VectorXd inexact_hybrid_gradient_oracle(Eigen::Ref<Eigen::VectorXd const> beta,
                                               Eigen::Ref<Eigen::MatrixXd const> covariates,
                                               double epsilon,
                                               double zeta);

} // namespace rdro
