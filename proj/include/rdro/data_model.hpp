#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rdro {

// floor / ceil of a sample-count expression such as epsilon * N, tolerant to the
// representation error of epsilon (0.29 * 100 must give 29, not 28).
std::size_t count_floor(double x);
std::size_t count_ceil(double x);

/// Covariates and labels. `corrupted` is ground-truth bookkeeping filled in by
/// `contaminate`; solver code never reads it.
struct Dataset
{
  Eigen::MatrixXd covariates; // N x d, one sample per row
  Eigen::VectorXd labels;     // N
  std::optional<std::vector<std::size_t>> corrupted;
  double sigma = 1.0;         // known bound: ||Cov(x)||_op <= sigma^2
  bool has_intercept = false; // first column is the constant 1

  Eigen::Index size() const { return covariates.rows(); }
  Eigen::Index dim() const { return covariates.cols(); }
  void validate() const;
};

enum class Task
{
  Regression,
  Classification
};

struct GaussianLaw
{};
struct StudentTLaw
{
  double dof = 5.0;
};
using CovariateLaw = std::variant<GaussianLaw, StudentTLaw>;

struct NoiseSpec
{
  Task task = Task::Regression;
  double noise_std = 0.1;  // regression: additive centered Gaussian noise
  double flip_prob = 0.0;  // classification: probability of flipping sign(w.x)
};

/// Draws N samples with d - 1 raw covariates (mean 0, covariance sigma^2 I) and
/// labels from the planted model w = [w0, w~] of dimension d. The returned
/// dataset has no intercept column.
Dataset generate_synthetic(int d,
                           int n,
                           Eigen::Ref<Eigen::VectorXd const> planted_w,
                           NoiseSpec const &noise,
                           CovariateLaw const &law,
                           double sigma,
                           std::uint64_t seed);

Dataset prepend_ones(Dataset const &data);

/// Subtracts mu_hat from the non-intercept covariates.
Dataset center_with_estimate(Dataset const &data, Eigen::Ref<Eigen::VectorXd const> mu_hat);

struct NoAdversary
{};

/// Outliers stacked at magnitude * direction with labels that disagree with
/// `target`. Unset fields are filled from the clean data (see contaminate).
struct FarCluster
{
  std::optional<Eigen::VectorXd> direction;
  std::optional<double> magnitude;
  std::optional<Eigen::VectorXd> target; // [w0, w~], adversary's reference predictor
};

/// Outliers at sqrt(d) e_1, invisible to norm-based filters.
struct DoroCounterexample
{};

/// Scales the replaced covariates by `magnitude` and flips their labels.
struct LabelFlipPlusLeverage
{
  double magnitude = 10.0;
};

using Adversary = std::variant<NoAdversary, FarCluster, DoroCounterexample, LabelFlipPlusLeverage>;

std::string adversary_name(Adversary const &adv);

struct ContaminationSpec
{
  double epsilon = 0.1;
  Adversary adversary = NoAdversary{};
};

/// Strong contamination: replaces exactly floor(epsilon N) rows, chosen from the
/// seed, after inspecting the clean sample. Records the replaced rows.
Dataset contaminate(Dataset const &data, ContaminationSpec const &spec, std::uint64_t seed);

/// Complement of data.corrupted.
std::vector<std::size_t> clean_indices(Dataset const &data);
Dataset select_rows(Dataset const &data, std::vector<std::size_t> const &rows);

/// Operator norm of the empirical (1/N-normalized) covariance of the rows of x.
double covariance_opnorm(Eigen::Ref<Eigen::MatrixXd const> x);
Eigen::MatrixXd empirical_covariance(Eigen::Ref<Eigen::MatrixXd const> x);

} // namespace rdro
