#pragma once

#include "rdro/baselines.hpp"
#include "rdro/data_model.hpp"
#include "rdro/dro_solver.hpp"
#include "rdro/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rdro {

struct DataSpec
{
  int d = 20;        // includes the intercept slot: d - 1 raw covariates
  int n = 10000;
  double sigma = 1.0;
  CovariateLaw law = GaussianLaw{};
  double noise_std = 0.1;
  double flip_prob = 0.05;
  double planted_norm = 3.0;     // ||w~*|| for a random planted direction
  double planted_intercept = 0.0;
  std::optional<Eigen::VectorXd> planted_w; // explicit [w0, w~], overrides the random draw
  std::uint64_t planted_seed = 0;
  std::vector<std::uint64_t> seeds{0};
};

struct ExperimentConfig
{
  DataSpec data;
  std::vector<Adversary> adversaries{FarCluster{}};
  std::vector<double> epsilons{0.1}; // 0 runs the uncorrupted problem with the exact oracle
  std::vector<std::string> methods{"pdhg"}; // pdhg, erm, doro, trimmed_mean, oracle
  LossKind loss = LossKind::Hinge;
  PDHGConfig solver;                 // epsilon is overwritten per row
  double exact_delta = 1e-3;         // Delta for epsilon = 0 rows
  long erm_iters = 2000;
  long doro_iters = 2000;
  double doro_alpha = 1.0;
  double oracle_tol = 1e-6;
  long oracle_max_iters = 1000000;
  int threads = 0;                   // 0: RD_THREADS or hardware concurrency
  std::optional<std::filesystem::path> csv_output;
  std::optional<std::filesystem::path> json_output;

  void validate() const;
};

ExperimentConfig parse_experiment_config(std::string const &json_text);
ExperimentConfig load_experiment_config(std::filesystem::path const &path);

struct MetricsRow
{
  std::string method;
  std::string adversary;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double excess_clean_objective = 0.0;
  double param_error = 0.0;
  double wallclock = 0.0; // seconds
  long oracle_calls = 0;
  std::string status = "ok"; // "ok" or "error: <message>"

  bool ok() const { return status == "ok"; }
  bool operator==(MetricsRow const &) const = default;
};

/// Planted [w0, w~] for a data spec (explicit, or a seeded random direction).
Eigen::VectorXd planted_weights(DataSpec const &spec);

/// The dataset a run_experiment group solves: generated from the seed, then
/// contaminated unless epsilon is 0 or the adversary is none.
Dataset experiment_dataset(ExperimentConfig const &cfg, std::uint64_t seed, double epsilon, Adversary const &adversary);

struct GroundTruth
{
  Dataset stable; // clean rows that pass the stability filter, with intercept column
  Eigen::VectorXd w_star;
  double f_star = 0.0;
};

/// Reference optimum of the regularized objective on the clean stable subset of
/// `data` (which must carry its corruption bookkeeping when epsilon > 0).
GroundTruth ground_truth(ExperimentConfig const &cfg, Dataset const &data, double epsilon);

/// Rows in config order: seed, then epsilon, then adversary, then method. A
/// failing method yields a row with an error status; the run continues.
std::vector<MetricsRow> run_experiment(ExperimentConfig const &cfg);

enum class ReportFormat
{
  Csv,
  Json
};

/// CSV columns: method,adversary,epsilon,seed,excess_clean_objective,param_error,
/// wallclock,oracle_calls,status. Floats use 9 significant digits.
void emit_report(std::vector<MetricsRow> const &rows, ReportFormat format, std::ostream &os);
void emit_report(std::vector<MetricsRow> const &rows, ReportFormat format, std::filesystem::path const &path);
std::vector<MetricsRow> read_report(std::istream &is, ReportFormat format);
std::vector<MetricsRow> read_report(std::filesystem::path const &path, ReportFormat format);

/// Worker count: RD_THREADS if set, else `requested` if positive, else the
/// hardware concurrency.
int worker_count(int requested);

} // namespace rdro
