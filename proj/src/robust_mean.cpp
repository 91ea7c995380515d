#include "rdro/robust_mean.hpp"

#include "rdro/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rdro {

namespace {

constexpr int kPowerMaxIter = 1000;
constexpr double kPowerRelTol = 1e-8;

} // namespace

EigenPair top_eigenvector(Eigen::Ref<Eigen::MatrixXd const> s)
{
  Eigen::Index const k = s.rows();
  if (s.cols() != k) { throw InvalidArgument("top_eigenvector needs a square matrix"); }
  EigenPair out;
  if (k == 0) { return out; }
  double const scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw InvalidArgument("top_eigenvector needs a symmetric matrix");
  }
  out.vector = Eigen::VectorXd::Unit(k, 0);
  if (s.cwiseAbs().maxCoeff() == 0.0) { return out; }

  Eigen::VectorXd v = Eigen::VectorXd::Ones(k) / std::sqrt(static_cast<double>(k));
  Eigen::VectorXd sv = s * v;
  // All-ones may lie in the null space; fall back to the first basis vector that does not.
  for (Eigen::Index j = 0; sv.norm() == 0.0 && j < k; ++j) {
    v = Eigen::VectorXd::Unit(k, j);
    sv = s * v;
  }
  if (sv.norm() == 0.0) { return out; }

  double lambda = 0.0;
  for (int it = 1; it <= kPowerMaxIter; ++it) {
    v = sv / sv.norm();
    sv.noalias() = s * v;
    lambda = v.dot(sv);
    out.iterations = it;
    if ((sv - lambda * v).norm() <= kPowerRelTol * lambda) { break; }
    if (sv.norm() == 0.0) { break; }
  }
  out.vector = v;
  out.value = std::max(lambda, 0.0);
  return out;
}

RobustMeanResult robust_mean_estimation_detailed(Eigen::Ref<Eigen::MatrixXd const> points, double epsilon)
{
  if (!(epsilon > 0 && epsilon < 0.5)) {
    throw InvalidArgument("robust_mean_estimation needs 0 < epsilon < 1/2, got " + std::to_string(epsilon));
  }
  Eigen::Index const n = points.rows();
  Eigen::Index const k = points.cols();
  if (n < 2) { throw InvalidArgument("robust_mean_estimation needs at least two points"); }

  RobustMeanResult res;
  res.state.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  res.mean = Eigen::VectorXd::Zero(k);
  if (k == 0) { return res; }

  Eigen::VectorXd &q = res.state.weights;
  Eigen::MatrixXd centered(n, k);
  Eigen::VectorXd h(n);
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(n));

  while (q.sum() >= 1.0 - 2.0 * epsilon) {
    double const total = q.sum();
    res.mean = points.transpose() * q / total;
    centered = points.rowwise() - res.mean.transpose();
    Eigen::MatrixXd const scaled = centered.array().colwise() * q.array().sqrt();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose(), 1.0 / total);
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();

    auto const top = top_eigenvector(cov);
    h = (centered * top.vector).array().square();

    // Largest t with weight{h >= t} >= epsilon: scan scores in decreasing order.
    order.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (q[i] > 0) { order.push_back(i); }
    }
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return h[a] > h[b] || (h[a] == h[b] && a < b);
    });
    double threshold = 0.0;
    double cum = 0.0;
    for (auto i : order) {
      cum += q[i];
      threshold = h[i];
      if (cum >= epsilon) { break; }
    }
    if (!(threshold > 0)) {
      // Crossing fell on zero scores; use the smallest positive score instead.
      threshold = 0.0;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (h[*it] > 0) {
          threshold = h[*it];
          break;
        }
      }
    }
    double max_f = 0.0;
    for (auto i : order) {
      if (h[i] >= threshold && h[i] > 0) { max_f = std::max(max_f, h[i]); }
    }
    if (max_f == 0.0) { break; } // zero spread in every direction

    double removed = 0.0;
    for (auto i : order) {
      if (h[i] >= threshold && h[i] > 0) {
        double const frac = h[i] / max_f;
        removed += q[i] * frac;
        q[i] *= (1.0 - frac);
      }
    }
    res.state.removed_mass_history.push_back(removed);
    ++res.state.iterations;
    if (res.state.iterations > n) { throw ContractError("robust_mean_estimation exceeded N filter passes"); }
  }
  return res;
}

Eigen::VectorXd robust_mean_estimation(Eigen::Ref<Eigen::MatrixXd const> points, double epsilon)
{
  return robust_mean_estimation_detailed(points, epsilon).mean;
}

StabilityReport stability_check(Eigen::Ref<Eigen::MatrixXd const> points,
                                Eigen::Ref<Eigen::VectorXd const> mu,
                                double sigma2,
                                double epsilon,
                                double c_stab)
{
  if (mu.size() != points.cols()) { throw InvalidArgument("stability_check: mu has the wrong dimension"); }
  StabilityReport rep;
  if (points.rows() > 0) {
    Eigen::VectorXd const mean = points.colwise().mean().transpose();
    rep.mean_deviation = (mean - mu).norm();
    rep.cov_opnorm = covariance_opnorm(points);
  }
  rep.is_stable = rep.mean_deviation <= epsilon && rep.cov_opnorm <= c_stab * sigma2;
  return rep;
}

std::vector<std::size_t> stability_filter(Dataset const &data, double epsilon)
{
  if (!(epsilon > 0 && epsilon < 0.5)) { throw InvalidArgument("stability_filter needs 0 < epsilon < 1/2"); }
  data.validate();
  Eigen::Index const offset = data.has_intercept ? 1 : 0;
  Eigen::Index const k = data.dim() - offset;
  std::vector<std::size_t> keep;
  if (data.size() == 0) { return keep; }
  auto const raw = data.covariates.rightCols(k);
  Eigen::RowVectorXd const mean = raw.colwise().mean();
  double const radius = 2.0 * data.sigma * std::sqrt(static_cast<double>(k) / epsilon);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if ((raw.row(i) - mean).norm() <= radius) { keep.push_back(static_cast<std::size_t>(i)); }
  }
  return keep;
}

double trimmed_mean_1d(std::vector<double> values, double epsilon)
{
  if (!(epsilon >= 0 && epsilon < 0.25)) { throw InvalidArgument("trimmed_mean_1d needs 0 <= epsilon < 1/4"); }
  std::size_t const n = values.size();
  std::size_t const cut = count_ceil(2.0 * epsilon * static_cast<double>(n));
  if (n == 0 || 2 * cut >= n) {
    throw InvalidArgument("trimmed_mean_1d: trimming " + std::to_string(cut) + " values per side leaves nothing of " +
                          std::to_string(n));
  }
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = cut; i < n - cut; ++i) {
    sum += values[i];
  }
  return sum / static_cast<double>(n - 2 * cut);
}

Eigen::VectorXd coordinatewise_trimmed_mean(Eigen::Ref<Eigen::MatrixXd const> points, double epsilon)
{
  Eigen::VectorXd out(points.cols());
  std::vector<double> column(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    Eigen::Map<Eigen::VectorXd>(column.data(), points.rows()) = points.col(j);
    out[j] = trimmed_mean_1d(column, epsilon);
  }
  return out;
}

Eigen::VectorXd inexact_hybrid_gradient_oracle(Eigen::Ref<Eigen::VectorXd const> beta,
                                               Eigen::Ref<Eigen::MatrixXd const> covariates,
                                               double epsilon,
                                               double zeta)
{
  if (beta.size() != covariates.rows()) { throw InvalidArgument("oracle: beta and covariates disagree on N"); }
  if (!(epsilon > 0 && epsilon < 0.25)) { throw InvalidArgument("oracle needs 0 < epsilon < 1/4"); }
  double const bound = 3.0 * zeta + 1e-9;
  if (beta.size() > 0 && beta.cwiseAbs().maxCoeff() > bound) {
    throw ContractError("oracle: |beta_i| exceeds 3 zeta (max " + std::to_string(beta.cwiseAbs().maxCoeff()) + ")");
  }
  Eigen::MatrixXd const scaled = covariates.array().colwise() * beta.array();
  return robust_mean_estimation(scaled, 2.0 * epsilon);
}

} // namespace rdro
