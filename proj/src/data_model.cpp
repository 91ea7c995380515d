#include "rdro/data_model.hpp"

#include "rdro/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rdro {

std::size_t count_floor(double x)
{
  if (!(x > 0)) { return 0; }
  return static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
}

std::size_t count_ceil(double x)
{
  if (!(x > 0)) { return 0; }
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

void Dataset::validate() const
{
  if (covariates.rows() != labels.size()) {
    throw InvalidArgument("dataset has " + std::to_string(covariates.rows()) + " covariate rows but " +
                          std::to_string(labels.size()) + " labels");
  }
  if (!(sigma > 0)) { throw InvalidArgument("dataset sigma must be positive"); }
}

Dataset generate_synthetic(int d,
                           int n,
                           Eigen::Ref<Eigen::VectorXd const> planted_w,
                           NoiseSpec const &noise,
                           CovariateLaw const &law,
                           double sigma,
                           std::uint64_t seed)
{
  if (d < 1 || n < 0) { throw InvalidArgument("generate_synthetic needs d >= 1 and N >= 0"); }
  if (planted_w.size() != d) {
    throw InvalidArgument("planted_w has dimension " + std::to_string(planted_w.size()) + ", expected d = " +
                          std::to_string(d));
  }
  if (!(sigma > 0)) { throw InvalidArgument("sigma must be positive"); }
  if (auto const *t = std::get_if<StudentTLaw>(&law); t && !(t->dof > 2.0)) {
    throw InvalidArgument("Student-t covariates need dof > 2 for a finite covariance");
  }
  if (noise.flip_prob < 0 || noise.flip_prob > 1) { throw InvalidArgument("flip_prob must lie in [0, 1]"); }

  int const k = d - 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::optional<std::student_t_distribution<double>> student;
  double t_scale = 1.0;
  if (auto const *t = std::get_if<StudentTLaw>(&law)) {
    student.emplace(t->dof);
    t_scale = std::sqrt((t->dof - 2.0) / t->dof);
  }

  Dataset out;
  out.covariates.resize(n, k);
  out.labels.resize(n);
  out.sigma = sigma;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      out.covariates(i, j) = student ? sigma * t_scale * (*student)(rng) : sigma * gauss(rng);
    }
    double const pred = planted_w[0] + out.covariates.row(i).dot(planted_w.tail(k));
    if (noise.task == Task::Regression) {
      out.labels[i] = pred + noise.noise_std * gauss(rng);
    } else {
      double y = pred >= 0 ? 1.0 : -1.0;
      if (unif(rng) < noise.flip_prob) { y = -y; }
      out.labels[i] = y;
    }
  }
  return out;
}

Dataset prepend_ones(Dataset const &data)
{
  data.validate();
  Dataset out = data;
  out.covariates.resize(data.size(), data.dim() + 1);
  out.covariates.col(0).setOnes();
  out.covariates.rightCols(data.dim()) = data.covariates;
  out.has_intercept = true;
  return out;
}

Dataset center_with_estimate(Dataset const &data, Eigen::Ref<Eigen::VectorXd const> mu_hat)
{
  data.validate();
  Eigen::Index const offset = data.has_intercept ? 1 : 0;
  Eigen::Index const k = data.dim() - offset;
  if (mu_hat.size() != k) {
    throw InvalidArgument("mu_hat has dimension " + std::to_string(mu_hat.size()) + ", covariates have " +
                          std::to_string(k));
  }
  Dataset out = data;
  out.covariates.rightCols(k).rowwise() -= mu_hat.transpose();
  return out;
}

std::string adversary_name(Adversary const &adv)
{
  struct
  {
    std::string operator()(NoAdversary const &) const { return "none"; }
    std::string operator()(FarCluster const &) const { return "far_cluster"; }
    std::string operator()(DoroCounterexample const &) const { return "doro_counterexample"; }
    std::string operator()(LabelFlipPlusLeverage const &) const { return "label_flip_leverage"; }
  } visitor;
  return std::visit(visitor, adv);
}

namespace {

// The adversary's reference predictor when none is supplied: least squares on the clean sample.
Eigen::VectorXd fit_target(Dataset const &data, Eigen::Index offset)
{
  Eigen::Index const k = data.dim() - offset;
  Eigen::MatrixXd design(data.size(), k + 1);
  design.col(0).setOnes();
  design.rightCols(k) = data.covariates.rightCols(k);
  return design.colPivHouseholderQr().solve(data.labels);
}

} // namespace

Dataset contaminate(Dataset const &data, ContaminationSpec const &spec, std::uint64_t seed)
{
  data.validate();
  Dataset out = data;
  if (std::holds_alternative<NoAdversary>(spec.adversary)) {
    if (!out.corrupted) { out.corrupted.emplace(); }
    return out;
  }
  if (!(spec.epsilon > 0 && spec.epsilon < 0.5)) {
    throw InvalidArgument("contamination epsilon must lie in (0, 1/2), got " + std::to_string(spec.epsilon));
  }
  auto const n = static_cast<std::size_t>(data.size());
  auto const m = count_floor(spec.epsilon * static_cast<double>(n));
  if (m < 1) { throw InvalidArgument("epsilon * N < 1: nothing to corrupt"); }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(chosen.begin(), chosen.end());

  Eigen::Index const offset = data.has_intercept ? 1 : 0;
  Eigen::Index const k = data.dim() - offset;
  bool const classification = (data.labels.array().abs() == 1.0).all();

  auto raw_row = [&](std::size_t i) { return out.covariates.row(static_cast<Eigen::Index>(i)).tail(k); };

  if (auto const *fc = std::get_if<FarCluster>(&spec.adversary)) {
    Eigen::VectorXd const target = fc->target ? *fc->target : fit_target(data, offset);
    if (target.size() != k + 1) { throw InvalidArgument("FarCluster target must have dimension d (with intercept)"); }
    Eigen::VectorXd direction;
    if (fc->direction) {
      direction = *fc->direction;
      if (direction.size() != k) { throw InvalidArgument("FarCluster direction has the wrong dimension"); }
    } else if (k > 0 && target.tail(k).norm() > 0) {
      direction = target.tail(k);
    } else {
      direction = Eigen::VectorXd::Unit(std::max<Eigen::Index>(k, 1), 0).head(k);
    }
    if (direction.norm() > 0) { direction.normalize(); }
    double const magnitude =
      fc->magnitude ? *fc->magnitude : 10.0 * data.sigma * std::sqrt(static_cast<double>(k) / spec.epsilon);
    Eigen::VectorXd const point = magnitude * direction;
    double const pred = target[0] + (k > 0 ? point.dot(target.tail(k)) : 0.0);
    double const label = classification ? (pred >= 0 ? -1.0 : 1.0) : -pred;
    for (auto i : chosen) {
      raw_row(i) = point.transpose();
      out.labels[static_cast<Eigen::Index>(i)] = label;
    }
  } else if (std::holds_alternative<DoroCounterexample>(spec.adversary)) {
    if (k < 1) { throw InvalidArgument("DoroCounterexample needs at least one covariate"); }
    Eigen::VectorXd const point = std::sqrt(static_cast<double>(k)) * Eigen::VectorXd::Unit(k, 0);
    for (auto i : chosen) {
      raw_row(i) = point.transpose();
    }
  } else if (auto const *lf = std::get_if<LabelFlipPlusLeverage>(&spec.adversary)) {
    for (auto i : chosen) {
      raw_row(i) *= lf->magnitude;
      out.labels[static_cast<Eigen::Index>(i)] = -out.labels[static_cast<Eigen::Index>(i)];
    }
  }

  std::vector<std::size_t> merged = chosen;
  if (data.corrupted) {
    merged.insert(merged.end(), data.corrupted->begin(), data.corrupted->end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  }
  out.corrupted = std::move(merged);
  return out;
}

std::vector<std::size_t> clean_indices(Dataset const &data)
{
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(data.size()));
  std::vector<bool> bad(static_cast<std::size_t>(data.size()), false);
  if (data.corrupted) {
    for (auto i : *data.corrupted) {
      bad.at(i) = true;
    }
  }
  for (std::size_t i = 0; i < bad.size(); ++i) {
    if (!bad[i]) { out.push_back(i); }
  }
  return out;
}

Dataset select_rows(Dataset const &data, std::vector<std::size_t> const &rows)
{
  Dataset out;
  out.sigma = data.sigma;
  out.has_intercept = data.has_intercept;
  out.covariates.resize(static_cast<Eigen::Index>(rows.size()), data.dim());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto const i = static_cast<Eigen::Index>(rows[r]);
    out.covariates.row(static_cast<Eigen::Index>(r)) = data.covariates.row(i);
    out.labels[static_cast<Eigen::Index>(r)] = data.labels[i];
  }
  return out;
}

Eigen::MatrixXd empirical_covariance(Eigen::Ref<Eigen::MatrixXd const> x)
{
  if (x.rows() == 0) { return Eigen::MatrixXd::Zero(x.cols(), x.cols()); }
  Eigen::RowVectorXd const mean = x.colwise().mean();
  Eigen::MatrixXd const centered = x.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(x.rows());
}

double covariance_opnorm(Eigen::Ref<Eigen::MatrixXd const> x)
{
  if (x.cols() == 0) { return 0.0; }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(empirical_covariance(x), Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

} // namespace rdro
