#include "rdro/errors.hpp"
#include "rdro/robust_mean.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace rdro;
using rdro::testing::Draw;

TEST_CASE("robust_mean_estimation: identical points return the point")
{
  Eigen::MatrixXd points(30, 3);
  points.rowwise() = Eigen::RowVector3d(1.5, -2, 7);
  for (double eps : {0.01, 0.1, 0.2}) {
    RobustMeanResult const r = robust_mean_estimation_detailed(points, eps);
    CHECK((r.mean - Eigen::Vector3d(1.5, -2, 7)).norm() <= 1e-12);
    CHECK(r.state.iterations <= 1);
  }
}

TEST_CASE("robust_mean_estimation: far cluster is removed")
{
  int const k = 16;
  Eigen::VectorXd outlier = Eigen::VectorXd::Zero(k);
  outlier[0] = 10 * std::sqrt(static_cast<double>(k));
  Eigen::MatrixXd const x = testing::gaussian_with_cluster(5000, k, 0.1, outlier, 21);
  Eigen::VectorXd const naive = x.colwise().mean();
  CHECK(naive.norm() >= 0.1 * outlier.norm() - 0.3);
  Eigen::VectorXd const mu = robust_mean_estimation(x, 0.1);
  CHECK(mu.norm() <= 3 * std::sqrt(0.1));
}

TEST_CASE("robust_mean_estimation: clean Gaussian stays near the sample mean")
{
  Draw draw(22);
  int const n = 5000;
  int const k = 10;
  Eigen::MatrixXd const x = draw.normal_matrix(n, k);
  Eigen::VectorXd const sample_mean = x.colwise().mean();
  Eigen::VectorXd const mu = robust_mean_estimation(x, 0.05);
  CHECK((mu - sample_mean).norm() <= 4 * std::sqrt(static_cast<double>(k) / n));
}

TEST_CASE("robust_mean_estimation: weights, termination and determinism")
{
  Draw draw(23);
  for (int t = 0; t < 10; ++t) {
    int const n = draw.integer(50, 400);
    int const k = draw.integer(1, 6);
    double const eps = draw.uniform(0.01, 0.24);
    Eigen::VectorXd outlier = 20 * draw.normal_vector(k);
    Eigen::MatrixXd const x = testing::gaussian_with_cluster(n, k, eps, outlier, 100 + t);
    RobustMeanResult const a = robust_mean_estimation_detailed(x, eps);
    RobustMeanResult const b = robust_mean_estimation_detailed(x, eps);
    CHECK(a.mean == b.mean);
    CHECK(a.state.weights == b.state.weights);
    CHECK(a.state.iterations <= n);
    CHECK(a.state.weights.minCoeff() >= 0.0);
    CHECK(a.state.weights.maxCoeff() <= 1.0 / n + 1e-15);
    CHECK(a.state.weights.sum() < 1 - 2 * eps + 1e-12);
    for (double removed : a.state.removed_mass_history) {
      CHECK(removed > 0.0);
    }
  }
}

TEST_CASE("robust_mean_estimation: input errors")
{
  Eigen::MatrixXd const x = Eigen::MatrixXd::Ones(10, 2);
  CHECK_THROWS_AS(robust_mean_estimation(x, 0.0), InvalidArgument);
  CHECK_THROWS_AS(robust_mean_estimation(x, 0.5), InvalidArgument);
  CHECK_THROWS_AS(robust_mean_estimation(Eigen::MatrixXd::Ones(1, 2), 0.1), InvalidArgument);
}

TEST_CASE("top_eigenvector examples")
{
  EigenPair const id = top_eigenvector(Eigen::Matrix3d::Identity());
  CHECK(id.value == doctest::Approx(1.0));
  CHECK(id.vector.norm() == doctest::Approx(1.0));

  Eigen::Matrix2d diag;
  diag << 3, 0, 0, 1;
  EigenPair const d = top_eigenvector(diag);
  CHECK(d.value == doctest::Approx(3.0));
  CHECK(std::abs(d.vector[0]) == doctest::Approx(1.0));

  EigenPair const zero = top_eigenvector(Eigen::Matrix3d::Zero());
  CHECK(zero.value == 0.0);
  CHECK(zero.vector == Eigen::Vector3d(1, 0, 0));

  // The all-ones start is orthogonal to the top eigenvector here.
  Eigen::Matrix2d orth;
  orth << 1, -1, -1, 1;
  EigenPair const o = top_eigenvector(orth);
  CHECK(o.value == doctest::Approx(2.0));
}

TEST_CASE("top_eigenvector matches a dense eigensolver")
{
  Draw draw(24);
  for (int t = 0; t < 40; ++t) {
    int const k = draw.integer(1, 50);
    Eigen::MatrixXd const g = draw.normal_matrix(k, k + 5);
    Eigen::MatrixXd const s = g * g.transpose() / (k + 5);
    EigenPair const p = top_eigenvector(s);
    double const ref = testing::top_eigenvalue(s);
    CHECK(std::abs(p.value - ref) <= 1e-6 * std::max(1.0, ref));
    CHECK(p.value >= 0.0);
  }
}

TEST_CASE("top_eigenvector rejects asymmetric input")
{
  Eigen::Matrix2d m;
  m << 1, 2, 0, 1;
  CHECK_THROWS_AS(top_eigenvector(m), InvalidArgument);
}

TEST_CASE("stability_check examples")
{
  Eigen::MatrixXd same(10, 2);
  same.rowwise() = Eigen::RowVector2d(1, 1);
  StabilityReport const r = stability_check(same, Eigen::Vector2d(1, 1), 1.0, 0.1);
  CHECK(r.mean_deviation == 0.0);
  CHECK(r.cov_opnorm == 0.0);
  CHECK(r.is_stable);

  Draw draw(25);
  Eigen::MatrixXd const wide = 10 * draw.normal_matrix(500, 3);
  CHECK_FALSE(stability_check(wide, Eigen::Vector3d::Zero(), 0.01, 10.0).is_stable);

  Eigen::MatrixXd const g = draw.normal_matrix(10000, 10);
  StabilityReport const gr = stability_check(g, Eigen::VectorXd::Zero(10), 1.0, 0.1);
  CHECK(gr.is_stable);
  CHECK(gr.cov_opnorm == doctest::Approx(testing::top_eigenvalue(testing::plain_covariance(g))).epsilon(1e-9));
}

TEST_CASE("stability_filter examples")
{
  Dataset one;
  one.covariates = Eigen::RowVector2d(3, 4);
  one.labels = Eigen::VectorXd::Zero(1);
  CHECK(stability_filter(one, 0.1) == std::vector<std::size_t>{0});

  Draw draw(26);
  Dataset g;
  g.covariates = draw.normal_matrix(10000, 10);
  g.labels = Eigen::VectorXd::Zero(10000);
  CHECK(stability_filter(g, 0.1).size() >= 9000);

  // A far point is excluded: radius 2 sigma sqrt(d / eps) with d = 10, eps = 0.1.
  Dataset far = g;
  far.covariates.row(0).setZero();
  far.covariates(0, 0) = 3 * std::sqrt(10 / 0.1);
  auto const kept = stability_filter(far, 0.1);
  CHECK(std::find(kept.begin(), kept.end(), std::size_t{0}) == kept.end());

  // The intercept column is not a covariate for the radius.
  Dataset const with_ones = prepend_ones(g);
  CHECK(stability_filter(with_ones, 0.1) == stability_filter(g, 0.1));
}

TEST_CASE("trimmed_mean_1d examples")
{
  CHECK(trimmed_mean_1d(std::vector<double>(20, 4.5), 0.1) == 4.5);
  std::vector<double> v(98, 0.0);
  v.push_back(1e6);
  v.push_back(-1e6);
  CHECK(trimmed_mean_1d(v, 0.1) == 0.0);

  Draw draw(27);
  std::vector<double> values;
  std::vector<double> clean;
  for (int i = 0; i < 10000; ++i) {
    double const x = draw.normal();
    if (i % 20 == 0) {
      values.push_back(x + 100);
    } else {
      values.push_back(x);
      clean.push_back(x);
    }
  }
  double clean_mean = 0;
  for (double c : clean) { clean_mean += c; }
  clean_mean /= static_cast<double>(clean.size());
  CHECK(std::abs(trimmed_mean_1d(values, 0.05) - clean_mean) <= 0.1);

  CHECK_THROWS_AS(trimmed_mean_1d({1.0, 2.0}, 0.2), InvalidArgument);
  CHECK_THROWS_AS(trimmed_mean_1d({1.0, 2.0, 3.0}, 0.3), InvalidArgument);
}

TEST_CASE("coordinatewise_trimmed_mean")
{
  Eigen::MatrixXd x(10, 2);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    x(i, 1) = -i;
  }
  x(9, 0) = 1e9;
  Eigen::VectorXd const m = coordinatewise_trimmed_mean(x, 0.05);
  CHECK(m[0] == doctest::Approx(4.5));
  CHECK(m[1] == doctest::Approx(-4.5));
}

TEST_CASE("scaling-stability bound under bounded reweighting")
{
  Draw draw(28);
  for (int t = 0; t < 100; ++t) {
    int const n = draw.integer(5, 200);
    int const k = draw.integer(1, 8);
    double const zeta = draw.uniform(0.1, 3);
    Eigen::MatrixXd x = draw.normal_matrix(n, k);
    x.rowwise() += draw.normal_vector(k).transpose();
    Eigen::VectorXd beta(n);
    for (int i = 0; i < n; ++i) { beta[i] = draw.uniform(-zeta, zeta); }
    Eigen::MatrixXd const scaled = beta.asDiagonal() * x;
    double const lhs = covariance_opnorm(scaled);
    Eigen::VectorXd const mean = x.colwise().mean();
    double const rhs = zeta * zeta * (covariance_opnorm(x) + mean.squaredNorm());
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("inexact_hybrid_gradient_oracle examples")
{
  Draw draw(29);
  Eigen::MatrixXd const x = draw.normal_matrix(2000, 5);
  CHECK(inexact_hybrid_gradient_oracle(Eigen::VectorXd::Zero(2000), x, 0.1, 1.0).norm() == 0.0);

  Eigen::VectorXd const ones = Eigen::VectorXd::Ones(2000);
  Eigen::VectorXd const z = inexact_hybrid_gradient_oracle(ones, x, 0.1, 1.0);
  Eigen::VectorXd const sample_mean = x.colwise().mean();
  CHECK((z - sample_mean).norm() <= 3 * std::sqrt(0.1));

  CHECK_THROWS_AS(inexact_hybrid_gradient_oracle(Eigen::VectorXd::Constant(2000, 3.5), x, 0.1, 1.0), ContractError);
  CHECK_NOTHROW(inexact_hybrid_gradient_oracle(Eigen::VectorXd::Constant(2000, 3.0), x, 0.1, 1.0));
  CHECK_THROWS_AS(inexact_hybrid_gradient_oracle(ones, x, 0.25, 1.0), InvalidArgument);
}

TEST_CASE("inexact_hybrid_gradient_oracle on far-cluster contamination")
{
  int const k = 20;
  Eigen::VectorXd const w = Eigen::VectorXd::Zero(k + 1);
  Dataset const clean = generate_synthetic(k + 1, 4000, w, NoiseSpec{}, GaussianLaw{}, 1.0, 30);
  Dataset const bad = contaminate(clean, ContaminationSpec{0.1, FarCluster{}}, 31);
  Dataset const kept = select_rows(bad, clean_indices(bad));
  Eigen::VectorXd const clean_mean = kept.covariates.colwise().mean();
  Eigen::VectorXd const naive = bad.covariates.colwise().mean();
  Eigen::VectorXd const z = inexact_hybrid_gradient_oracle(Eigen::VectorXd::Ones(bad.size()), bad.covariates, 0.1, 1.0);
  CHECK((z - clean_mean).norm() <= 3 * std::sqrt(0.1));
  CHECK((naive - clean_mean).norm() >= std::sqrt(k * 0.1));
}
