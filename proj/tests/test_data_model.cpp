#include "rdro/data_model.hpp"
#include "rdro/dataset_io.hpp"
#include "rdro/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace rdro;
using rdro::testing::Draw;

namespace {

Dataset gaussian_regression(int d, int n, std::uint64_t seed, double sigma = 1.0)
{
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  if (d > 1) { w[1] = 1.0; }
  return generate_synthetic(d, n, w, NoiseSpec{}, GaussianLaw{}, sigma, seed);
}

std::filesystem::path temp_path(std::string const &name)
{
  return std::filesystem::temp_directory_path() / ("rdro_test_" + name);
}

} // namespace

TEST_CASE("count helpers are tolerant to representation error")
{
  CHECK(count_floor(0.29 * 100) == 29);
  CHECK(count_floor(0.1 * 100) == 10);
  CHECK(count_ceil(2 * 0.1 * 100) == 20);
  CHECK(count_ceil(20.5) == 21);
  CHECK(count_floor(9.99) == 9);
  CHECK(count_floor(0) == 0);
}

TEST_CASE("generate_synthetic: pure-noise labels and a centered sample")
{
  Eigen::VectorXd const w = Eigen::VectorXd::Zero(2);
  NoiseSpec noise;
  noise.noise_std = 0.5;
  Dataset const data = generate_synthetic(2, 1000, w, noise, GaussianLaw{}, 1.0, 7);
  CHECK(data.size() == 1000);
  CHECK(data.dim() == 1);
  CHECK(std::abs(data.covariates.col(0).mean()) <= 5.0 / std::sqrt(1000.0));
  // Labels carry no signal: correlation with the covariate is small.
  double const corr = (data.covariates.col(0).array() * data.labels.array()).mean();
  CHECK(std::abs(corr) <= 5 * 0.5 / std::sqrt(1000.0));
}

TEST_CASE("generate_synthetic: covariance operator norm")
{
  Dataset const data = gaussian_regression(5, 10000, 3);
  double const op = testing::top_eigenvalue(testing::plain_covariance(data.covariates));
  CHECK(op >= 0.8);
  CHECK(op <= 1.3);
  Dataset const scaled = gaussian_regression(5, 10000, 3, 2.0);
  double const op2 = testing::top_eigenvalue(testing::plain_covariance(scaled.covariates));
  CHECK(op2 == doctest::Approx(4 * op).epsilon(1e-9));
  CHECK(covariance_opnorm(data.covariates) == doctest::Approx(op).epsilon(1e-9));
}

TEST_CASE("generate_synthetic: Student-t law matches the covariance bound")
{
  Eigen::VectorXd const w = Eigen::VectorXd::Zero(4);
  Dataset const data = generate_synthetic(4, 40000, w, NoiseSpec{}, StudentTLaw{5}, 1.0, 4);
  double const op = testing::top_eigenvalue(testing::plain_covariance(data.covariates));
  CHECK(op >= 0.8);
  CHECK(op <= 1.3);
  CHECK_THROWS_AS(generate_synthetic(4, 10, w, NoiseSpec{}, StudentTLaw{2}, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_synthetic(4, 10, w, NoiseSpec{}, StudentTLaw{1.5}, 1.0, 1), InvalidArgument);
}

TEST_CASE("generate_synthetic: classification labels and flips")
{
  Eigen::VectorXd w(3);
  w << 0.0, 2.0, -1.0;
  NoiseSpec noise;
  noise.task = Task::Classification;
  Dataset const clean = generate_synthetic(3, 2000, w, noise, GaussianLaw{}, 1.0, 5);
  for (Eigen::Index i = 0; i < clean.size(); ++i) {
    CHECK(std::abs(clean.labels[i]) == 1.0);
    double const margin = clean.covariates.row(i).dot(w.tail(2));
    if (margin != 0) { CHECK(clean.labels[i] == (margin > 0 ? 1.0 : -1.0)); }
  }
  noise.flip_prob = 0.2;
  Dataset const noisy = generate_synthetic(3, 20000, w, noise, GaussianLaw{}, 1.0, 5);
  double flipped = 0;
  for (Eigen::Index i = 0; i < noisy.size(); ++i) {
    double const margin = noisy.covariates.row(i).dot(w.tail(2));
    flipped += (noisy.labels[i] * margin < 0) ? 1 : 0;
  }
  CHECK(flipped / noisy.size() == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("generate_synthetic is bitwise reproducible")
{
  Dataset const a = gaussian_regression(6, 500, 42);
  Dataset const b = gaussian_regression(6, 500, 42);
  Dataset const c = gaussian_regression(6, 500, 43);
  CHECK(a.covariates == b.covariates);
  CHECK(a.labels == b.labels);
  CHECK(a.covariates != c.covariates);
  CHECK_THROWS_AS(generate_synthetic(3, 10, Eigen::VectorXd::Zero(2), NoiseSpec{}, GaussianLaw{}, 1.0, 0),
                  InvalidArgument);
}

TEST_CASE("prepend_ones examples")
{
  Dataset data;
  data.covariates = Eigen::MatrixXd(2, 1);
  data.covariates << 2, 3;
  data.labels = Eigen::Vector2d(1, -1);
  Dataset const out = prepend_ones(data);
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 2, 1, 3;
  CHECK(out.covariates == expected);
  CHECK(out.has_intercept);
  CHECK(out.labels == data.labels);

  Dataset empty;
  empty.covariates.resize(0, 3);
  empty.labels.resize(0);
  Dataset const e = prepend_ones(empty);
  CHECK(e.size() == 0);
  CHECK(e.dim() == 4);
}

TEST_CASE("prepend_ones preserves the covariance operator norm, zero first row and column")
{
  Draw draw(11);
  for (int t = 0; t < 10; ++t) {
    Dataset data = gaussian_regression(draw.integer(2, 8), 300, 100 + t);
    Dataset const out = prepend_ones(data);
    Eigen::MatrixXd const before = testing::plain_covariance(data.covariates);
    Eigen::MatrixXd const after = testing::plain_covariance(out.covariates);
    CHECK(std::abs(testing::top_eigenvalue(before) - testing::top_eigenvalue(after)) <= 1e-12);
    CHECK(after.row(0).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(after.col(0).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((after.bottomRightCorner(data.dim(), data.dim()) - before).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("center_with_estimate")
{
  Dataset const data = gaussian_regression(4, 50, 1);
  Dataset const same = center_with_estimate(data, Eigen::VectorXd::Zero(3));
  CHECK(same.covariates == data.covariates);

  Dataset one;
  one.covariates = Eigen::RowVector3d(1, 2, 3);
  one.labels = Eigen::VectorXd::Constant(1, 0.5);
  Dataset const zero = center_with_estimate(one, Eigen::Vector3d(1, 2, 3));
  CHECK(zero.covariates.norm() == 0.0);

  Dataset const with_ones = prepend_ones(one);
  Dataset const centered = center_with_estimate(with_ones, Eigen::Vector3d(1, 2, 3));
  CHECK(centered.covariates(0, 0) == 1.0);
  CHECK(centered.covariates.rightCols(3).norm() == 0.0);

  CHECK_THROWS_AS(center_with_estimate(data, Eigen::VectorXd::Zero(2)), InvalidArgument);
}

TEST_CASE("contaminate: none is the identity")
{
  Dataset const data = gaussian_regression(4, 100, 2);
  Dataset const out = contaminate(data, ContaminationSpec{0.1, NoAdversary{}}, 1);
  CHECK(out.covariates == data.covariates);
  CHECK(out.labels == data.labels);
  REQUIRE(out.corrupted);
  CHECK(out.corrupted->empty());
}

TEST_CASE("contaminate: counts and changed rows")
{
  Dataset const data = gaussian_regression(4, 100, 2);
  for (Adversary adv : {Adversary{FarCluster{}}, Adversary{DoroCounterexample{}}, Adversary{LabelFlipPlusLeverage{}}}) {
    for (double eps : {0.1, 0.29, 0.05}) {
      Dataset const out = contaminate(data, ContaminationSpec{eps, adv}, 9);
      REQUIRE(out.corrupted);
      CHECK(out.corrupted->size() == count_floor(eps * 100));
      std::set<std::size_t> const bad(out.corrupted->begin(), out.corrupted->end());
      std::size_t changed = 0;
      for (Eigen::Index i = 0; i < data.size(); ++i) {
        bool const differs =
          out.covariates.row(i) != data.covariates.row(i) || out.labels[i] != data.labels[i];
        if (differs) {
          ++changed;
          CHECK(bad.count(static_cast<std::size_t>(i)) == 1);
        }
      }
      CHECK(changed <= count_floor(eps * 100));
    }
  }
  Dataset const ten = contaminate(data, ContaminationSpec{0.1, FarCluster{}}, 3);
  CHECK(ten.corrupted->size() == 10);
}

TEST_CASE("contaminate: errors")
{
  Dataset const data = gaussian_regression(4, 100, 2);
  CHECK_THROWS_AS(contaminate(data, ContaminationSpec{0.5, FarCluster{}}, 1), InvalidArgument);
  CHECK_THROWS_AS(contaminate(data, ContaminationSpec{0.0, FarCluster{}}, 1), InvalidArgument);
  CHECK_THROWS_AS(contaminate(data, ContaminationSpec{-0.1, FarCluster{}}, 1), InvalidArgument);
  CHECK_THROWS_AS(contaminate(data, ContaminationSpec{0.005, FarCluster{}}, 1), InvalidArgument);
}

TEST_CASE("contaminate: FarCluster geometry and adversarial labels")
{
  Eigen::VectorXd w(4);
  w << 0.0, 1.0, 0.0, 0.0;
  NoiseSpec noise;
  noise.task = Task::Classification;
  Dataset const data = generate_synthetic(4, 1000, w, noise, GaussianLaw{}, 1.0, 3);
  Dataset const out = contaminate(data, ContaminationSpec{0.1, FarCluster{}}, 4);
  double const radius = 10.0 * std::sqrt(3 / 0.1);
  for (auto i : *out.corrupted) {
    auto const row = out.covariates.row(static_cast<Eigen::Index>(i));
    CHECK(row.norm() == doctest::Approx(radius));
    // Outliers lie along the target direction (~ +e1) with the opposite label.
    CHECK(row[0] > 0.9 * radius);
    CHECK(out.labels[static_cast<Eigen::Index>(i)] == -1.0);
  }
  FarCluster explicit_fc;
  explicit_fc.direction = Eigen::Vector3d(0, 0, 1);
  explicit_fc.magnitude = 5.0;
  Dataset const out2 = contaminate(data, ContaminationSpec{0.1, explicit_fc}, 4);
  for (auto i : *out2.corrupted) {
    CHECK((out2.covariates.row(static_cast<Eigen::Index>(i)) - Eigen::RowVector3d(0, 0, 5)).norm() == 0.0);
  }
}

TEST_CASE("contaminate: DoroCounterexample outliers have clean-looking norms")
{
  Eigen::VectorXd const w = Eigen::VectorXd::Zero(101);
  Dataset const data = generate_synthetic(101, 2000, w, NoiseSpec{}, GaussianLaw{}, 1.0, 8);
  Dataset const out = contaminate(data, ContaminationSpec{0.1, DoroCounterexample{}}, 2);
  double clean_norm = 0;
  for (auto i : clean_indices(out)) {
    clean_norm += out.covariates.row(static_cast<Eigen::Index>(i)).norm();
  }
  clean_norm /= static_cast<double>(clean_indices(out).size());
  for (auto i : *out.corrupted) {
    CHECK(out.covariates.row(static_cast<Eigen::Index>(i)).norm() == doctest::Approx(10.0));
  }
  CHECK(std::abs(clean_norm - 10.0) < 0.5);
}

TEST_CASE("contaminate: LabelFlipPlusLeverage")
{
  Dataset const data = gaussian_regression(3, 200, 6);
  Dataset const out = contaminate(data, ContaminationSpec{0.2, LabelFlipPlusLeverage{4.0}}, 1);
  for (auto i : *out.corrupted) {
    auto const r = static_cast<Eigen::Index>(i);
    CHECK((out.covariates.row(r) - 4.0 * data.covariates.row(r)).norm() <= 1e-12);
    CHECK(out.labels[r] == -data.labels[r]);
  }
}

TEST_CASE("contaminate is deterministic in the seed and clean_indices complements")
{
  Dataset const data = gaussian_regression(3, 200, 6);
  Dataset const a = contaminate(data, ContaminationSpec{0.1, FarCluster{}}, 5);
  Dataset const b = contaminate(data, ContaminationSpec{0.1, FarCluster{}}, 5);
  CHECK(*a.corrupted == *b.corrupted);
  CHECK(a.covariates == b.covariates);
  auto const clean = clean_indices(a);
  CHECK(clean.size() + a.corrupted->size() == 200);
  Dataset const sub = select_rows(a, clean);
  CHECK(sub.size() == 180);
  CHECK(adversary_name(FarCluster{}) == "far_cluster");
  CHECK(adversary_name(NoAdversary{}) == "none");
}

TEST_CASE("Dataset::validate")
{
  Dataset bad;
  bad.covariates = Eigen::MatrixXd::Zero(3, 2);
  bad.labels = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("CSV round trip")
{
  Dataset const data = gaussian_regression(4, 30, 12);
  std::stringstream ss;
  write_csv(data, ss);
  std::string const text = ss.str();
  CHECK(text.rfind("x0,x1,x2,y\n", 0) == 0);
  Dataset const back = read_csv(ss);
  CHECK(back.covariates == data.covariates);
  CHECK(back.labels == data.labels);

  std::istringstream bad_header("a,b,y\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(bad_header), InvalidArgument);
  std::istringstream short_row("x0,y\n1\n");
  CHECK_THROWS_AS(read_csv(short_row), InvalidArgument);
  std::istringstream junk("x0,y\n1,abc\n");
  CHECK_THROWS_AS(read_csv(junk), InvalidArgument);
}

TEST_CASE("binary and sidecar round trip")
{
  Dataset data = prepend_ones(gaussian_regression(3, 25, 13, 2.5));
  data = contaminate(data, ContaminationSpec{0.2, FarCluster{}}, 3);
  auto const bin = temp_path("data.bin");
  auto const side = temp_path("side.json");
  write_binary(data, bin);
  write_sidecar(data, side);
  Dataset back = read_binary(bin);
  CHECK(back.covariates == data.covariates);
  CHECK(back.labels == data.labels);
  CHECK(back.has_intercept);
  CHECK(back.sigma == 2.5);
  CHECK_FALSE(back.corrupted);
  read_sidecar(back, side);
  REQUIRE(back.corrupted);
  CHECK(*back.corrupted == *data.corrupted);

  std::ofstream(bin, std::ios::binary) << "JUNK";
  CHECK_THROWS_AS(read_binary(bin), InvalidArgument);
  std::filesystem::remove(bin);
  std::filesystem::remove(side);
}

TEST_CASE("read_points_csv")
{
  std::istringstream in("a,b\n1,2\n3,4.5\n");
  Eigen::MatrixXd const m = read_points_csv(in);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 2);
  CHECK(m(1, 1) == 4.5);
  CHECK(m(0, 1) == 2.0);
}
