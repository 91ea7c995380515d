#include "rdro/losses.hpp"

#include "rdro/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace rdro {

namespace {

constexpr double kBisectionTol = 1e-12;
constexpr int kBisectionMaxIter = 200;

void check_label(LossFamily const &family, double y)
{
  if (family.is_classification() && y != 1.0 && y != -1.0) {
    throw InvalidArgument("classification loss " + to_string(family.kind) + " needs a label in {-1, +1}, got " +
                          std::to_string(y));
  }
}

double sign(double t) { return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0); }

// x log x with the 0 log 0 = 0 convention.
double xlogx(double x) { return x <= 0.0 ? 0.0 : x * std::log(x); }

// log(1 + exp(-m)) without overflow.
double softplus_neg(double m)
{
  if (m > 0) { return std::log1p(std::exp(-m)); }
  return -m + std::log1p(std::exp(m));
}

// Root of the strictly increasing map v -> log((1+v)/(-v)) + (v - u)/tau on (-1, 0),
// i.e. the prox of tau * (logistic conjugate for y = +1) at u.
double logistic_conjugate_prox(double u, double tau)
{
  double lo = -1.0;
  double hi = 0.0;
  for (int it = 0; it < kBisectionMaxIter; ++it) {
    double const mid = 0.5 * (lo + hi);
    if (hi - lo < kBisectionTol) { return mid; }
    double const phi = std::log1p(mid) - std::log(-mid) + (mid - u) / tau;
    if (phi > 0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  if (hi - lo < kBisectionTol) { return 0.5 * (lo + hi); }
  throw ConvergenceError("logistic conjugate prox: bisection did not converge");
}

} // namespace

std::string to_string(LossKind kind)
{
  switch (kind) {
  case LossKind::LAD: return "lad";
  case LossKind::Huber: return "huber";
  case LossKind::Hinge: return "hinge";
  case LossKind::Logistic: return "logistic";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name)
{
  if (name == "lad") { return LossKind::LAD; }
  if (name == "huber") { return LossKind::Huber; }
  if (name == "hinge") { return LossKind::Hinge; }
  if (name == "logistic") { return LossKind::Logistic; }
  throw InvalidArgument("unknown loss '" + std::string(name) + "' (expected lad, huber, hinge or logistic)");
}

double loss_eval(LossFamily const &family, double y, double z)
{
  check_label(family, y);
  switch (family.kind) {
  case LossKind::LAD: return std::abs(z - y);
  case LossKind::Huber: {
    double const t = std::abs(z - y);
    return t <= 1.0 ? 0.5 * t * t : t - 0.5;
  }
  case LossKind::Hinge: return std::max(0.0, 1.0 - y * z);
  case LossKind::Logistic: return softplus_neg(y * z);
  }
  return 0.0;
}

double loss_subgradient(LossFamily const &family, double y, double z)
{
  check_label(family, y);
  switch (family.kind) {
  case LossKind::LAD: return sign(z - y);
  case LossKind::Huber: {
    double const t = z - y;
    return std::abs(t) <= 1.0 ? t : sign(t);
  }
  case LossKind::Hinge: {
    double const m = y * z;
    if (m < 1.0) { return -y; }
    if (m > 1.0) { return 0.0; }
    return -0.5 * y;
  }
  case LossKind::Logistic: {
    double const m = y * z;
    // -y * sigmoid(-m)
    double const s = m >= 0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
    return -y * s;
  }
  }
  return 0.0;
}

std::pair<double, double> conjugate_domain(LossFamily const &family, double y)
{
  check_label(family, y);
  switch (family.kind) {
  case LossKind::LAD:
  case LossKind::Huber: return {-1.0, 1.0};
  case LossKind::Hinge:
  case LossKind::Logistic: return y > 0 ? std::pair{-1.0, 0.0} : std::pair{0.0, 1.0};
  }
  return {0.0, 0.0};
}

ExtendedReal conjugate_eval(LossFamily const &family, double y, double alpha)
{
  auto const [lo, hi] = conjugate_domain(family, y);
  if (alpha < lo || alpha > hi) { return ExtendedReal::plus_infinity(); }
  switch (family.kind) {
  case LossKind::LAD: return ExtendedReal::finite(alpha * y);
  case LossKind::Huber: return ExtendedReal::finite(0.5 * alpha * alpha + alpha * y);
  case LossKind::Hinge: return ExtendedReal::finite(y * alpha);
  case LossKind::Logistic: {
    double const a = y * alpha; // in [-1, 0]
    return ExtendedReal::finite(xlogx(-a) + xlogx(1.0 + a));
  }
  }
  return ExtendedReal::plus_infinity();
}

double conjugate_prox(LossFamily const &family,
                      double y,
                      double x_dot_w,
                      double alpha_prev,
                      double a,
                      double n,
                      double gamma)
{
  check_label(family, y);
  if (!(gamma > 0) || !(a > 0) || !(n > 0)) {
    throw InvalidArgument("conjugate_prox needs a > 0, N > 0 and gamma > 0");
  }
  // Equivalent to prox_{tau g}(alpha_prev + tau * x_dot_w) with tau = a / (N gamma).
  double const tau = a / (n * gamma);
  switch (family.kind) {
  case LossKind::LAD: return std::clamp(alpha_prev + tau * (x_dot_w - y), -1.0, 1.0);
  case LossKind::Huber: return std::clamp((alpha_prev + tau * (x_dot_w - y)) / (1.0 + tau), -1.0, 1.0);
  case LossKind::Hinge: {
    // Work in the y = +1 frame, v' = y v.
    double const u = y * alpha_prev + tau * (y * x_dot_w - 1.0);
    return y * std::clamp(u, -1.0, 0.0);
  }
  case LossKind::Logistic: {
    double const u = y * alpha_prev + tau * y * x_dot_w;
    return y * logistic_conjugate_prox(u, tau);
  }
  }
  return 0.0;
}

std::string to_string(NormKind s)
{
  switch (s) {
  case NormKind::One: return "1";
  case NormKind::Two: return "2";
  case NormKind::Inf: return "inf";
  }
  return "unknown";
}

NormKind parse_norm_kind(std::string_view name)
{
  if (name == "1") { return NormKind::One; }
  if (name == "2") { return NormKind::Two; }
  if (name == "inf") { return NormKind::Inf; }
  throw InvalidArgument("unknown norm exponent '" + std::string(name) + "' (expected 1, 2 or inf)");
}

double dual_exponent(NormKind s)
{
  switch (s) {
  case NormKind::One: return std::numeric_limits<double>::infinity();
  case NormKind::Two: return 2.0;
  case NormKind::Inf: return 1.0;
  }
  return 2.0;
}

double lp_norm(Eigen::Ref<Eigen::VectorXd const> v, NormKind s)
{
  if (v.size() == 0) { return 0.0; }
  switch (s) {
  case NormKind::One: return v.lpNorm<1>();
  case NormKind::Two: return v.norm();
  case NormKind::Inf: return v.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

double NormRegularizer::value(Eigen::Ref<Eigen::VectorXd const> w) const { return weight * lp_norm(w, s); }

Eigen::VectorXd project_l1_ball(Eigen::Ref<Eigen::VectorXd const> v, double radius)
{
  if (radius <= 0) { return Eigen::VectorXd::Zero(v.size()); }
  if (v.lpNorm<1>() <= radius) { return v; }
  // Sort-based projection onto the simplex of the magnitudes.
  std::vector<double> mag(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    mag[i] = std::abs(v[i]);
  }
  std::sort(mag.begin(), mag.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mag.size(); ++j) {
    cumsum += mag[j];
    double const t = (cumsum - radius) / static_cast<double>(j + 1);
    if (mag[j] - t > 0) { theta = t; }
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = sign(v[i]) * std::max(std::abs(v[i]) - theta, 0.0);
  }
  return out;
}

Eigen::VectorXd reg_prox(NormRegularizer const &reg, Eigen::Ref<Eigen::VectorXd const> v, double tau)
{
  if (!(tau > 0)) { throw InvalidArgument("reg_prox needs tau > 0"); }
  double const thresh = tau * reg.weight;
  if (thresh == 0.0) { return v; }
  switch (reg.s) {
  case NormKind::Two: {
    double const nrm = v.norm();
    if (nrm <= thresh) { return Eigen::VectorXd::Zero(v.size()); }
    return (1.0 - thresh / nrm) * v;
  }
  case NormKind::One: {
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out[i] = sign(v[i]) * std::max(std::abs(v[i]) - thresh, 0.0);
    }
    return out;
  }
  case NormKind::Inf:
    // Moreau: prox of the inf-norm is the residual of projecting onto the dual (l1) ball.
    return v - project_l1_ball(v, thresh);
  }
  return v;
}

} // namespace rdro
