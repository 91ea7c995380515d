#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <utility>

namespace rdro {

enum class LossKind
{
  LAD,
  Huber,
  Hinge,
  Logistic
};

std::string to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// A 1-Lipschitz generalized linear loss l_y(z) of the scalar prediction z = w.x.
// Regression losses act on z - y, classification losses on y * z with y in {-1, +1}.
struct LossFamily
{
  LossKind kind = LossKind::Hinge;
  double zeta = 1.0;

  static LossFamily make(LossKind kind) { return LossFamily{kind, 1.0}; }
  bool is_classification() const { return kind == LossKind::Hinge || kind == LossKind::Logistic; }
};

// Value of a convex function that may be +infinity. Never encodes infinity as a
// floating point overflow.
struct ExtendedReal
{
  double value = 0.0;
  bool infinite = false;

  static constexpr ExtendedReal plus_infinity() { return ExtendedReal{0.0, true}; }
  static constexpr ExtendedReal finite(double v) { return ExtendedReal{v, false}; }
  bool is_finite() const { return !infinite; }
};

double loss_eval(LossFamily const &family, double y, double z);

// One element of the subdifferential of z -> l_y(z). At kinks the midpoint of the
// one-sided derivatives is returned.
double loss_subgradient(LossFamily const &family, double y, double z);

// Closed interval [lo, hi] on which the conjugate l_y^* is finite.
std::pair<double, double> conjugate_domain(LossFamily const &family, double y);

ExtendedReal conjugate_eval(LossFamily const &family, double y, double alpha);

// argmax_v (a/N)(v * x_dot_w - l_y^*(v)) - (gamma/2)(v - alpha_prev)^2
double conjugate_prox(LossFamily const &family,
                      double y,
                      double x_dot_w,
                      double alpha_prev,
                      double a,
                      double n,
                      double gamma);

enum class NormKind
{
  One,
  Two,
  Inf
};

std::string to_string(NormKind s);
NormKind parse_norm_kind(std::string_view name);

// Dual exponent r of s, i.e. 1/r + 1/s = 1 (inf is represented as +infinity).
double dual_exponent(NormKind s);
double lp_norm(Eigen::Ref<Eigen::VectorXd const> v, NormKind s);

// psi(w) = weight * ||w||_s, where weight = rho * zeta.
struct NormRegularizer
{
  NormKind s = NormKind::Two;
  double weight = 0.0;

  static NormRegularizer make(NormKind s, double rho, double zeta) { return NormRegularizer{s, rho * zeta}; }
  double value(Eigen::Ref<Eigen::VectorXd const> w) const;
};

// argmin_u tau * psi(u) + 0.5 * ||u - v||^2
Eigen::VectorXd reg_prox(NormRegularizer const &reg, Eigen::Ref<Eigen::VectorXd const> v, double tau);

// Euclidean projection onto {u : ||u||_1 <= radius}.
Eigen::VectorXd project_l1_ball(Eigen::Ref<Eigen::VectorXd const> v, double radius);

} // namespace rdro
