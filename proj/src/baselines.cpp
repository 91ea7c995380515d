#include "rdro/baselines.hpp"

#include "rdro/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace rdro {

void BaselineMethod::validate() const
{
  if (kind == BaselineKind::DoroCvar && !(alpha > 0 && alpha <= 1)) {
    throw InvalidArgument("CVaR level alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

std::string to_string(BaselineKind kind)
{
  switch (kind) {
  case BaselineKind::OracleProxSubgradient: return "oracle";
  case BaselineKind::VanillaERM: return "erm";
  case BaselineKind::DoroCvar: return "doro";
  case BaselineKind::TrimmedMeanEstimation: return "trimmed_mean";
  }
  return "unknown";
}

BaselineKind parse_baseline_kind(std::string_view name)
{
  if (name == "oracle") { return BaselineKind::OracleProxSubgradient; }
  if (name == "erm") { return BaselineKind::VanillaERM; }
  if (name == "doro") { return BaselineKind::DoroCvar; }
  if (name == "trimmed_mean") { return BaselineKind::TrimmedMeanEstimation; }
  throw InvalidArgument("unknown baseline '" + std::string(name) + "' (expected oracle, erm, doro or trimmed_mean)");
}

namespace {

double mean_loss(Dataset const &data, LossFamily const &loss, Eigen::VectorXd const &xw)
{
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    sum += loss_eval(loss, data.labels[i], xw[i]);
  }
  return data.size() > 0 ? sum / static_cast<double>(data.size()) : 0.0;
}

// Subgradient of the mean loss at w, given xw = X w.
Eigen::VectorXd mean_loss_subgradient(Dataset const &data, LossFamily const &loss, Eigen::VectorXd const &xw)
{
  Eigen::VectorXd slope(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    slope[i] = loss_subgradient(loss, data.labels[i], xw[i]);
  }
  if (data.size() == 0) { return Eigen::VectorXd::Zero(data.dim()); }
  return data.covariates.transpose() * slope / static_cast<double>(data.size());
}

Eigen::VectorXd start_point(std::optional<Eigen::VectorXd> const &w0, Eigen::Index d)
{
  if (!w0) { return Eigen::VectorXd::Zero(d); }
  if (w0->size() != d) { throw InvalidArgument("initial point has the wrong dimension"); }
  return *w0;
}

// Shared step rule of doro_cvar and gradient_descent. `weights` maps the current
// losses to per-sample gradient weights.
template <class WeightFn>
Eigen::VectorXd weighted_descent(Dataset const &data,
                                 LossFamily const &loss,
                                 long iters,
                                 DoroOptions const &opts,
                                 WeightFn const &weights)
{
  data.validate();
  Eigen::VectorXd w = start_point(opts.w0, data.dim());
  Eigen::Index const n = data.size();
  if (iters <= 0 || n == 0) { return w; }
  Eigen::VectorXd losses(n);
  Eigen::VectorXd slope(n);
  double scale = 0.0;
  for (long k = 1; k <= iters; ++k) {
    Eigen::VectorXd const xw = data.covariates * w;
    for (Eigen::Index i = 0; i < n; ++i) {
      losses[i] = loss_eval(loss, data.labels[i], xw[i]);
      slope[i] = loss_subgradient(loss, data.labels[i], xw[i]);
    }
    Eigen::VectorXd const q = weights(losses);
    Eigen::VectorXd const g = data.covariates.transpose() * q.cwiseProduct(slope);
    if (k == 1) {
      scale = g.norm();
      if (scale == 0.0) { return w; }
    }
    w -= (opts.step / (scale * std::sqrt(static_cast<double>(k)))) * g;
  }
  return w;
}

// Weights of the trimmed CVaR_alpha gradient: drop the floor(eps N) largest
// losses, then spread mass 1 / (alpha n_kept) over the largest kept losses, with a
// fractional weight on the boundary sample. `order` sorts the losses ascending.
Eigen::VectorXd cvar_weights(std::vector<Eigen::Index> const &order, Eigen::Index n, double epsilon, double alpha)
{
  std::size_t const drop = count_floor(epsilon * static_cast<double>(n));
  std::size_t const kept = static_cast<std::size_t>(n) - drop;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  if (kept == 0) { return q; }
  double const mass = alpha * static_cast<double>(kept);
  double const unit = 1.0 / mass;
  std::size_t const full = std::min(kept, count_floor(mass));
  double const frac = mass - static_cast<double>(full);
  // Kept samples are order[0 .. kept); the largest kept losses sit at the end.
  for (std::size_t j = 0; j < full; ++j) {
    q[order[kept - 1 - j]] = unit;
  }
  if (full < kept && frac > 0) { q[order[kept - 1 - full]] = frac * unit; }
  return q;
}

} // namespace

double dro_objective_eval(Eigen::Ref<Eigen::VectorXd const> w,
                          Dataset const &data,
                          LossFamily const &loss,
                          NormRegularizer const &reg)
{
  if (w.size() != data.dim()) { throw InvalidArgument("dro_objective_eval: w has the wrong dimension"); }
  Eigen::VectorXd const xw = data.covariates * w;
  return mean_loss(data, loss, xw) + reg.value(w);
}

OracleResult oracle_solve(Dataset const &data,
                          LossFamily const &loss,
                          NormRegularizer const &reg,
                          double tol,
                          OracleOptions const &opts)
{
  data.validate();
  if (!(tol > 0)) { throw InvalidArgument("oracle_solve needs tol > 0"); }
  if (opts.window < 1 || opts.max_iters < 1) { throw InvalidArgument("oracle_solve needs a positive budget"); }

  OracleResult res;
  Eigen::VectorXd w = start_point(opts.w0, data.dim());
  Eigen::VectorXd xw = data.covariates * w;
  res.w = w;
  res.f = mean_loss(data, loss, xw) + reg.value(w);

  Eigen::VectorXd g = mean_loss_subgradient(data, loss, xw);
  double const g0 = g.norm() + reg.weight;
  if (g0 == 0.0) { return res; }
  double c = opts.step_scale / g0;

  while (true) {
    ++res.stages;
    double const stage_start = res.f;
    double window_start = res.f;
    w = res.w;
    for (long k = 1;; ++k) {
      if (res.iterations >= opts.max_iters) {
        res.budget_exhausted = true;
        return res;
      }
      ++res.iterations;
      xw.noalias() = data.covariates * w;
      g = mean_loss_subgradient(data, loss, xw);
      double const eta = c / std::sqrt(static_cast<double>(k));
      w = reg_prox(reg, w - eta * g, eta);
      xw.noalias() = data.covariates * w;
      double const f = mean_loss(data, loss, xw) + reg.value(w);
      if (f < res.f) {
        res.f = f;
        res.w = w;
      }
      if (k % opts.window == 0) {
        if (window_start - res.f < tol) { break; }
        window_start = res.f;
      }
    }
    if (stage_start - res.f < tol) { return res; }
    c *= 0.5;
  }
}

Eigen::VectorXd erm_subgradient(Dataset const &data,
                                LossFamily const &loss,
                                NormRegularizer const &reg,
                                long iters,
                                std::optional<Eigen::VectorXd> const &w0)
{
  data.validate();
  Eigen::VectorXd w = start_point(w0, data.dim());
  if (iters <= 0 || data.size() == 0) { return w; }
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(data.dim());
  double scale = 0.0;
  for (long k = 1; k <= iters; ++k) {
    Eigen::VectorXd const xw = data.covariates * w;
    Eigen::VectorXd const g = mean_loss_subgradient(data, loss, xw);
    if (k == 1) {
      scale = g.norm() + reg.weight;
      if (scale == 0.0) { return w; }
    }
    double const eta = 1.0 / (scale * std::sqrt(static_cast<double>(k)));
    w = reg_prox(reg, w - eta * g, eta);
    avg += (w - avg) / static_cast<double>(k);
  }
  return avg;
}

Eigen::VectorXd doro_cvar(Dataset const &data,
                          LossFamily const &loss,
                          double epsilon,
                          double alpha,
                          long iters,
                          std::uint64_t seed,
                          DoroOptions const &opts)
{
  if (!(alpha > 0 && alpha <= 1)) { throw InvalidArgument("doro_cvar needs alpha in (0, 1]"); }
  if (!(epsilon >= 0 && epsilon < 0.5)) { throw InvalidArgument("doro_cvar needs epsilon in [0, 1/2)"); }
  Eigen::Index const n = data.size();
  std::vector<std::uint64_t> tie_key(static_cast<std::size_t>(n));
  std::mt19937_64 rng(seed);
  for (auto &key : tie_key) {
    key = rng();
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  auto weights = [&](Eigen::VectorXd const &losses) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (losses[a] != losses[b]) { return losses[a] < losses[b]; }
      return tie_key[static_cast<std::size_t>(a)] < tie_key[static_cast<std::size_t>(b)];
    });
    return cvar_weights(order, n, epsilon, alpha);
  };
  return weighted_descent(data, loss, iters, opts, weights);
}

Eigen::VectorXd gradient_descent(Dataset const &data, LossFamily const &loss, long iters, DoroOptions const &opts)
{
  double const n = static_cast<double>(data.size());
  auto weights = [n](Eigen::VectorXd const &losses) {
    return Eigen::VectorXd::Constant(losses.size(), 1.0 / (1.0 * n)).eval();
  };
  return weighted_descent(data, loss, iters, opts, weights);
}

Eigen::VectorXd doro_mean_estimation(Eigen::Ref<Eigen::MatrixXd const> points,
                                     double epsilon,
                                     double alpha,
                                     long iters,
                                     Eigen::Ref<Eigen::VectorXd const> w_init,
                                     double step)
{
  if (!(alpha > 0 && alpha <= 1)) { throw InvalidArgument("doro_mean_estimation needs alpha in (0, 1]"); }
  if (!(epsilon >= 0 && epsilon < 0.5)) { throw InvalidArgument("doro_mean_estimation needs epsilon in [0, 1/2)"); }
  if (w_init.size() != points.cols()) { throw InvalidArgument("doro_mean_estimation: w_init has the wrong dimension"); }
  Eigen::Index const n = points.rows();
  Eigen::VectorXd w = w_init;
  if (n == 0) { return w; }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Eigen::VectorXd losses(n);
  for (long k = 0; k < iters; ++k) {
    losses = 0.5 * (points.rowwise() - w.transpose()).rowwise().squaredNorm();
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return losses[a] < losses[b]; });
    Eigen::VectorXd const q = cvar_weights(order, n, epsilon, alpha);
    // Gradient of sum_i q_i 0.5 ||x_i - w||^2 with sum_i q_i = 1.
    Eigen::VectorXd const g = w - points.transpose() * q;
    w -= step * g;
  }
  return w;
}

LowerBoundResult dro_sup_lower_bound(Eigen::Ref<Eigen::VectorXd const> w,
                                     Dataset const &data,
                                     LossFamily const &loss,
                                     double rho,
                                     NormKind r,
                                     PerturbationGrid const &grid)
{
  data.validate();
  Eigen::Index const n = data.size();
  Eigen::Index const d = data.dim();
  if (w.size() != d) { throw InvalidArgument("dro_sup_lower_bound: w has the wrong dimension"); }
  if (n < 1 || n > 20 || d < 1 || d > 3) {
    throw InvalidArgument("dro_sup_lower_bound is a brute-force check for N <= 20 and d <= 3");
  }
  if (!(rho >= 0)) { throw InvalidArgument("rho must be nonnegative"); }
  if (!(grid.magnitude_step > 0) || grid.directions < 2) { throw InvalidArgument("bad perturbation grid"); }

  // Directions on the unit l_r sphere. Only u . w matters, and a convex loss of
  // z + m (u . w) is maximized at an extreme projection, so keep the range.
  std::vector<Eigen::VectorXd> dirs;
  double const pi = std::acos(-1.0);
  if (d == 1) {
    dirs.push_back(Eigen::VectorXd::Constant(1, 1.0));
    dirs.push_back(Eigen::VectorXd::Constant(1, -1.0));
  } else if (d == 2) {
    for (int j = 0; j < grid.directions; ++j) {
      double const t = 2.0 * pi * j / grid.directions;
      dirs.push_back(Eigen::Vector2d(std::cos(t), std::sin(t)));
    }
  } else {
    double const golden = pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < grid.directions; ++j) {
      double const zc = 1.0 - 2.0 * (j + 0.5) / grid.directions;
      double const rad = std::sqrt(1.0 - zc * zc);
      dirs.push_back(Eigen::Vector3d(rad * std::cos(golden * j), rad * std::sin(golden * j), zc));
    }
  }
  double p_max = -std::numeric_limits<double>::infinity();
  double p_min = std::numeric_limits<double>::infinity();
  for (auto &u : dirs) {
    u /= lp_norm(u, r);
    double const p = u.dot(w);
    p_max = std::max(p_max, p);
    p_min = std::min(p_min, p);
  }

  Eigen::VectorXd const z = data.covariates * w;
  Eigen::VectorXd base(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    base[i] = loss_eval(loss, data.labels[i], z[i]);
  }
  double const empirical = base.mean();
  auto gain = [&](Eigen::Index i, double m) {
    double const up = loss_eval(loss, data.labels[i], z[i] + m * p_max);
    double const down = loss_eval(loss, data.labels[i], z[i] + m * p_min);
    return std::max(up, down) - base[i];
  };

  LowerBoundResult out;
  out.value = empirical;
  double const budget = rho * static_cast<double>(n); // sum of per-sample transport distances
  std::size_t const steps = count_floor(budget / grid.magnitude_step);
  if (rho > 0 && steps == 0) {
    out.coarse = true;
    return out;
  }

  // Whole budget on one sample, at any grid magnitude up to the budget.
  double best_single = 0.0;
  std::size_t best_step = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t t = 1; t <= steps; ++t) {
      double const g = gain(i, static_cast<double>(t) * grid.magnitude_step);
      if (g > best_single) {
        best_single = g;
        best_step = t;
      }
    }
  }
  // Even split: every sample moves by rho (rounded down to the grid).
  double const share = std::floor(rho / grid.magnitude_step + 1e-9) * grid.magnitude_step;
  double split = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    split += std::max(0.0, gain(i, share));
  }
  double const best = std::max(best_single, split);
  out.value = empirical + best / static_cast<double>(n);
  out.coarse = best == best_single && best_single > 0 && best_step == 1 && steps > 1;
  return out;
}

} // namespace rdro
