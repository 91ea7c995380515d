#include "rdro/harness.hpp"

#include "rdro/errors.hpp"
#include "rdro/robust_mean.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace rdro {

using json = nlohmann::json;

namespace {

std::vector<std::string> const kMethods{"pdhg", "erm", "doro", "trimmed_mean", "oracle"};
std::vector<std::string> const kColumns{"method",      "adversary",              "epsilon",
                                        "seed",        "excess_clean_objective", "param_error",
                                        "wallclock",   "oracle_calls",           "status"};

void check_keys(json const &obj, std::vector<std::string> const &allowed, std::string const &where)
{
  if (!obj.is_object()) { throw ConfigError(where + " must be a JSON object"); }
  for (auto const &item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <class T>
void read_opt(json const &obj, char const *key, T &out)
{
  if (obj.contains(key)) { out = obj.at(key).get<T>(); }
}

Eigen::VectorXd to_vector(json const &arr)
{
  auto const values = arr.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd const>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Adversary parse_adversary(json const &obj)
{
  check_keys(obj, {"kind", "magnitude", "direction", "target"}, "adversary");
  std::string const kind = obj.at("kind").get<std::string>();
  if (kind == "none") { return NoAdversary{}; }
  if (kind == "far_cluster") {
    FarCluster fc;
    if (obj.contains("magnitude")) { fc.magnitude = obj.at("magnitude").get<double>(); }
    if (obj.contains("direction")) { fc.direction = to_vector(obj.at("direction")); }
    if (obj.contains("target")) { fc.target = to_vector(obj.at("target")); }
    return fc;
  }
  if (kind == "doro_counterexample") { return DoroCounterexample{}; }
  if (kind == "label_flip_leverage") {
    LabelFlipPlusLeverage lf;
    read_opt(obj, "magnitude", lf.magnitude);
    return lf;
  }
  throw ConfigError("unknown adversary kind '" + kind + "'");
}

void parse_data(json const &obj, DataSpec &spec)
{
  check_keys(obj,
             {"d", "n", "sigma", "law", "dof", "noise_std", "flip_prob", "planted_norm", "planted_intercept",
              "planted_w", "planted_seed", "seeds"},
             "data");
  read_opt(obj, "d", spec.d);
  read_opt(obj, "n", spec.n);
  read_opt(obj, "sigma", spec.sigma);
  read_opt(obj, "noise_std", spec.noise_std);
  read_opt(obj, "flip_prob", spec.flip_prob);
  read_opt(obj, "planted_norm", spec.planted_norm);
  read_opt(obj, "planted_intercept", spec.planted_intercept);
  read_opt(obj, "planted_seed", spec.planted_seed);
  read_opt(obj, "seeds", spec.seeds);
  if (obj.contains("planted_w")) { spec.planted_w = to_vector(obj.at("planted_w")); }
  std::string law = "gaussian";
  read_opt(obj, "law", law);
  if (law == "gaussian") {
    spec.law = GaussianLaw{};
  } else if (law == "student_t") {
    StudentTLaw t;
    read_opt(obj, "dof", t.dof);
    spec.law = t;
  } else {
    throw ConfigError("unknown covariate law '" + law + "' (expected gaussian or student_t)");
  }
}

void parse_solver(json const &obj, PDHGConfig &cfg)
{
  check_keys(obj,
             {"sigma", "delta_const", "w0_bound", "gamma_dist", "reg_s", "rho", "max_T_cap", "sigma_mode", "c_eval"},
             "solver");
  read_opt(obj, "sigma", cfg.sigma);
  read_opt(obj, "delta_const", cfg.delta_constant);
  read_opt(obj, "w0_bound", cfg.W0);
  read_opt(obj, "rho", cfg.rho);
  read_opt(obj, "max_T_cap", cfg.max_T_cap);
  read_opt(obj, "c_eval", cfg.c_eval);
  if (obj.contains("gamma_dist")) { cfg.gamma_override = obj.at("gamma_dist").get<double>(); }
  if (obj.contains("reg_s")) { cfg.s = parse_norm_kind(obj.at("reg_s").get<std::string>()); }
  if (obj.contains("sigma_mode")) {
    std::string const mode = obj.at("sigma_mode").get<std::string>();
    if (mode == "given") {
      cfg.sigma_mode = SigmaMode::Given;
    } else if (mode == "estimated") {
      cfg.sigma_mode = SigmaMode::Estimated;
    } else {
      throw ConfigError("unknown sigma_mode '" + mode + "' (expected given or estimated)");
    }
  }
}

// Rounds to 9 significant digits, the precision of the reports.
double round9(double v)
{
  if (!std::isfinite(v)) { return v; }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

std::string fmt9(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string sanitize(std::string s)
{
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  std::replace(s.begin(), s.end(), '"', '\'');
  return s;
}

std::vector<std::string> split_csv_line(std::string const &line)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') { out.emplace_back(); }
  return out;
}

double parse_double_field(std::string const &s, char const *name)
{
  if (s == "inf" || s == "-inf" || s == "nan") { return std::strtod(s.c_str(), nullptr); }
  double v = 0.0;
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidArgument(std::string("report: bad value '") + s + "' in column " + name);
  }
  return v;
}

template <class Int>
Int parse_int_field(std::string const &s, char const *name)
{
  Int v{};
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidArgument(std::string("report: bad integer '") + s + "' in column " + name);
  }
  return v;
}

} // namespace

void ExperimentConfig::validate() const
{
  if (data.d < 1 || data.n < 2) { throw ConfigError("data needs d >= 1 and n >= 2"); }
  if (!(data.sigma > 0)) { throw ConfigError("data sigma must be positive"); }
  if (data.seeds.empty()) { throw ConfigError("at least one seed is required"); }
  std::set<std::uint64_t> const distinct(data.seeds.begin(), data.seeds.end());
  if (distinct.size() != data.seeds.size()) { throw ConfigError("seeds must be distinct"); }
  if (epsilons.empty()) { throw ConfigError("at least one epsilon is required"); }
  if (!std::is_sorted(epsilons.begin(), epsilons.end())) { throw ConfigError("epsilons must be sorted ascending"); }
  for (double e : epsilons) {
    if (!(e >= 0 && e < 0.25)) { throw ConfigError("epsilon values must lie in [0, 1/4)"); }
  }
  if (adversaries.empty()) { throw ConfigError("at least one adversary is required"); }
  if (methods.empty()) { throw ConfigError("at least one method is required"); }
  for (auto const &m : methods) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  if (data.planted_w && data.planted_w->size() != data.d) { throw ConfigError("planted_w must have dimension d"); }
  if (!(exact_delta > 0)) { throw ConfigError("exact_delta must be positive"); }
  if (!(doro_alpha > 0 && doro_alpha <= 1)) { throw ConfigError("doro_alpha must lie in (0, 1]"); }
  if (!(oracle_tol > 0) || oracle_max_iters < 1) { throw ConfigError("oracle budget must be positive"); }
}

ExperimentConfig parse_experiment_config(std::string const &json_text)
{
  ExperimentConfig cfg;
  json root;
  try {
    root = json::parse(json_text);
  } catch (json::exception const &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    check_keys(root,
               {"data", "adversaries", "epsilons", "methods", "loss", "solver", "exact_delta", "erm_iters",
                "doro_iters", "doro_alpha", "oracle_tol", "oracle_max_iters", "threads", "output"},
               "config");
    if (root.contains("data")) { parse_data(root.at("data"), cfg.data); }
    if (root.contains("adversaries")) {
      cfg.adversaries.clear();
      for (auto const &a : root.at("adversaries")) {
        cfg.adversaries.push_back(parse_adversary(a));
      }
    }
    read_opt(root, "epsilons", cfg.epsilons);
    read_opt(root, "methods", cfg.methods);
    if (root.contains("loss")) { cfg.loss = parse_loss_kind(root.at("loss").get<std::string>()); }
    if (root.contains("solver")) { parse_solver(root.at("solver"), cfg.solver); }
    read_opt(root, "exact_delta", cfg.exact_delta);
    read_opt(root, "erm_iters", cfg.erm_iters);
    read_opt(root, "doro_iters", cfg.doro_iters);
    read_opt(root, "doro_alpha", cfg.doro_alpha);
    read_opt(root, "oracle_tol", cfg.oracle_tol);
    read_opt(root, "oracle_max_iters", cfg.oracle_max_iters);
    read_opt(root, "threads", cfg.threads);
    if (root.contains("output")) {
      auto const &out = root.at("output");
      check_keys(out, {"csv", "json"}, "output");
      if (out.contains("csv")) { cfg.csv_output = out.at("csv").get<std::string>(); }
      if (out.contains("json")) { cfg.json_output = out.at("json").get<std::string>(); }
    }
  } catch (json::exception const &e) {
    throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw ConfigError("cannot open config " + path.string()); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

Eigen::VectorXd planted_weights(DataSpec const &spec)
{
  if (spec.planted_w) { return *spec.planted_w; }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(spec.d);
  w[0] = spec.planted_intercept;
  if (spec.d > 1) {
    std::mt19937_64 rng(spec.planted_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd dir(spec.d - 1);
    for (Eigen::Index j = 0; j < dir.size(); ++j) {
      dir[j] = gauss(rng);
    }
    w.tail(spec.d - 1) = spec.planted_norm * dir / dir.norm();
  }
  return w;
}

int worker_count(int requested)
{
  if (char const *env = std::getenv("RD_THREADS")) {
    int v = 0;
    std::string_view const s(env);
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size() && v > 0) { return v; }
    throw ConfigError("RD_THREADS must be a positive integer, got '" + std::string(s) + "'");
  }
  if (requested > 0) { return requested; }
  return std::max(1u, std::thread::hardware_concurrency());
}

Dataset experiment_dataset(ExperimentConfig const &cfg, std::uint64_t seed, double epsilon, Adversary const &adversary)
{
  LossFamily const loss = LossFamily::make(cfg.loss);
  NoiseSpec noise;
  noise.task = loss.is_classification() ? Task::Classification : Task::Regression;
  noise.noise_std = cfg.data.noise_std;
  noise.flip_prob = cfg.data.flip_prob;
  Dataset clean =
    generate_synthetic(cfg.data.d, cfg.data.n, planted_weights(cfg.data), noise, cfg.data.law, cfg.data.sigma, seed);
  if (epsilon == 0 || std::holds_alternative<NoAdversary>(adversary)) { return clean; }
  return contaminate(clean, ContaminationSpec{epsilon, adversary}, seed ^ 0x9e3779b97f4a7c15ULL);
}

GroundTruth ground_truth(ExperimentConfig const &cfg, Dataset const &data, double epsilon)
{
  Dataset stable = select_rows(data, clean_indices(data));
  if (epsilon > 0) { stable = select_rows(stable, stability_filter(stable, epsilon)); }
  GroundTruth truth;
  truth.stable = prepend_ones(stable);
  OracleOptions opts;
  opts.max_iters = cfg.oracle_max_iters;
  OracleResult const oracle =
    oracle_solve(truth.stable, LossFamily::make(cfg.loss), cfg.solver.regularizer(), cfg.oracle_tol, opts);
  truth.w_star = oracle.w;
  truth.f_star = oracle.f;
  return truth;
}

std::vector<MetricsRow> run_experiment(ExperimentConfig const &cfg)
{
  cfg.validate();
  LossFamily const loss = LossFamily::make(cfg.loss);
  NormRegularizer const reg = cfg.solver.regularizer();

  struct Group
  {
    std::uint64_t seed;
    double epsilon;
    std::size_t adversary;
  };
  std::vector<Group> groups;
  for (auto seed : cfg.data.seeds) {
    for (double eps : cfg.epsilons) {
      for (std::size_t a = 0; a < cfg.adversaries.size(); ++a) {
        groups.push_back({seed, eps, a});
      }
    }
  }
  std::size_t const n_methods = cfg.methods.size();
  std::vector<MetricsRow> rows(groups.size() * n_methods);

  auto run_group = [&](std::size_t g) {
    Group const &grp = groups[g];
    Adversary const &adv = cfg.adversaries[grp.adversary];
    for (std::size_t m = 0; m < n_methods; ++m) {
      MetricsRow &row = rows[g * n_methods + m];
      row.method = cfg.methods[m];
      row.adversary = adversary_name(adv);
      row.epsilon = grp.epsilon;
      row.seed = grp.seed;
    }

    Dataset data;
    GroundTruth truth;
    try {
      data = experiment_dataset(cfg, grp.seed, grp.epsilon, adv);
      truth = ground_truth(cfg, data, grp.epsilon);
    } catch (std::exception const &e) {
      for (std::size_t m = 0; m < n_methods; ++m) {
        rows[g * n_methods + m].status = sanitize(std::string("error: ground truth: ") + e.what());
      }
      return;
    }

    PDHGConfig solver = cfg.solver;
    solver.epsilon = grp.epsilon;
    if (grp.epsilon == 0) {
      solver.oracle = OracleMode::Exact;
      solver.delta_override = cfg.exact_delta;
    }

    for (std::size_t m = 0; m < n_methods; ++m) {
      MetricsRow &row = rows[g * n_methods + m];
      std::string const &method = cfg.methods[m];
      auto const start = std::chrono::steady_clock::now();
      try {
        Eigen::VectorXd w_hat;
        if (method == "pdhg" || method == "trimmed_mean") {
          PDHGConfig c = solver;
          if (method == "trimmed_mean" && grp.epsilon > 0) { c.oracle = OracleMode::CoordinateTrimmed; }
          SolveResult const res = pipeline(data, loss, reg, c);
          w_hat = res.w_hat;
          row.oracle_calls = res.oracle_calls;
        } else if (method == "erm") {
          w_hat = erm_subgradient(prepend_ones(data), loss, reg, cfg.erm_iters);
          row.oracle_calls = cfg.erm_iters;
        } else if (method == "doro") {
          w_hat = doro_cvar(prepend_ones(data), loss, grp.epsilon, cfg.doro_alpha, cfg.doro_iters, grp.seed);
          row.oracle_calls = cfg.doro_iters;
        } else {
          OracleOptions opts;
          opts.max_iters = cfg.oracle_max_iters;
          OracleResult const res = oracle_solve(prepend_ones(data), loss, reg, cfg.oracle_tol, opts);
          w_hat = res.w;
          row.oracle_calls = res.iterations;
        }
        row.excess_clean_objective = dro_objective_eval(w_hat, truth.stable, loss, reg) - truth.f_star;
        row.param_error = (w_hat - truth.w_star).norm();
      } catch (std::exception const &e) {
        row.status = sanitize(std::string("error: ") + e.what());
      }
      row.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };

  std::size_t const workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count(cfg.threads)), groups.size());
  if (workers <= 1) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      run_group(g);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t g = next++; g < groups.size(); g = next++) {
          run_group(g);
        }
      });
    }
    for (auto &th : pool) {
      th.join();
    }
  }
  return rows;
}

void emit_report(std::vector<MetricsRow> const &rows, ReportFormat format, std::ostream &os)
{
  if (format == ReportFormat::Csv) {
    for (std::size_t j = 0; j < kColumns.size(); ++j) {
      os << (j ? "," : "") << kColumns[j];
    }
    os << '\n';
    for (auto const &r : rows) {
      os << sanitize(r.method) << ',' << sanitize(r.adversary) << ',' << fmt9(r.epsilon) << ',' << r.seed << ','
         << fmt9(r.excess_clean_objective) << ',' << fmt9(r.param_error) << ',' << fmt9(r.wallclock) << ','
         << r.oracle_calls << ',' << sanitize(r.status) << '\n';
    }
    return;
  }
  json arr = json::array();
  for (auto const &r : rows) {
    arr.push_back(json{{"method", r.method},
                       {"adversary", r.adversary},
                       {"epsilon", round9(r.epsilon)},
                       {"seed", r.seed},
                       {"excess_clean_objective", round9(r.excess_clean_objective)},
                       {"param_error", round9(r.param_error)},
                       {"wallclock", round9(r.wallclock)},
                       {"oracle_calls", r.oracle_calls},
                       {"status", r.status}});
  }
  os << json{{"columns", kColumns}, {"rows", arr}}.dump(2) << '\n';
}

void emit_report(std::vector<MetricsRow> const &rows, ReportFormat format, std::filesystem::path const &path)
{
  std::ofstream out(path);
  if (!out) { throw InvalidArgument("cannot open report file " + path.string()); }
  emit_report(rows, format, out);
  if (!out) { throw InvalidArgument("failed writing report file " + path.string()); }
}

std::vector<MetricsRow> read_report(std::istream &is, ReportFormat format)
{
  std::vector<MetricsRow> rows;
  if (format == ReportFormat::Csv) {
    std::string line;
    if (!std::getline(is, line)) { throw InvalidArgument("report: missing header"); }
    if (split_csv_line(line) != kColumns) { throw InvalidArgument("report: unexpected header '" + line + "'"); }
    while (std::getline(is, line)) {
      if (line.empty()) { continue; }
      auto const f = split_csv_line(line);
      if (f.size() != kColumns.size()) { throw InvalidArgument("report: wrong field count in '" + line + "'"); }
      MetricsRow r;
      r.method = f[0];
      r.adversary = f[1];
      r.epsilon = parse_double_field(f[2], "epsilon");
      r.seed = parse_int_field<std::uint64_t>(f[3], "seed");
      r.excess_clean_objective = parse_double_field(f[4], "excess_clean_objective");
      r.param_error = parse_double_field(f[5], "param_error");
      r.wallclock = parse_double_field(f[6], "wallclock");
      r.oracle_calls = parse_int_field<long>(f[7], "oracle_calls");
      r.status = f[8];
      rows.push_back(std::move(r));
    }
    return rows;
  }
  json root;
  try {
    root = json::parse(is);
    for (auto const &o : root.at("rows")) {
      MetricsRow r;
      r.method = o.at("method").get<std::string>();
      r.adversary = o.at("adversary").get<std::string>();
      r.epsilon = o.at("epsilon").get<double>();
      r.seed = o.at("seed").get<std::uint64_t>();
      r.excess_clean_objective = o.at("excess_clean_objective").get<double>();
      r.param_error = o.at("param_error").get<double>();
      r.wallclock = o.at("wallclock").get<double>();
      r.oracle_calls = o.at("oracle_calls").get<long>();
      r.status = o.at("status").get<std::string>();
      rows.push_back(std::move(r));
    }
  } catch (json::exception const &e) {
    throw InvalidArgument(std::string("report: malformed JSON: ") + e.what());
  }
  return rows;
}

std::vector<MetricsRow> read_report(std::filesystem::path const &path, ReportFormat format)
{
  std::ifstream in(path);
  if (!in) { throw InvalidArgument("cannot open report " + path.string()); }
  return read_report(in, format);
}

} // namespace rdro
