#include "genfun/experiments.hpp"

#include "genfun/limitproc.hpp"
#include "genfun/pairing.hpp"
#include "genfun/parallel.hpp"
#include "genfun/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

namespace genfun {

namespace {

[[noreturn]] void invalid(const std::string& what)
{
  fail(ErrorKind::validation, what);
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep)
    out.emplace_back();
  return out;
}

double parse_plain(const std::string& s, const std::string& key)
{
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    invalid(key + ": '" + s + "' is not a number");
  return v;
}

//! A number, or base^exponent.
double parse_number(const std::string& s, const std::string& key)
{
  const auto caret = s.find('^');
  if (caret == std::string::npos)
    return parse_plain(s, key);
  return std::pow(parse_plain(trim(s.substr(0, caret)), key),
                  parse_plain(trim(s.substr(caret + 1)), key));
}

long parse_integer(const std::string& s, const std::string& key)
{
  const double v = parse_number(s, key);
  if (v != std::floor(v) || std::abs(v) > 9e15)
    invalid(key + ": '" + s + "' is not an integer");
  return static_cast<long>(v);
}

//! Comma list; an item 2^a..2^b expands to the powers in between.
std::vector<double> parse_list(const std::string& s, const std::string& key)
{
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    if (item.empty())
      invalid(key + ": empty list item");
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_number(item, key));
      continue;
    }
    const std::string a = trim(item.substr(0, dots)), b = trim(item.substr(dots + 2));
    const auto ca = a.find('^'), cb = b.find('^');
    if (ca == std::string::npos || cb == std::string::npos || a.substr(0, ca) != b.substr(0, cb))
      invalid(key + ": range '" + item + "' must read base^a..base^b");
    const double base = parse_plain(trim(a.substr(0, ca)), key);
    const long lo = parse_integer(a.substr(ca + 1), key), hi = parse_integer(b.substr(cb + 1), key);
    const long step = hi >= lo ? 1 : -1;
    for (long e = lo;; e += step) {
      out.push_back(std::pow(base, double(e)));
      if (e == hi)
        break;
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& v, const char* sep = ",")
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? sep : "") + v[i];
  return out;
}

template <class T>
std::string join_numbers(const std::vector<T>& v)
{
  std::vector<std::string> s;
  for (const T& x : v) {
    if constexpr (std::is_floating_point_v<T>)
      s.push_back(fmt(x));
    else
      s.push_back(std::to_string(x));
  }
  return join(s);
}

struct Field
{
  const char* name;
  const char* type;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define GF_STRING(key)                                                                       \
  Field                                                                                      \
  {                                                                                          \
    #key, "string", [](ExperimentConfig& c, const std::string& v) { c.key = v; },            \
      [](const ExperimentConfig& c) { return c.key; }                                       \
  }
#define GF_REAL(key)                                                                         \
  Field                                                                                      \
  {                                                                                          \
    #key, "real", [](ExperimentConfig& c, const std::string& v) { c.key = parse_number(v, #key); }, \
      [](const ExperimentConfig& c) { return fmt(c.key); }                                  \
  }
#define GF_INT(key)                                                                          \
  Field                                                                                      \
  {                                                                                          \
    #key, "integer",                                                                         \
      [](ExperimentConfig& c, const std::string& v) {                                        \
        c.key = static_cast<decltype(c.key)>(parse_integer(v, #key));                        \
      },                                                                                     \
      [](const ExperimentConfig& c) { return std::to_string(c.key); }                       \
  }
#define GF_REALS(key)                                                                        \
  Field                                                                                      \
  {                                                                                          \
    #key, "real list", [](ExperimentConfig& c, const std::string& v) { c.key = parse_list(v, #key); }, \
      [](const ExperimentConfig& c) { return join_numbers(c.key); }                         \
  }

const std::vector<Field>& fields()
{
  static const std::vector<Field> f = {
    GF_STRING(experiment),
    GF_STRING(model),
    GF_INT(beta_a),
    GF_INT(beta_b),
    GF_REAL(normal_mean),
    GF_REAL(normal_sd),
    GF_REALS(atoms),
    GF_REALS(atom_weights),
    GF_REAL(mix),
    GF_STRING(atom_base),
    GF_STRING(x_model),
    GF_STRING(y_model),
    GF_STRING(mean_fn),
    GF_REAL(mean_a),
    GF_REAL(mean_b),
    GF_REAL(mean_freq),
    GF_REAL(noise_sd),
    Field{ "psi", "psi list",
           [](ExperimentConfig& c, const std::string& v) {
             c.psi = split(v, ',');
             for (const auto& p : c.psi)
               if (p.empty())
                 invalid("psi: empty list item");
           },
           [](const ExperimentConfig& c) { return join(c.psi); } },
    GF_STRING(kernel),
    GF_INT(order),
    GF_STRING(g_kernel),
    GF_REAL(alpha),
    GF_REAL(c),
    GF_REAL(h_y),
    Field{ "n_grid", "integer list",
           [](ExperimentConfig& c, const std::string& v) {
             c.n_grid.clear();
             for (double x : parse_list(v, "n_grid")) {
               if (x != std::floor(x) || x > 9e15)
                 invalid("n_grid: " + fmt(x) + " is not an integer");
               c.n_grid.push_back(static_cast<long>(x));
             }
           },
           [](const ExperimentConfig& c) { return join_numbers(c.n_grid); } },
    GF_INT(n),
    GF_INT(reps),
    GF_INT(limit_reps),
    GF_INT(check_reps),
    GF_INT(check_n),
    GF_INT(sanity_n),
    Field{ "seed", "integer",
           [](ExperimentConfig& c, const std::string& v) {
             const long s = parse_integer(v, "seed");
             if (s < 0)
               invalid("seed: must be non-negative");
             c.seed = static_cast<std::uint64_t>(s);
           },
           [](const ExperimentConfig& c) { return std::to_string(c.seed); } },
    GF_STRING(pairing),
    GF_STRING(bias_mode),
    GF_STRING(estimator_path),
    GF_REAL(y_point),
    GF_INT(grid_size),
    GF_INT(y_bins),
    GF_REAL(partition_spacing),
    GF_REAL(tail_tol),
    GF_REALS(h_grid),
    GF_REALS(points),
    GF_REAL(gap_point),
    GF_REALS(eps_bar),
    Field{ "tolerances", "name:real list",
           [](ExperimentConfig& c, const std::string& v) {
             for (const auto& item : split(v, ',')) {
               const auto colon = item.find(':');
               if (colon == std::string::npos)
                 invalid("tolerances: '" + item + "' must read name:value");
               const std::string name = trim(item.substr(0, colon));
               if (!c.tolerances.count(name))
                 invalid("tolerances: '" + name + "' is not a tolerance of experiment " +
                         c.experiment);
               c.tolerances[name] = parse_number(trim(item.substr(colon + 1)), "tolerances");
             }
           },
           [](const ExperimentConfig& c) {
             std::vector<std::string> s;
             for (const auto& [k, v] : c.tolerances)
               s.push_back(k + ":" + fmt(v));
             return join(s);
           } },
  };
  return f;
}

#undef GF_STRING
#undef GF_REAL
#undef GF_INT
#undef GF_REALS

const std::vector<std::string> kThreePsis{ "bump:0.5:0.3:4", "bump:0.35:0.2:4",
                                           "mollifier:0.6:0.3" };

//! Defaults that depend on the experiment kind, applied before the keys.
void apply_defaults(ExperimentConfig& c)
{
  const std::string& e = c.experiment;
  if (e == "rate") {
    c.n_grid = { 1024, 2048, 4096, 8192, 16384, 32768, 65536 };
    c.reps = 200;
    c.tolerances = { { "slope_lo", -0.6 }, { "slope_hi", -0.4 }, { "limit_rel", 0.1 }, { "tail_max", 1e-8 } };
  } else if (e == "bias") {
    c.model = "beta";
    c.n = 65536;
    c.reps = 100;
    c.h_grid = { 0.16, 0.08, 0.04, 0.02 };
    c.tolerances = { { "slope_tol", 0.3 }, { "z", 3.0 } };
  } else if (e == "variance") {
    c.n = 16384;
    c.reps = 500;
    c.psi = kThreePsis;
    c.tolerances = { { "rel", 0.05 }, { "z", 4.0 } };
  } else if (e == "gaussianity") {
    c.n = 16384;
    c.reps = 500;
    c.psi = kThreePsis;
    c.tolerances = { { "ks_level", 0.01 } };
  } else if (e == "cantor-rescale") {
    c.model = "cantor";
    c.n = 1L << 20;
    c.reps = 1;
    c.h_grid = parse_list("2^-2..2^-9", "h_grid");
    c.points = { 0.25, 0.75, 0.1 };
    c.tolerances = { { "ratio_max", 10.0 }, { "gap_max", 0.0 } };
  } else if (e == "illposed-demo") {
    c.psi = kThreePsis;
    c.tolerances = { { "slack", 1e-12 } };
  } else if (e == "lemma-check") {
    c.model = "product";
    c.psi = kThreePsis;
    c.tolerances = { { "agree", 1e-6 } };
  }
}

bool conditional_pairing(const ExperimentConfig& c)
{
  return c.pairing == "conddist" || c.pairing == "condmean";
}

bool one_of(const std::string& v, std::initializer_list<const char*> options)
{
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

ModelPtr base_model(const std::string& name, const ExperimentConfig& c)
{
  if (name == "uniform")
    return uniform_model();
  if (name == "beta")
    return beta_model(c.beta_a, c.beta_b);
  if (name == "normal")
    return normal_model(c.normal_mean, c.normal_sd);
  if (name == "cantor")
    return cantor_model();
  invalid("unknown base model '" + name + "' (uniform, beta, normal, cantor)");
}

double elapsed_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t rep_stream(std::size_t block, std::size_t r)
{
  return (static_cast<std::uint64_t>(block) << 32) | static_cast<std::uint64_t>(r);
}

Vector bandwidth(const ExperimentConfig& c, double n, Index dim)
{
  return Bandwidth{ c.c, c.alpha, Vector::Ones(dim) }.h(n);
}

ConditionalSmoothing smoothing(const ExperimentConfig& c, double n)
{
  ConditionalSmoothing sm;
  if (c.estimator_path == "smoothed") {
    sm.x_kernel = build_kernel(c);
    sm.h = bandwidth(c, n, 1)(0);
    if (c.g_kernel != "indicator") {
      sm.y_kernel = make_kernel(c.g_kernel, c.order);
      sm.h_y = c.h_y > 0.0 ? c.h_y : sm.h;
    }
  }
  return sm;
}

PartitionOfUnity y_partition(const ExperimentConfig& c, const DistributionModel& model)
{
  const Index dy = model.dim() - 1;
  return PartitionOfUnity(Box::interval(model.marginal_quantile(dy, 1e-6),
                                        model.marginal_quantile(dy, 1.0 - 1e-6)),
                          c.partition_spacing);
}

//! Estimator minus oracle for one sample of size n, per pairing.
struct PairingSetup
{
  double oracle = 0.0;
  double tail = 0.0;
  std::function<std::function<double(const Sample&)>(long n)> estimator;
};

PairingSetup make_pairing(const ExperimentConfig& c, const ModelPtr& model, const TestFunction& psi)
{
  PairingSetup p;
  if (c.pairing == "density") {
    const Kernel K = build_kernel(c);
    p.oracle = pair_expectation(*model, psi).value;
    p.estimator = [&c, model, K, psi](long n) -> std::function<double(const Sample&)> {
      const Vector h = bandwidth(c, double(n), model->dim());
      const double correction =
        c.bias_mode == "corrected" ? bias_functional(*model, K, h, psi).extra("bias") : 0.0;
      return [K, h, psi, correction](const Sample& s) {
        return pair_density_estimator(s, K, h, psi).value - correction;
      };
    };
    return p;
  }
  if (!model->has_conditional() || model->x_dim() != 1)
    fail(ErrorKind::unsupported_combination,
         "conditional pairings need a product or regression model with one x coordinate");
  if (c.pairing == "conddist") {
    p.oracle = conddist_pair_oracle(*model, psi, c.y_point).value;
    p.estimator = [&c, psi](long n) -> std::function<double(const Sample&)> {
      const ConditionalSmoothing sm = smoothing(c, double(n));
      return [&c, psi, sm](const Sample& s) {
        return conddist_estimator_pair(s, psi, c.y_point, sm).value;
      };
    };
    return p;
  }
  const PartitionOfUnity pu = y_partition(c, *model);
  const auto oracle = condmoment_pair_oracle(*model, MomentFunction::identity(), psi, pu, c.tail_tol);
  p.oracle = oracle.value;
  p.tail = oracle.extra("tail");
  p.estimator = [&c, psi, pu](long n) -> std::function<double(const Sample&)> {
    const ConditionalSmoothing sm = smoothing(c, double(n));
    return [&c, psi, pu, sm](const Sample& s) {
      return condmean_estimator_pair(s, psi, pu, c.tail_tol, sm).value;
    };
  };
  return p;
}

double normalizer(const Matrix& G, Index i, Index j)
{
  const double d = std::sqrt(std::max(0.0, G(i, i) * G(j, j)));
  const double scale = G.diagonal().maxCoeff();
  return d > 1e-12 * scale ? d : scale;
}

//! Draws of sqrt(n) (estimate - oracle) per psi, plus the pooled
//! within-sample covariance of the per-point terms.
struct DensityDraws
{
  Matrix scaled; //!< reps x p
  Matrix pooled; //!< p x p
};

DensityDraws density_draws(const ExperimentConfig& c, const DistributionModel& model,
                           const std::vector<TestFunction>& psis, const Vector& oracle, long n,
                           int reps, std::size_t block, int threads)
{
  const Kernel K = build_kernel(c);
  const Vector h = bandwidth(c, double(n), model.dim());
  const auto p = static_cast<Index>(psis.size());
  DensityDraws out;
  out.scaled.resize(reps, p);
  std::vector<Matrix> within(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    const Sample s = model.sample(n, c.seed, rep_stream(block, r));
    Matrix T(n, p);
    for (Index j = 0; j < p; ++j)
      T.col(j) = kernel_smooth_sample(s, K, h, psis[static_cast<std::size_t>(j)]);
    const Eigen::RowVectorXd m = T.colwise().mean();
    out.scaled.row(static_cast<Index>(r)) = std::sqrt(double(n)) * (m - oracle.transpose());
    const Matrix centred = T.rowwise() - m;
    within[r] = centred.transpose() * centred / double(n - 1);
  });
  out.pooled = Matrix::Zero(p, p);
  for (const auto& S : within)
    out.pooled += S;
  out.pooled /= double(reps);
  return out;
}

//! True when x sits strictly inside a removed middle third.
bool in_cantor_gap(double x)
{
  if (x < 0.0 || x > 1.0)
    return true;
  for (int depth = 0; depth < 25; ++depth) {
    x *= 3.0;
    const double digit = std::floor(x);
    x -= digit;
    if (digit == 1.0 && x > 0.0)
      return true;
  }
  return false;
}

double total_variation(const TestFunction& psi)
{
  const Box& b = psi.support_box();
  QuadratureSpec spec;
  spec.panels_per_axis = 64;
  return integrate_1d([&](double x) { return std::abs(psi.derivative(1, x)); }, b.lower(0),
                      b.upper(0), spec, psi.breakpoints()[0])
    .value;
}

NormalityRow normality_row(long n, const std::string& label, const Vector& v)
{
  const KsResult ks = ks_test(v, normal_cdf);
  return { n, label, ks.statistic, ks.p_value, skewness(v), excess_kurtosis(v) };
}

} // namespace

const std::vector<std::string>& experiment_names()
{
  static const std::vector<std::string> names{ "rate",           "bias",          "variance",
                                               "gaussianity",    "cantor-rescale", "illposed-demo",
                                               "lemma-check" };
  return names;
}

std::string fmt(double v)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double ExperimentConfig::tolerance(const std::string& name) const
{
  const auto it = tolerances.find(name);
  if (it == tolerances.end())
    fail(ErrorKind::invalid_argument, "no tolerance '" + name + "' for experiment " + experiment);
  return it->second;
}

std::vector<std::pair<std::string, std::string>> config_schema()
{
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields())
    out.emplace_back(f.name, f.type);
  return out;
}

ExperimentConfig parse_config(const std::string& text)
{
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      invalid("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const bool known = std::any_of(fields().begin(), fields().end(),
                                   [&](const Field& f) { return key == f.name; });
    if (!known)
      invalid("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      invalid("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    entries.emplace_back(key, value);
  }
  if (!seen.count("experiment"))
    invalid("missing key 'experiment'");

  ExperimentConfig cfg;
  for (const auto& [k, v] : entries)
    if (k == "experiment")
      cfg.experiment = v;
  if (std::find(experiment_names().begin(), experiment_names().end(), cfg.experiment) ==
      experiment_names().end())
    invalid("unknown experiment '" + cfg.experiment + "'");
  apply_defaults(cfg);
  // tolerances last, after the experiment's tolerance names are known
  for (const auto& f : fields())
    for (const auto& [k, v] : entries)
      if (k == f.name && k != "experiment")
        f.set(cfg, v);
  // the conditional rates need alpha < 1/4; default inside that range
  if (conditional_pairing(cfg) && !seen.count("alpha"))
    cfg.alpha = 0.2;
  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& c)
{
  const std::string& e = c.experiment;
  if (std::find(experiment_names().begin(), experiment_names().end(), e) == experiment_names().end())
    invalid("unknown experiment '" + e + "'");
  if (!one_of(c.model, { "uniform", "beta", "normal", "atom-mixture", "cantor", "product", "regression" }))
    invalid("unknown model '" + c.model + "'");
  for (const auto* base : { &c.atom_base, &c.x_model, &c.y_model })
    if (!one_of(*base, { "uniform", "beta", "normal", "cantor" }))
      invalid("unknown base model '" + *base + "' (uniform, beta, normal, cantor)");
  if (c.beta_a < 1 || c.beta_b < 1)
    invalid("beta_a and beta_b must be positive integers");
  if (!(c.normal_sd > 0.0) || !(c.noise_sd > 0.0))
    invalid("normal_sd and noise_sd must be positive");
  if (!one_of(c.mean_fn, { "linear", "constant", "sine" }))
    invalid("unknown mean_fn '" + c.mean_fn + "' (linear, constant, sine)");
  if (c.model == "atom-mixture") {
    if (c.atoms.empty() || c.atoms.size() != c.atom_weights.size())
      invalid("atoms and atom_weights need the same non-zero length");
    double sum = 0.0;
    for (double w : c.atom_weights) {
      if (!(w > 0.0))
        invalid("atom_weights must be positive");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      invalid("atom_weights must sum to 1");
    if (!(c.mix >= 0.0 && c.mix <= 1.0))
      invalid("mix must lie in [0, 1]");
  }
  if (c.psi.empty())
    invalid("psi needs at least one test function");
  for (const auto& p : c.psi) {
    try {
      parse_psi(p);
    } catch (const Error& err) {
      invalid("psi '" + p + "': " + err.what());
    }
  }
  try {
    make_kernel(c.kernel, c.order);
    if (c.g_kernel != "indicator")
      make_kernel(c.g_kernel, c.order);
  } catch (const Error& err) {
    invalid(std::string("kernel: ") + err.what());
  }
  if (c.kernel == "indicator")
    invalid("kernel must have a density part (epanechnikov or poly)");
  if (!(c.alpha > 0.0) || !(c.c > 0.0) || c.h_y < 0.0)
    invalid("alpha and c must be positive, h_y non-negative");
  if (!one_of(c.pairing, { "density", "conddist", "condmean" }))
    invalid("unknown pairing '" + c.pairing + "' (density, conddist, condmean)");
  if (!one_of(c.bias_mode, { "none", "corrected" }))
    invalid("unknown bias_mode '" + c.bias_mode + "' (none, corrected)");
  if (!one_of(c.estimator_path, { "empirical", "smoothed" }))
    invalid("unknown estimator_path '" + c.estimator_path + "' (empirical, smoothed)");
  if (c.reps < 1 || c.limit_reps < 2 || c.check_reps < 2 || c.check_n < 2 || c.sanity_n < 2)
    invalid("reps, limit_reps, check_reps, check_n and sanity_n must be positive (at least 2)");
  if (c.grid_size < 8 || c.y_bins < 4)
    invalid("grid_size must be at least 8 and y_bins at least 4");
  if (!(c.partition_spacing > 0.0) || !(c.tail_tol > 0.0))
    invalid("partition_spacing and tail_tol must be positive");
  for (double h : c.h_grid)
    if (!(h > 0.0))
      invalid("h_grid entries must be positive");

  const double l = double(c.order);
  if (e == "rate") {
    if (c.n_grid.size() < 3)
      invalid("n_grid needs at least 3 sample sizes for a slope interval");
    for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
      if (c.n_grid[i] < 2)
        invalid("n_grid entries must be at least 2");
      if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1])
        invalid("n_grid must be strictly increasing");
    }
    if (c.reps < 100)
      invalid("rate experiments need reps >= 100");
  } else if (c.n < 2 && e != "illposed-demo" && e != "lemma-check") {
    invalid("n must be at least 2");
  }
  if (e == "rate" && conditional_pairing(c) && !(c.alpha < 0.25))
    invalid("alpha = " + fmt(c.alpha) +
            " violates alpha < 1/4, required for the root-n rate of the conditional "
            "distribution and conditional mean pairings");
  if ((e == "rate" && c.pairing == "density") || e == "variance" || e == "gaussianity") {
    if (c.bias_mode == "none" && !(c.alpha > 1.0 / (2.0 * l)))
      invalid("alpha = " + fmt(c.alpha) + " violates alpha > 1/(2l) = " + fmt(1.0 / (2.0 * l)) +
              ", required for n h^(2l) -> 0 in the bias-free density pairing");
    if (c.bias_mode == "corrected" && !(c.alpha >= 1.0 / (2.0 * l)))
      invalid("alpha = " + fmt(c.alpha) + " violates alpha >= 1/(2l) = " + fmt(1.0 / (2.0 * l)) +
              ", required for n h^(2l) = O(1) in the bias-corrected density pairing");
  }
  if (e == "variance" || e == "gaussianity") {
    if (c.reps < 10)
      invalid(e + " needs reps >= 10");
  }
  if (e == "bias") {
    if (c.h_grid.size() < 3)
      invalid("bias needs at least 3 bandwidths in h_grid");
    if (c.reps < 2)
      invalid("bias needs reps >= 2");
  }
  if (e == "cantor-rescale") {
    if (c.model != "cantor")
      invalid("cantor-rescale needs model = cantor");
    if (c.points.empty() || c.h_grid.empty())
      invalid("cantor-rescale needs points and h_grid");
    for (double x : c.points)
      if (in_cantor_gap(x))
        invalid("point " + fmt(x) + " is not in the Cantor set");
    if (!in_cantor_gap(c.gap_point))
      invalid("gap_point " + fmt(c.gap_point) + " is not in a removed interval");
  }
  if (e == "illposed-demo") {
    if (c.eps_bar.empty())
      invalid("illposed-demo needs eps_bar values");
    for (double v : c.eps_bar)
      if (!(v > 0.0 && v < 1.0))
        invalid("eps_bar values must lie in (0, 1)");
  }
  if (e == "lemma-check" && !one_of(c.model, { "product", "regression" }))
    invalid("lemma-check needs a product or regression model");
}

std::string config_echo(const ExperimentConfig& cfg)
{
  std::string out;
  for (const auto& f : fields())
    out += std::string(f.name) + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_echo(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ModelPtr build_model(const ExperimentConfig& c)
{
  if (c.model == "atom-mixture") {
    std::vector<Vector> atoms;
    for (double a : c.atoms)
      atoms.push_back(Vector::Constant(1, a));
    return atom_mixture_model(std::move(atoms), c.atom_weights, base_model(c.atom_base, c), c.mix);
  }
  if (c.model == "product")
    return independent_product_model(base_model(c.x_model, c), base_model(c.y_model, c));
  if (c.model == "regression") {
    MeanFunction m = c.mean_fn == "linear"   ? MeanFunction::linear(c.mean_a, Vector::Constant(1, c.mean_b))
                     : c.mean_fn == "sine" ? MeanFunction::sine(c.mean_a, c.mean_b, c.mean_freq)
                                           : MeanFunction::constant(c.mean_a);
    return regression_model(base_model(c.x_model, c), std::move(m), c.noise_sd);
  }
  return base_model(c.model, c);
}

TestFunction parse_psi(const std::string& spec)
{
  const auto parts = split(spec, ':');
  std::vector<double> a;
  for (std::size_t i = 1; i < parts.size(); ++i)
    a.push_back(parse_number(parts[i], "psi"));
  auto integer = [&](double v) {
    if (v != std::floor(v) || v < 1 || v > 64)
      invalid("psi '" + spec + "': smoothness must be an integer in 1..64");
    return static_cast<int>(v);
  };
  const std::string& family = parts[0];
  if (family == "bump" && a.size() == 3)
    return make_poly_bump(a[0], a[1], integer(a[2]));
  if (family == "mollifier" && (a.size() == 2 || a.size() == 3))
    return a.size() == 2 ? make_mollifier(a[0], a[1]) : make_mollifier(a[0], a[1], integer(a[2]));
  if (family == "plateau" && a.size() == 4)
    return make_plateau(a[0], a[1], a[2], integer(a[3]));
  invalid("psi '" + spec +
          "': expected bump:c:r:p, mollifier:c:r[:smoothness] or plateau:lo:hi:ramp:p");
}

std::vector<TestFunction> build_psis(const ExperimentConfig& cfg)
{
  std::vector<TestFunction> out;
  for (const auto& p : cfg.psi)
    out.push_back(parse_psi(p));
  return out;
}

Kernel build_kernel(const ExperimentConfig& cfg)
{
  return make_kernel(cfg.kernel, cfg.order);
}

const char* to_string(Status s)
{
  switch (s) {
    case Status::pass:
      return "pass";
    case Status::fail:
      return "fail";
    case Status::inconclusive:
      return "inconclusive";
  }
  return "?";
}

std::string CsvTable::render(const std::string& hash, std::uint64_t seed) const
{
  std::string out = "config_hash,seed,version";
  for (const auto& h : header)
    out += "," + h;
  out += "\n";
  const std::string prefix = hash + "," + std::to_string(seed) + "," + kVersion;
  for (const auto& row : rows)
    out += prefix + "," + join(row) + "\n";
  return out;
}

double ExperimentResult::metric(const std::string& key) const
{
  for (const auto& [k, v] : metrics)
    if (k == key)
      return v;
  fail(ErrorKind::invalid_argument, "no metric '" + key + "'");
}

std::string ExperimentResult::summary_json(const ExperimentConfig& cfg) const
{
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["status"] = to_string(status);
  j["message"] = message;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["version"] = kVersion;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metrics)
    m[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(fmt(v));
  j["metrics"] = m;
  std::vector<std::string> files;
  for (const auto& t : tables)
    files.push_back(t.name);
  j["tables"] = files;
  j["runtime_s"] = runtime_s;
  j["config"] = config_echo(cfg);
  return j.dump(2) + "\n";
}

RateReport rate_experiment(const ExperimentConfig& cfg, int threads)
{
  const auto t0 = std::chrono::steady_clock::now();
  const ModelPtr model = build_model(cfg);
  const TestFunction psi = build_psis(cfg).front();
  const PairingSetup p = make_pairing(cfg, model, psi);

  RateReport rep;
  rep.pairing = cfg.pairing;
  rep.oracle = p.oracle;
  rep.oracle_tail = p.tail;
  Vector lx(static_cast<Index>(cfg.n_grid.size())), ly(lx.size());
  for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
    const long n = cfg.n_grid[k];
    const auto estimate = p.estimator(n);
    Vector e(cfg.reps);
    parallel_for(static_cast<std::size_t>(cfg.reps), threads, [&](std::size_t r) {
      const Sample s = model->sample(n, cfg.seed, rep_stream(k, r));
      e(static_cast<Index>(r)) = estimate(s) - p.oracle;
    });
    RateRow row;
    row.n = n;
    row.h = cfg.pairing == "density" || cfg.estimator_path == "smoothed"
              ? bandwidth(cfg, double(n), 1)(0)
              : 0.0;
    row.rmse = std::sqrt(e.squaredNorm() / double(e.size()));
    row.mean_error = mean(e);
    row.sd_error = std::sqrt(variance(e));
    row.ks_p = row.sd_error > 0.0
                 ? ks_test(e, [&](double t) { return normal_cdf((t - row.mean_error) / row.sd_error); })
                     .p_value
                 : 0.0;
    rep.rows.push_back(row);
    rep.errors.push_back(e);
    lx(static_cast<Index>(k)) = std::log2(double(n));
    ly(static_cast<Index>(k)) = std::log2(row.rmse);
  }
  rep.fit = ols_fit(lx, ly);

  if (conditional_pairing(cfg)) {
    LimitOptions o;
    o.grid_size = cfg.grid_size;
    o.y_bins = cfg.y_bins;
    o.y = cfg.y_point;
    o.partition_spacing = cfg.partition_spacing;
    o.tail_tol = cfg.tail_tol;
    o.threads = threads;
    const LimitKind kind = cfg.pairing == "conddist" ? LimitKind::conddist : LimitKind::condmean;
    LimitCheck lc;
    lc.n = cfg.check_n;
    lc.limit_reps = cfg.limit_reps;
    lc.finite_reps = cfg.check_reps;
    lc.limit_var = limit_law_sample(*model, { psi }, kind, cfg.limit_reps,
                                    stream_key(cfg.seed, 0x6c696d6974ULL), o)
                     .covariance(0, 0);
    const auto estimate = p.estimator(cfg.check_n);
    Vector e(cfg.check_reps);
    const std::size_t block = cfg.n_grid.size() + 1;
    parallel_for(static_cast<std::size_t>(cfg.check_reps), threads, [&](std::size_t r) {
      const Sample s = model->sample(cfg.check_n, cfg.seed, rep_stream(block, r));
      e(static_cast<Index>(r)) = std::sqrt(double(cfg.check_n)) * (estimate(s) - p.oracle);
    });
    lc.finite_var = variance(e);
    lc.rel_diff = std::abs(lc.finite_var / lc.limit_var - 1.0);
    rep.limit = lc;
  }
  rep.runtime_s = elapsed_since(t0);
  return rep;
}

BiasReport bias_experiment(const ExperimentConfig& cfg, int threads)
{
  const ModelPtr model = build_model(cfg);
  if (!model->has_density())
    fail(ErrorKind::unsupported_combination,
         "the bias experiment needs a model with a smooth density");
  const TestFunction psi = build_psis(cfg).front();
  const Kernel K = build_kernel(cfg);
  const double z = cfg.tolerance("z");
  const auto m = static_cast<Index>(cfg.h_grid.size());
  const Index dim = model->dim();

  // control variate: (K_h * psi)(x_i) - psi(x_i) has mean equal to the bias
  // and a spread that shrinks with h
  Matrix D(cfg.reps, m);
  parallel_for(static_cast<std::size_t>(cfg.reps), threads, [&](std::size_t r) {
    const Sample s = model->sample(cfg.n, cfg.seed, rep_stream(0, r));
    Vector base(s.n());
    for (Index i = 0; i < s.n(); ++i)
      base(i) = psi(Vector(s.points.row(i).transpose()));
    for (Index k = 0; k < m; ++k) {
      const Vector h = Vector::Constant(dim, cfg.h_grid[static_cast<std::size_t>(k)]);
      D(static_cast<Index>(r), k) = (kernel_smooth_sample(s, K, h, psi) - base).mean();
    }
  });

  BiasReport rep;
  double scale = 0.0;
  for (Index k = 0; k < m; ++k) {
    BiasRow row;
    row.h = cfg.h_grid[static_cast<std::size_t>(k)];
    const Vector col = D.col(k);
    row.bias = mean(col);
    row.se = cfg.reps > 1 ? std::sqrt(variance(col) / double(cfg.reps)) : 0.0;
    row.predicted = bias_functional(*model, K, Vector::Constant(dim, row.h), psi).extra("bias");
    row.significant = std::abs(row.bias) > z * row.se;
    rep.noise_floor = std::max(rep.noise_floor, z * row.se);
    scale = std::max(scale, std::abs(row.predicted));
    rep.rows.push_back(row);
  }
  rep.predicted_zero = scale < 1e-14;
  std::vector<const BiasRow*> sig;
  for (const auto& r : rep.rows)
    if (r.significant)
      sig.push_back(&r);
  if (sig.size() >= 3) {
    Vector lx(static_cast<Index>(sig.size())), ly(lx.size());
    for (std::size_t i = 0; i < sig.size(); ++i) {
      lx(static_cast<Index>(i)) = std::log2(sig[i]->h);
      ly(static_cast<Index>(i)) = std::log2(std::abs(sig[i]->bias));
    }
    rep.fit = ols_fit(lx, ly);
  }
  return rep;
}

VarianceReport variance_experiment(const ExperimentConfig& cfg, int threads)
{
  const ModelPtr model = build_model(cfg);
  const auto psis = build_psis(cfg);
  const auto p = static_cast<Index>(psis.size());
  Vector oracle(p);
  for (Index j = 0; j < p; ++j)
    oracle(j) = pair_expectation(*model, psis[static_cast<std::size_t>(j)]).value;

  VarianceReport rep;
  rep.gram = covariance_gram(*model, psis);
  const DensityDraws d = density_draws(cfg, *model, psis, oracle, cfg.n, cfg.reps, 0, threads);
  rep.pooled = d.pooled;
  rep.replication = sample_covariance(d.scaled);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j <= i; ++j) {
      const Matrix& G = rep.gram;
      const double norm = normalizer(G, i, j);
      rep.max_rel_pooled = std::max(rep.max_rel_pooled, std::abs(rep.pooled(i, j) - G(i, j)) / norm);
      rep.max_rel_replication =
        std::max(rep.max_rel_replication, std::abs(rep.replication(i, j) - G(i, j)) / norm);
      const double se = std::sqrt((G(i, i) * G(j, j) + G(i, j) * G(i, j)) / double(cfg.reps));
      if (se > 0.0)
        rep.max_z_replication =
          std::max(rep.max_z_replication, std::abs(rep.replication(i, j) - G(i, j)) / se);
    }
  return rep;
}

GaussianityReport gaussianity_experiment(const ExperimentConfig& cfg, int threads)
{
  const ModelPtr model = build_model(cfg);
  const auto psis = build_psis(cfg);
  const auto p = static_cast<Index>(psis.size());
  Vector oracle(p);
  for (Index j = 0; j < p; ++j)
    oracle(j) = pair_expectation(*model, psis[static_cast<std::size_t>(j)]).value;
  const Matrix G = covariance_gram(*model, psis);
  const Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success || (G.diagonal().array() <= 0.0).any())
    fail(ErrorKind::numeric_failure,
         "covariance functional of the psi set is singular; drop dependent test functions");

  GaussianityReport rep;
  Rng rng(cfg.seed, 0x70726f6265ULL);
  for (int k = 0; k < 3; ++k) {
    Vector lambda(p);
    for (Index j = 0; j < p; ++j)
      lambda(j) = rng.normal();
    rep.probes.push_back(lambda.normalized());
  }
  for (const auto& psi : psis)
    rep.labels.push_back(psi.id());
  for (int k = 0; k < 3; ++k)
    rep.labels.push_back("probe" + std::to_string(k + 1));

  auto standardize = [&](const Matrix& scaled) {
    Matrix out(scaled.rows(), p + 3);
    const Vector sd = G.diagonal().cwiseSqrt();
    for (Index r = 0; r < scaled.rows(); ++r) {
      const Vector e = scaled.row(r).transpose();
      out.row(r).head(p) = e.cwiseQuotient(sd).transpose();
      // whitened by the Gram factor, so lambda' xi is N(0, 1) for unit lambda
      const Vector xi = llt.matrixL().solve(e);
      for (int k = 0; k < 3; ++k)
        out(r, p + k) = rep.probes[static_cast<std::size_t>(k)].dot(xi);
    }
    return out;
  };
  auto rows = [&](long n, const Matrix& std_draws) {
    std::vector<NormalityRow> out;
    for (Index j = 0; j < std_draws.cols(); ++j)
      out.push_back(normality_row(n, rep.labels[static_cast<std::size_t>(j)], std_draws.col(j)));
    return out;
  };
  rep.standardized =
    standardize(density_draws(cfg, *model, psis, oracle, cfg.n, cfg.reps, 0, threads).scaled);
  rep.rows = rows(cfg.n, rep.standardized);
  rep.sanity_rows =
    rows(cfg.sanity_n,
         standardize(density_draws(cfg, *model, psis, oracle, cfg.sanity_n, cfg.reps, 1, threads).scaled));
  return rep;
}

CantorReport cantor_rescale_experiment(const ExperimentConfig& cfg, int threads)
{
  const ModelPtr model = build_model(cfg);
  const Kernel K = build_kernel(cfg);
  const Sample s = model->sample(cfg.n, cfg.seed, 0);
  CantorReport rep;
  rep.d = CantorModel::dimension();
  std::vector<double> xs = cfg.points;
  xs.push_back(cfg.gap_point);
  const std::size_t nh = cfg.h_grid.size();
  rep.rows.resize(xs.size() * nh);
  parallel_for(rep.rows.size(), threads, [&](std::size_t i) {
    CantorRow& row = rep.rows[i];
    row.x = xs[i / nh];
    row.in_gap = i / nh == cfg.points.size();
    row.h = cfg.h_grid[i % nh];
    row.fhat = kde_pointwise(s, K, Vector::Constant(1, row.h), Vector::Constant(1, row.x));
    row.rescaled = std::pow(row.h, 1.0 - rep.d) * row.fhat;
  });
  for (std::size_t p = 0; p < cfg.points.size(); ++p) {
    double lo = kInf, hi = 0.0;
    for (std::size_t k = 0; k < nh; ++k) {
      lo = std::min(lo, rep.rows[p * nh + k].rescaled);
      hi = std::max(hi, rep.rows[p * nh + k].rescaled);
    }
    rep.min_rescaled.push_back(lo);
    rep.max_rescaled.push_back(hi);
  }
  for (std::size_t k = 0; k < nh; ++k)
    rep.gap_fhat.push_back(rep.rows[cfg.points.size() * nh + k].fhat);
  return rep;
}

std::vector<IllposedRow> illposed_experiment(const ExperimentConfig& cfg)
{
  const auto psis = build_psis(cfg);
  std::vector<IllposedRow> out;
  for (double eb : cfg.eps_bar) {
    const IllposedPair pair = illposed_pair(eb);
    for (const auto& psi : psis) {
      const IllposedGap g = illposed_gap(pair, psi);
      out.push_back({ eb, pair.eps, pair.l1_distance, pair.sup_distance, psi.id(), g.gap,
                      eb * total_variation(psi) });
    }
  }
  return out;
}

std::vector<LemmaRow> lemma_experiment(const ExperimentConfig& cfg)
{
  const ModelPtr model = build_model(cfg);
  std::vector<LemmaRow> out;
  for (const auto& psi : build_psis(cfg))
    out.push_back({ model->id(), psi.id(), cfg.y_point,
                    conddist_pair_oracle(*model, psi, cfg.y_point).value,
                    conddist_pair_lemma(*model, psi, cfg.y_point).value });
  return out;
}

namespace {

ExperimentResult judge_rate(const ExperimentConfig& cfg, const RateReport& r)
{
  ExperimentResult out;
  const double lo = cfg.tolerance("slope_lo"), hi = cfg.tolerance("slope_hi");
  out.metrics = { { "slope", r.fit.slope },
                  { "slope_se", r.fit.slope_se },
                  { "slope_ci_lower", r.fit.ci_lower },
                  { "slope_ci_upper", r.fit.ci_upper },
                  { "oracle", r.oracle } };
  bool ok = r.fit.slope >= lo && r.fit.slope <= hi;
  std::string msg = "slope " + fmt(r.fit.slope) + " (95% CI " + fmt(r.fit.ci_lower) + " .. " +
                    fmt(r.fit.ci_upper) + ") against [" + fmt(lo) + ", " + fmt(hi) + "]";
  if (cfg.pairing == "condmean") {
    out.metrics.emplace_back("oracle_tail", r.oracle_tail);
    ok = ok && r.oracle_tail < cfg.tolerance("tail_max");
    msg += "; partition tail " + fmt(r.oracle_tail);
  }
  if (r.limit) {
    const double tol = cfg.tolerance("limit_rel");
    out.metrics.emplace_back("limit_var", r.limit->limit_var);
    out.metrics.emplace_back("finite_var", r.limit->finite_var);
    out.metrics.emplace_back("limit_rel_diff", r.limit->rel_diff);
    ok = ok && r.limit->rel_diff <= tol;
    msg += "; limit variance " + fmt(r.limit->limit_var) + " vs finite " + fmt(r.limit->finite_var) +
           " (relative difference " + fmt(r.limit->rel_diff) + ", tolerance " + fmt(tol) + ")";
  }
  out.status = ok ? Status::pass : Status::fail;
  out.message = msg;

  CsvTable t{ "rate.csv", { "pairing", "n", "h", "reps", "rmse", "mean_error", "sd_error", "ks_p" }, {} };
  for (const auto& row : r.rows)
    t.add({ cfg.pairing, std::to_string(row.n), fmt(row.h), std::to_string(cfg.reps), fmt(row.rmse),
            fmt(row.mean_error), fmt(row.sd_error), fmt(row.ks_p) });
  CsvTable f{ "rate_fit.csv", { "slope", "slope_se", "ci_lower", "ci_upper", "intercept" }, {} };
  f.add({ fmt(r.fit.slope), fmt(r.fit.slope_se), fmt(r.fit.ci_lower), fmt(r.fit.ci_upper),
          fmt(r.fit.intercept) });
  CsvTable e{ "errors.csv", { "n", "rep", "error" }, {} };
  for (std::size_t k = 0; k < r.rows.size(); ++k)
    for (Index i = 0; i < r.errors[k].size(); ++i)
      e.add({ std::to_string(r.rows[k].n), std::to_string(i), fmt(r.errors[k](i)) });
  out.tables = { t, f, e };
  if (r.limit) {
    CsvTable l{ "limit_check.csv",
                { "n", "finite_reps", "finite_var", "limit_reps", "limit_var", "rel_diff" }, {} };
    l.add({ std::to_string(r.limit->n), std::to_string(r.limit->finite_reps), fmt(r.limit->finite_var),
            std::to_string(r.limit->limit_reps), fmt(r.limit->limit_var), fmt(r.limit->rel_diff) });
    out.tables.push_back(l);
  }
  return out;
}

ExperimentResult judge_bias(const ExperimentConfig& cfg, const BiasReport& r)
{
  ExperimentResult out;
  const double l = double(cfg.order), tol = cfg.tolerance("slope_tol");
  out.metrics = { { "noise_floor", r.noise_floor }, { "predicted_zero", r.predicted_zero ? 1.0 : 0.0 } };
  if (r.fit) {
    out.metrics.emplace_back("slope", r.fit->slope);
    out.metrics.emplace_back("slope_se", r.fit->slope_se);
    const bool ok = std::abs(r.fit->slope - l) <= tol;
    out.status = ok ? Status::pass : Status::fail;
    out.message = "log-bias slope " + fmt(r.fit->slope) + " against l = " + fmt(l) + " +- " + fmt(tol);
    if (r.predicted_zero) {
      out.status = Status::fail;
      out.message += "; but the bias functional predicts zero";
    }
  } else {
    const bool any_sig = std::any_of(r.rows.begin(), r.rows.end(), [](const BiasRow& b) { return b.significant; });
    out.status = Status::inconclusive;
    out.message = r.predicted_zero
                    ? "bias at the noise floor " + fmt(r.noise_floor) +
                        " for every h, consistent with B = 0 (inconclusive by design)"
                    : "fewer than 3 bandwidths with bias above the noise floor " + fmt(r.noise_floor);
    if (r.predicted_zero && any_sig) {
      out.status = Status::fail;
      out.message = "bias functional predicts zero but the Monte Carlo bias is significant";
    }
  }
  CsvTable t{ "bias.csv", { "h", "bias", "se", "predicted", "ratio", "significant" }, {} };
  for (const auto& row : r.rows)
    t.add({ fmt(row.h), fmt(row.bias), fmt(row.se), fmt(row.predicted),
            row.predicted != 0.0 ? fmt(row.bias / row.predicted) : "nan", row.significant ? "1" : "0" });
  out.tables = { t };
  return out;
}

ExperimentResult judge_variance(const ExperimentConfig& cfg, const VarianceReport& r)
{
  ExperimentResult out;
  const double tol = cfg.tolerance("rel"), zt = cfg.tolerance("z");
  out.metrics = { { "max_rel_pooled", r.max_rel_pooled },
                  { "max_rel_replication", r.max_rel_replication },
                  { "max_z_replication", r.max_z_replication } };
  const bool ok = r.max_rel_pooled <= tol && r.max_z_replication <= zt;
  out.status = ok ? Status::pass : Status::fail;
  out.message = "pooled covariance max relative error " + fmt(r.max_rel_pooled) + " (tolerance " +
                fmt(tol) + "); replication covariance within " + fmt(r.max_z_replication) +
                " sampling SEs (tolerance " + fmt(zt) + ")";
  CsvTable t{ "covariance.csv",
              { "i", "j", "gram", "pooled", "replication", "rel_pooled", "rel_replication" }, {} };
  for (Index i = 0; i < r.gram.rows(); ++i)
    for (Index j = 0; j <= i; ++j) {
      const double norm = normalizer(r.gram, i, j);
      t.add({ std::to_string(i + 1), std::to_string(j + 1), fmt(r.gram(i, j)), fmt(r.pooled(i, j)),
              fmt(r.replication(i, j)), fmt(std::abs(r.pooled(i, j) - r.gram(i, j)) / norm),
              fmt(std::abs(r.replication(i, j) - r.gram(i, j)) / norm) });
    }
  out.tables = { t };
  return out;
}

ExperimentResult judge_gaussianity(const ExperimentConfig& cfg, const GaussianityReport& r)
{
  ExperimentResult out;
  const double level = cfg.tolerance("ks_level");
  double min_p = 1.0;
  for (const auto& row : r.rows)
    min_p = std::min(min_p, row.ks_p);
  out.metrics = { { "min_ks_p", min_p } };
  out.status = min_p > level ? Status::pass : Status::fail;
  out.message = "smallest KS p-value " + fmt(min_p) + " over " + std::to_string(r.rows.size()) +
                " standardized columns and probes (level " + fmt(level) + "); n = " +
                std::to_string(cfg.sanity_n) + " reported only";
  CsvTable t{ "normality.csv", { "n", "label", "ks_statistic", "ks_p", "skewness", "excess_kurtosis" }, {} };
  for (const auto* rows : { &r.rows, &r.sanity_rows })
    for (const auto& row : *rows)
      t.add({ std::to_string(row.n), row.label, fmt(row.ks_statistic), fmt(row.ks_p),
              fmt(row.skewness), fmt(row.excess_kurtosis) });
  CsvTable d{ "standardized.csv", { "rep" }, {} };
  for (const auto& l : r.labels)
    d.header.push_back(l);
  for (Index i = 0; i < r.standardized.rows(); ++i) {
    std::vector<std::string> row{ std::to_string(i) };
    for (Index j = 0; j < r.standardized.cols(); ++j)
      row.push_back(fmt(r.standardized(i, j)));
    d.add(std::move(row));
  }
  CsvTable p{ "probes.csv", { "probe", "component", "lambda" }, {} };
  for (std::size_t k = 0; k < r.probes.size(); ++k)
    for (Index j = 0; j < r.probes[k].size(); ++j)
      p.add({ "probe" + std::to_string(k + 1), std::to_string(j + 1), fmt(r.probes[k](j)) });
  out.tables = { t, d, p };
  return out;
}

ExperimentResult judge_cantor(const ExperimentConfig& cfg, const CantorReport& r)
{
  ExperimentResult out;
  const double ratio_max = cfg.tolerance("ratio_max"), gap_max = cfg.tolerance("gap_max");
  bool ok = true;
  double worst = 0.0, floor = kInf;
  for (std::size_t p = 0; p < r.min_rescaled.size(); ++p) {
    const double ratio = r.min_rescaled[p] > 0.0 ? r.max_rescaled[p] / r.min_rescaled[p] : kInf;
    worst = std::max(worst, ratio);
    floor = std::min(floor, r.min_rescaled[p]);
    out.metrics.emplace_back("ratio_" + fmt(cfg.points[p]), ratio);
  }
  ok = worst <= ratio_max && floor > 0.0;
  const double gap_last = r.gap_fhat.back();
  ok = ok && gap_last <= gap_max;
  out.metrics.emplace_back("d", r.d);
  out.metrics.emplace_back("max_ratio", worst);
  out.metrics.emplace_back("min_rescaled", floor);
  out.metrics.emplace_back("gap_fhat_smallest_h", gap_last);
  out.status = ok ? Status::pass : Status::fail;
  out.message = "d = " + fmt(r.d) + "; largest max/min ratio of h^(1-d) fhat " + fmt(worst) +
                " (tolerance " + fmt(ratio_max) + "), smallest value " + fmt(floor) +
                "; fhat at the gap point " + fmt(cfg.gap_point) + " for the smallest h: " + fmt(gap_last);
  CsvTable t{ "cantor.csv", { "x", "in_gap", "h", "fhat", "rescaled" }, {} };
  for (const auto& row : r.rows)
    t.add({ fmt(row.x), row.in_gap ? "1" : "0", fmt(row.h), fmt(row.fhat), fmt(row.rescaled) });
  out.tables = { t };
  return out;
}

ExperimentResult judge_illposed(const ExperimentConfig& cfg, const std::vector<IllposedRow>& rows)
{
  ExperimentResult out;
  const double slack = cfg.tolerance("slack");
  bool ok = true;
  double worst = 0.0;
  for (const auto& r : rows) {
    ok = ok && std::abs(r.l1 - 2.0) <= slack && r.sup <= r.eps_bar * (1.0 + slack) &&
         r.gap <= r.allowed * (1.0 + slack);
    worst = std::max(worst, r.allowed > 0.0 ? r.gap / r.allowed : kInf);
  }
  out.metrics = { { "max_gap_over_allowed", worst } };
  out.status = ok ? Status::pass : Status::fail;
  out.message = "L1 distance 2, sup distance <= eps_bar, and pairing gap at most " + fmt(worst) +
                " of eps_bar * int |psi'|";
  CsvTable t{ "illposed.csv", { "eps_bar", "eps", "l1", "sup", "psi", "gap", "allowed" }, {} };
  for (const auto& r : rows)
    t.add({ fmt(r.eps_bar), fmt(r.eps), fmt(r.l1), fmt(r.sup), r.psi, fmt(r.gap), fmt(r.allowed) });
  out.tables = { t };
  return out;
}

ExperimentResult judge_lemma(const ExperimentConfig& cfg, const std::vector<LemmaRow>& rows)
{
  ExperimentResult out;
  const double tol = cfg.tolerance("agree");
  double worst = 0.0;
  for (const auto& r : rows)
    worst = std::max(worst, std::abs(r.route_a - r.route_b));
  out.metrics = { { "max_abs_diff", worst } };
  out.status = worst <= tol ? Status::pass : Status::fail;
  out.message = "routes agree to " + fmt(worst) + " (tolerance " + fmt(tol) + ")";
  CsvTable t{ "lemma.csv", { "model", "psi", "y", "route_a", "route_b", "abs_diff" }, {} };
  for (const auto& r : rows)
    t.add({ r.model, r.psi, fmt(r.y), fmt(r.route_a), fmt(r.route_b), fmt(std::abs(r.route_a - r.route_b)) });
  out.tables = { t };
  return out;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads)
{
  validate_config(cfg);
  const int workers = resolve_threads(threads > 0 ? threads : 0);
  const auto t0 = std::chrono::steady_clock::now();
  const std::string& e = cfg.experiment;
  ExperimentResult out;
  if (e == "rate")
    out = judge_rate(cfg, rate_experiment(cfg, workers));
  else if (e == "bias")
    out = judge_bias(cfg, bias_experiment(cfg, workers));
  else if (e == "variance")
    out = judge_variance(cfg, variance_experiment(cfg, workers));
  else if (e == "gaussianity")
    out = judge_gaussianity(cfg, gaussianity_experiment(cfg, workers));
  else if (e == "cantor-rescale")
    out = judge_cantor(cfg, cantor_rescale_experiment(cfg, workers));
  else if (e == "illposed-demo")
    out = judge_illposed(cfg, illposed_experiment(cfg));
  else
    out = judge_lemma(cfg, lemma_experiment(cfg));
  out.experiment = e;
  out.runtime_s = elapsed_since(t0);
  return out;
}

} // namespace genfun
