#include "genfun/pairing.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace genfun {

namespace {

double sign_pow(long k)
{
  return k % 2 ? -1.0 : 1.0;
}

std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_unique(std::vector<double>& out, const std::vector<double>& extra)
{
  out.insert(out.end(), extra.begin(), extra.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

void model_breaks(const DistributionModel& model, std::vector<std::vector<double>>& out,
                  std::size_t offset)
{
  if (const auto* am = dynamic_cast<const AtomMixtureModel*>(&model)) {
    for (const auto& a : am->atoms())
      for (Index j = 0; j < a.size(); ++j)
        out[offset + static_cast<std::size_t>(j)].push_back(a(j));
  } else if (const auto* pm = dynamic_cast<const IndependentProductModel*>(&model)) {
    model_breaks(pm->x_model(), out, offset);
    model_breaks(pm->y_model(), out, offset + static_cast<std::size_t>(pm->x_model().dim()));
  }
}

FunctionalReport base_report(const std::string& psi_id, const std::string& model_id,
                             Method method)
{
  FunctionalReport r;
  r.psi_id = psi_id;
  r.model_id = model_id;
  r.method = method;
  return r;
}

//! One univariate factor of a product term with its derivative offset.
struct FactorPlan
{
  const Factor1D* factor;
  int order;
  std::vector<double> breaks;
};

struct TermPlan
{
  double coef;
  std::vector<FactorPlan> axes;
};

std::vector<TermPlan> plan_terms(const TestFunction& psi)
{
  std::vector<TermPlan> plan;
  for (const auto& t : psi.terms()) {
    TermPlan tp{ t.coef, {} };
    for (std::size_t j = 0; j < t.factors.size(); ++j)
      tp.axes.push_back({ t.factors[j].get(), t.offsets[j], t.factors[j]->breakpoints() });
    plan.push_back(std::move(tp));
  }
  return plan;
}

//! int_{-1}^{1} K(w) f(x - h w) dw with panels split where x - h w crosses a
//! breakpoint of f.
double smooth_factor(const Kernel& K, const FactorPlan& f, double x, double h,
                     const GaussRule& rule, int panels)
{
  const double a = std::max(-1.0, (x - f.factor->upper()) / h);
  const double b = std::min(1.0, (x - f.factor->lower()) / h);
  if (!(b > a))
    return 0.0;
  double cuts[64];
  int nc = 0;
  cuts[nc++] = a;
  for (double t : f.breaks) {
    const double w = (x - t) / h;
    if (w > a && w < b && nc < 62)
      cuts[nc++] = w;
  }
  cuts[nc++] = b;
  std::sort(cuts, cuts + nc);
  double acc = 0.0;
  for (int i = 0; i + 1 < nc; ++i) {
    const double step = (cuts[i + 1] - cuts[i]) / panels;
    if (!(step > 0.0))
      continue;
    for (int p = 0; p < panels; ++p) {
      const double lo = cuts[i] + p * step, half = 0.5 * step;
      for (Index q = 0; q < rule.nodes.size(); ++q) {
        const double w = lo + half * (rule.nodes(q) + 1.0);
        acc += half * rule.weights(q) * K.base(w) * f.factor->eval(f.order, x - h * w);
      }
    }
  }
  return acc;
}

double smooth_planned(const std::vector<TermPlan>& plan, const Kernel& K, const Vector& h,
                      const double* x, const GaussRule& rule, int panels)
{
  double total = 0.0;
  for (const auto& t : plan) {
    double prod = t.coef;
    for (std::size_t j = 0; j < t.axes.size() && prod != 0.0; ++j)
      prod *= smooth_factor(K, t.axes[j], x[j], h(static_cast<Index>(j)), rule, panels);
    total += prod;
  }
  return total;
}

//! int Kbar((t - c)/h) f(t) dt over the support of f; the indicator kernel
//! integrates f over [c, upper].
double cdf_weighted_factor(const Kernel& Kbar, const FactorPlan& f, double c, double h,
                           const GaussRule& rule, int panels)
{
  const double lo = f.factor->lower(), hi = f.factor->upper();
  std::vector<double> cuts{ lo, hi };
  for (double t : f.breaks)
    cuts.push_back(t);
  if (Kbar.is_indicator()) {
    cuts.push_back(c);
  } else {
    cuts.push_back(c - h);
    cuts.push_back(c + h);
  }
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(lo, cuts[i]), b = std::min(hi, cuts[i + 1]);
    if (!(b > a))
      continue;
    const double step = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double pa = a + p * step, half = 0.5 * step;
      for (Index q = 0; q < rule.nodes.size(); ++q) {
        const double t = pa + half * (rule.nodes(q) + 1.0);
        const double kb = Kbar.is_indicator() ? (t >= c ? 1.0 : 0.0)
                                              : Kbar.base_antiderivative((t - c) / h);
        if (kb != 0.0)
          acc += half * rule.weights(q) * kb * f.factor->eval(f.order, t);
      }
    }
  }
  return acc;
}

//! S(x) = sum_i w_i P((x - t_i)/h) for |x - t_i| < h, plus `above` * w_i for
//! t_i <= x - h. Points are bucketed into cells of width h with moments of
//! s_i = (t_i - c_b)/h about each cell centre c_b, so every power stays O(1)
//! and high orders at small h do not cancel; a query touches at most 3 cells.
class KernelSum
{
public:
  KernelSum(std::vector<double> t, std::vector<double> w, const Polynomial& poly, double above,
            double h)
    : t_(std::move(t))
    , h_(h)
    , above_(above)
  {
    std::vector<std::size_t> order(t_.size());
    std::iota(order.begin(), order.end(), std::size_t{ 0 });
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t_[a] < t_[b]; });
    std::vector<double> ts(t_.size()), ws(t_.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      ts[i] = t_[order[i]];
      ws[i] = w[order[i]];
    }
    t_ = std::move(ts);
    const auto& c = poly.coefficients();
    deg_ = static_cast<int>(c.size()) - 1;
    a_.resize(static_cast<std::size_t>(deg_ + 1));
    for (int p = 0; p <= deg_; ++p)
      a_[static_cast<std::size_t>(p)] = c(p);
    cell_.resize(t_.size());
    prefix_.assign(static_cast<std::size_t>(deg_ + 1), std::vector<double>(t_.size() + 1, 0.0));
    for (std::size_t i = 0; i < t_.size(); ++i) {
      cell_[i] = static_cast<long>(std::floor(t_[i] / h_));
      const double si = t_[i] / h_ - (static_cast<double>(cell_[i]) + 0.5);
      double sp = 1.0;
      for (int q = 0; q <= deg_; ++q) {
        prefix_[static_cast<std::size_t>(q)][i + 1] = prefix_[static_cast<std::size_t>(q)][i] + ws[i] * sp;
        sp *= si;
      }
    }
  }

  double operator()(double x) const
  {
    const auto lo = static_cast<std::size_t>(
      std::upper_bound(t_.begin(), t_.end(), x - h_) - t_.begin());
    const auto hi = static_cast<std::size_t>(
      std::lower_bound(t_.begin(), t_.end(), x + h_) - t_.begin());
    double acc = above_ * prefix_[0][lo];
    // u = (x - t)/h = X - s with X = (x - c_b)/h:
    // sum_p a_p sum_q C(p,q) X^(p-q) (-1)^q M_q
    double m[16], xp[16];
    for (std::size_t i = lo; i < hi;) {
      const long cell = cell_[i];
      const auto j = static_cast<std::size_t>(
        std::upper_bound(cell_.begin() + static_cast<std::ptrdiff_t>(i),
                         cell_.begin() + static_cast<std::ptrdiff_t>(hi), cell) -
        cell_.begin());
      for (int q = 0; q <= deg_; ++q)
        m[q] = prefix_[static_cast<std::size_t>(q)][j] - prefix_[static_cast<std::size_t>(q)][i];
      const double X = x / h_ - (static_cast<double>(cell) + 0.5);
      xp[0] = 1.0;
      for (int q = 1; q <= deg_; ++q)
        xp[q] = xp[q - 1] * X;
      for (int p = 0; p <= deg_; ++p) {
        double inner = 0.0, binom = 1.0;
        for (int q = 0; q <= p; ++q) {
          inner += binom * xp[p - q] * (q % 2 ? -m[q] : m[q]);
          binom = binom * (p - q) / (q + 1);
        }
        acc += a_[static_cast<std::size_t>(p)] * inner;
      }
      i = j;
    }
    return acc;
  }

private:
  std::vector<double> t_;
  double h_;
  double above_;
  int deg_ = 0;
  std::vector<double> a_;
  std::vector<long> cell_;
  std::vector<std::vector<double>> prefix_;
};

//! Quadrature nodes over dF_x restricted to the preimage of supp psi, with
//! d^dx psi(F_x(x)) folded into the weights.
struct CopulaNodes
{
  std::vector<Vector> x;
  std::vector<double> w;
};

CopulaNodes copula_nodes(const DistributionModel& xm, const TestFunction& psi,
                         const QuadratureSpec& spec)
{
  const Index dx = xm.dim();
  const auto psi_breaks = psi.breakpoints();
  const Box& sb = psi.support_box();
  Box window{ Vector(dx), Vector(dx) };
  std::vector<std::vector<double>> breaks(static_cast<std::size_t>(dx));
  for (Index j = 0; j < dx; ++j) {
    window.lower(j) = xm.marginal_quantile(j, std::max(0.0, sb.lower(j)));
    window.upper(j) = xm.marginal_quantile(j, std::min(1.0, sb.upper(j)));
    for (double b : psi_breaks[static_cast<std::size_t>(j)])
      if (b > 0.0 && b < 1.0)
        breaks[static_cast<std::size_t>(j)].push_back(xm.marginal_quantile(j, b));
  }
  const TestFunction d = psi.mixed_derivative();
  const PointSet ps = stieltjes_nodes(xm.measure(), spec, window, breaks);
  CopulaNodes out;
  Vector u(dx);
  for (Index i = 0; i < ps.size(); ++i) {
    for (Index j = 0; j < dx; ++j)
      u(j) = xm.marginal_cdf(j, ps.points(i, j));
    const double v = d(u);
    if (v == 0.0)
      continue;
    out.x.push_back(ps.points.row(i).transpose());
    out.w.push_back(ps.weights(i) * v * sign_pow(dx));
  }
  return out;
}

double conddist_from_nodes(const DistributionModel& model, const CopulaNodes& nodes, double y)
{
  const Index dx = model.x_dim();
  Vector xy(dx + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.w.size(); ++i) {
    xy.head(dx) = nodes.x[i];
    xy(dx) = y;
    acc += nodes.w[i] * model.cdf(xy);
  }
  return acc;
}

void check_conditional(const DistributionModel& model, const TestFunction& psi)
{
  if (!model.has_conditional())
    fail(ErrorKind::unsupported_combination, "model " + model.id() + " has no conditional structure");
  const DistributionModel& xm = conditioning_model(model);
  if (!xm.continuous_marginals())
    fail(ErrorKind::assumption_violation,
         "conditioning on F_x needs continuous x marginals; " + xm.id() + " has atoms");
  if (psi.dim() != model.x_dim())
    fail(ErrorKind::invalid_argument, "test function dimension must equal d_x");
}

} // namespace

const char* to_string(Method m)
{
  switch (m) {
    case Method::exact_oracle:
      return "exact-oracle";
    case Method::estimator:
      return "estimator";
    case Method::limit_sim:
      return "limit-sim";
  }
  return "unknown";
}

bool FunctionalReport::has_extra(const std::string& key) const
{
  for (const auto& [k, v] : extras)
    if (k == key)
      return true;
  return false;
}

double FunctionalReport::extra(const std::string& key) const
{
  for (const auto& [k, v] : extras)
    if (k == key)
      return v;
  fail(ErrorKind::invalid_argument, "report has no extra '" + key + "'");
}

std::string FunctionalReport::csv_header()
{
  return "value,error_estimate,psi_id,model_id,n,h,seed,method";
}

std::string FunctionalReport::csv_row() const
{
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s)
      out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
  };
  return fmt17(value) + "," + fmt17(error_estimate) + "," + quote(psi_id) + "," +
         quote(model_id) + "," + std::to_string(n) + "," + fmt17(h) + "," +
         std::to_string(seed) + "," + to_string(method);
}

std::string FunctionalReport::to_json() const
{
  nlohmann::ordered_json j;
  j["value"] = value;
  j["error_estimate"] = error_estimate;
  j["psi_id"] = psi_id;
  j["model_id"] = model_id;
  j["n"] = n;
  j["h"] = h;
  j["seed"] = seed;
  j["method"] = to_string(method);
  nlohmann::ordered_json ex = nlohmann::ordered_json::object();
  for (const auto& [k, v] : extras)
    ex[k] = v;
  j["extras"] = ex;
  return j.dump();
}

std::vector<std::vector<double>> pairing_breakpoints(const DistributionModel& model,
                                                     const TestFunction& psi)
{
  auto out = psi.breakpoints();
  out.resize(static_cast<std::size_t>(std::max(model.dim(), psi.dim())));
  std::vector<std::vector<double>> mb(static_cast<std::size_t>(model.dim()));
  model_breaks(model, mb, 0);
  for (std::size_t j = 0; j < mb.size() && j < out.size(); ++j)
    append_unique(out[j], mb[j]);
  return out;
}

FunctionalReport pair_generalized_derivative(const CdfFunction& F, const TestFunction& psi,
                                             Index k, const QuadratureSpec& spec,
                                             const std::vector<std::vector<double>>& breaks)
{
  if (psi.dim() != k)
    fail(ErrorKind::invalid_argument, "test function dimension does not match k");
  const TestFunction d = psi.mixed_derivative();
  auto br = breaks.empty() ? psi.breakpoints() : breaks;
  const auto q = integrate_box(
    [&](const Vector& x) {
      const double v = d(x);
      return v == 0.0 ? 0.0 : F(x) * v;
    },
    psi.support_box(), spec, br);
  auto r = base_report(psi.id(), "cdf", Method::exact_oracle);
  r.value = sign_pow(k) * q.value;
  r.error_estimate = q.error;
  return r;
}

namespace {

//! int F psi' over the Cantor interval [a, a + len] on which F rises from fa
//! by 2^-level: exact on the removed middle thirds, and at the last level
//! F is replaced by its midpoint value, which errs by at most
//! 2^-(level+1) int |psi'| per interval.
double cantor_f_dpsi(const TestFunction& psi, double a, double len, double fa, int level,
                     int depth, double lo, double hi)
{
  const double b = a + len;
  if (b <= lo || a >= hi)
    return 0.0;
  const double rise = std::ldexp(1.0, -level);
  if (level == depth)
    return (fa + 0.5 * rise) * (psi(b) - psi(a));
  const double third = len / 3.0;
  const double mid = fa + 0.5 * rise;
  return cantor_f_dpsi(psi, a, third, fa, level + 1, depth, lo, hi) +
         mid * (psi(a + 2 * third) - psi(a + third)) +
         cantor_f_dpsi(psi, a + 2 * third, third, mid, level + 1, depth, lo, hi);
}

} // namespace

FunctionalReport pair_generalized_derivative(const DistributionModel& model,
                                             const TestFunction& psi, const QuadratureSpec& spec)
{
  if (model.kind() == ModelKind::cantor) {
    if (psi.dim() != 1)
      fail(ErrorKind::invalid_argument, "test function dimension does not match the model");
    // F is flat off a Lebesgue-null set, so the panel rule is replaced by the
    // gap decomposition; F = 1 beyond the unit interval adds -int_1^inf psi'
    const int depth = spec.cantor_depth + 2;
    const Box& b = psi.support_box();
    const double inside = cantor_f_dpsi(psi, 0.0, 1.0, 0.0, 0, depth, b.lower(0), b.upper(0));
    const double beyond = -psi(std::max(1.0, b.lower(0)));
    auto r = base_report(psi.id(), model.id(), Method::exact_oracle);
    r.value = -(inside + beyond);
    r.error_estimate = std::ldexp(1.0, -(depth + 1)) *
                       integrate_1d([&](double x) { return std::abs(psi.derivative(1, x)); },
                                    b.lower(0), b.upper(0), spec, psi.breakpoints()[0])
                         .value;
    return r;
  }
  auto r = pair_generalized_derivative([&](const Vector& x) { return model.cdf(x); }, psi,
                                       model.dim(), spec, pairing_breakpoints(model, psi));
  r.model_id = model.id();
  return r;
}

FunctionalReport pair_expectation(const DistributionModel& model, const TestFunction& psi,
                                  const QuadratureSpec& spec)
{
  const auto q = integrate_stieltjes([&](const Vector& x) { return psi(x); }, model, spec,
                                     pairing_breakpoints(model, psi));
  auto r = base_report(psi.id(), model.id(), Method::exact_oracle);
  r.value = q.value;
  r.error_estimate = q.error;
  return r;
}

QuadratureSpec estimator_spec()
{
  QuadratureSpec s;
  s.panel_order = 8;
  s.panels_per_axis = 1;
  return s;
}

double kernel_smooth(const TestFunction& psi, const Kernel& K, const Vector& h, const Vector& x,
                     const QuadratureSpec& spec)
{
  if (K.is_indicator())
    fail(ErrorKind::invalid_argument, "smoothing needs a kernel with a density part");
  if (h.size() != psi.dim() || x.size() != psi.dim() || (h.array() <= 0.0).any())
    fail(ErrorKind::invalid_argument, "bandwidth must be positive with one entry per axis");
  return smooth_planned(plan_terms(psi), K, h, x.data(), gauss_legendre(spec.panel_order),
                        spec.panels_per_axis);
}

Vector kernel_smooth_sample(const Sample& sample, const Kernel& K, const Vector& h,
                            const TestFunction& psi, const QuadratureSpec& spec)
{
  if (K.is_indicator())
    fail(ErrorKind::invalid_argument, "density estimator needs a kernel with a density part");
  if (h.size() != sample.dim() || psi.dim() != sample.dim() || (h.array() <= 0.0).any())
    fail(ErrorKind::invalid_argument, "bandwidth must be positive with one entry per axis");
  const auto plan = plan_terms(psi);
  const GaussRule& rule = gauss_legendre(spec.panel_order);
  const Index n = sample.n(), k = sample.dim();
  std::vector<double> row(static_cast<std::size_t>(k));
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j)
      row[static_cast<std::size_t>(j)] = sample.points(i, j);
    out(i) = smooth_planned(plan, K, h, row.data(), rule, spec.panels_per_axis);
  }
  return out;
}

FunctionalReport pair_density_estimator(const Sample& sample, const Kernel& K, const Vector& h,
                                        const TestFunction& psi, const QuadratureSpec& spec)
{
  const Vector t = kernel_smooth_sample(sample, K, h, psi, spec);
  const Index n = sample.n();
  const double sum = t.sum(), sumsq = t.squaredNorm();
  auto r = base_report(psi.id(), sample.model_id, Method::estimator);
  r.value = sum / double(n);
  r.error_estimate =
    n > 1 ? std::sqrt(std::max(0.0, (sumsq - sum * sum / double(n)) / double(n - 1)) / double(n))
          : 0.0;
  r.n = n;
  r.h = h.maxCoeff();
  r.seed = sample.seed;
  return r;
}

FunctionalReport pair_distribution_estimator(const Sample& sample, const Kernel& Kbar,
                                             const Vector& h, const TestFunction& psi,
                                             const QuadratureSpec& spec)
{
  if (psi.dim() != sample.dim() || h.size() != sample.dim())
    fail(ErrorKind::invalid_argument, "dimension mismatch in distribution estimator");
  if (!Kbar.is_indicator() && (h.array() <= 0.0).any())
    fail(ErrorKind::invalid_argument, "bandwidth must be positive");
  const auto plan = plan_terms(psi);
  const GaussRule& rule = gauss_legendre(spec.panel_order);
  const Index n = sample.n();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i)
    for (const auto& t : plan) {
      double prod = t.coef;
      for (std::size_t j = 0; j < t.axes.size() && prod != 0.0; ++j)
        prod *= cdf_weighted_factor(Kbar, t.axes[j], sample.points(i, static_cast<Index>(j)),
                                    h(static_cast<Index>(j)), rule,
                                    std::max(1, spec.panels_per_axis));
      sum += prod;
    }
  auto r = base_report(psi.id(), sample.model_id, Method::estimator);
  r.value = sum / double(n);
  r.n = n;
  r.h = Kbar.is_indicator() ? 0.0 : h.maxCoeff();
  r.seed = sample.seed;
  return r;
}

double kde_pointwise(const Sample& sample, const Kernel& K, const Vector& h, const Vector& x)
{
  const Index k = sample.dim();
  if (x.size() != k || h.size() != k || (h.array() <= 0.0).any())
    fail(ErrorKind::invalid_argument, "dimension mismatch in pointwise estimate");
  const Kernel Kk = K.dim() == k ? K : K.with_dim(k);
  double acc = 0.0;
  Vector w(k);
  for (Index i = 0; i < sample.n(); ++i) {
    for (Index j = 0; j < k; ++j)
      w(j) = (x(j) - sample.points(i, j)) / h(j);
    if ((w.array().abs() < 1.0).all())
      acc += Kk(w);
  }
  return acc / (double(sample.n()) * h.prod());
}

FunctionalReport bias_functional(const DistributionModel& model, const Kernel& K, const Vector& h,
                                 const TestFunction& psi, const QuadratureSpec& spec)
{
  const Index k = model.dim();
  if (K.is_indicator())
    fail(ErrorKind::invalid_argument, "bias functional needs a kernel with a density part");
  const int l = K.order();
  const Kernel Kk = K.dim() == k ? K : K.with_dim(k);
  const auto check = verify_order(Kk, l, 1e-9);
  if (!check.passed)
    fail(ErrorKind::invalid_argument, "kernel fails its declared order " + std::to_string(l) +
                                        ": " + check.message);
  if (psi.dim() != k || h.size() != k || (h.array() <= 0.0).any())
    fail(ErrorKind::invalid_argument, "dimension mismatch in bias functional");
  if (psi.smoothness_order() < l + k)
    fail(ErrorKind::unsupported_order, "bias functional needs psi in D_" +
                                         std::to_string(l + k) + ", got smoothness " +
                                         std::to_string(psi.smoothness_order()));
  const double hbar = h.maxCoeff();
  const auto breaks = pairing_breakpoints(model, psi);
  double total = 0.0, err = 0.0;
  for (const auto& m : multi_indices(static_cast<int>(k), l)) {
    double mu = kernel_moment(Kk, m);
    // moments that vanish by symmetry are dropped exactly
    if (std::abs(mu) < 1e-13)
      continue;
    double coef = mu;
    MultiIndex alpha(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) {
      const int mj = m[static_cast<std::size_t>(j)];
      coef *= std::pow(h(j) / hbar, mj) / std::tgamma(mj + 1.0);
      alpha[static_cast<std::size_t>(j)] = 1 + mj;
    }
    const TestFunction d = psi.derivative(alpha);
    const auto q = integrate_box(
      [&](const Vector& x) {
        const double v = d(x);
        return v == 0.0 ? 0.0 : model.cdf(x) * v;
      },
      psi.support_box(), spec, breaks);
    total += coef * q.value;
    err += std::abs(coef) * q.error;
  }
  auto r = base_report(psi.id(), model.id(), Method::exact_oracle);
  r.value = sign_pow(l + k) * total;
  r.error_estimate = err;
  r.h = hbar;
  r.extras = { { "bias", std::pow(hbar, l) * r.value }, { "hbar", hbar }, { "order", double(l) } };
  return r;
}

FunctionalReport covariance_functional(const DistributionModel& model, const TestFunction& psi1,
                                       const TestFunction& psi2, const QuadratureSpec& spec)
{
  auto breaks = pairing_breakpoints(model, psi1);
  const auto b2 = pairing_breakpoints(model, psi2);
  for (std::size_t j = 0; j < breaks.size() && j < b2.size(); ++j)
    append_unique(breaks[j], b2[j]);
  const auto e1 = integrate_stieltjes([&](const Vector& x) { return psi1(x); }, model, spec, breaks);
  const auto e2 = integrate_stieltjes([&](const Vector& x) { return psi2(x); }, model, spec, breaks);
  const auto e12 =
    integrate_stieltjes([&](const Vector& x) { return psi1(x) * psi2(x); }, model, spec, breaks);
  auto r = base_report(psi1.id() + "|" + psi2.id(), model.id(), Method::exact_oracle);
  r.value = e12.value - e1.value * e2.value;
  r.error_estimate = e12.error + std::abs(e1.value) * e2.error + std::abs(e2.value) * e1.error;
  return r;
}

Matrix covariance_gram(const DistributionModel& model, const std::vector<TestFunction>& psis,
                       const QuadratureSpec& spec)
{
  const auto p = static_cast<Index>(psis.size());
  std::vector<std::vector<double>> breaks(static_cast<std::size_t>(model.dim()));
  for (const auto& psi : psis) {
    const auto b = pairing_breakpoints(model, psi);
    for (std::size_t j = 0; j < breaks.size() && j < b.size(); ++j)
      append_unique(breaks[j], b[j]);
  }
  Vector means(p);
  for (Index a = 0; a < p; ++a)
    means(a) = integrate_stieltjes([&](const Vector& x) { return psis[a](x); }, model, spec, breaks)
                 .value;
  Matrix G(p, p);
  for (Index a = 0; a < p; ++a)
    for (Index b = a; b < p; ++b) {
      const double e = integrate_stieltjes(
                         [&](const Vector& x) { return psis[a](x) * psis[b](x); }, model, spec,
                         breaks)
                         .value;
      G(a, b) = G(b, a) = e - means(a) * means(b);
    }
  return G;
}

double IllposedPair::f1(double x) const
{
  if (x < 0.0 || x >= 1.0)
    return 0.0;
  const long j = std::min(static_cast<long>(x / eps), 2 * intervals - 1);
  return j % 2 == 0 ? 2.0 : 0.0;
}

double IllposedPair::f2(double x) const
{
  if (x < 0.0 || x >= 1.0)
    return 0.0;
  const long j = std::min(static_cast<long>(x / eps), 2 * intervals - 1);
  return j % 2 == 1 ? 2.0 : 0.0;
}

double IllposedPair::F1(double x) const
{
  if (x <= 0.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  const long j = std::min(static_cast<long>(x / eps), 2 * intervals - 1);
  const double r = x - j * eps;
  return 2.0 * eps * double((j + 1) / 2) + (j % 2 == 0 ? 2.0 * r : 0.0);
}

double IllposedPair::F2(double x) const
{
  if (x <= 0.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  const long j = std::min(static_cast<long>(x / eps), 2 * intervals - 1);
  const double r = x - j * eps;
  return 2.0 * eps * double(j / 2) + (j % 2 == 1 ? 2.0 * r : 0.0);
}

std::vector<double> IllposedPair::breakpoints() const
{
  std::vector<double> b;
  for (long j = 0; j <= 2 * intervals; ++j)
    b.push_back(double(j) / double(2 * intervals));
  return b;
}

IllposedPair illposed_pair(double eps_bar)
{
  if (!(eps_bar > 0.0 && eps_bar < 1.0))
    fail(ErrorKind::invalid_argument, "eps_bar must lie in (0, 1)");
  // eps = eps_bar / 2, rounded down so that 1/eps is an even integer
  long N = static_cast<long>(std::ceil(2.0 / eps_bar - 1e-9));
  if (N % 2)
    ++N;
  IllposedPair p;
  p.eps_bar = eps_bar;
  p.eps = 1.0 / double(N);
  p.intervals = N / 2;
  // |f1 - f2| = 2 on each of the N intervals of length 1/N
  p.l1_distance = 2.0 * double(N) / double(N);
  double sup = 0.0;
  for (double x : p.breakpoints())
    sup = std::max(sup, std::abs(p.F1(x) - p.F2(x)));
  p.sup_distance = sup;
  return p;
}

IllposedGap illposed_gap(const IllposedPair& pair, const TestFunction& psi)
{
  if (psi.dim() != 1)
    fail(ErrorKind::invalid_argument, "ill-posedness demo uses univariate test functions");
  const Box& b = psi.support_box();
  auto breaks = pair.breakpoints();
  append_unique(breaks, psi.breakpoints()[0]);
  QuadratureSpec spec;
  spec.panels_per_axis = 1;
  const double gap = integrate_1d([&](double x) { return (pair.f1(x) - pair.f2(x)) * psi(x); },
                                  b.lower(0), b.upper(0), spec, breaks)
                       .value;
  // int |psi'| with panels split at sign changes of psi'
  std::vector<double> zeros = psi.breakpoints()[0];
  const int scan = 4000;
  double prev = psi.derivative(1, b.lower(0));
  for (int i = 1; i <= scan; ++i) {
    const double x = b.lower(0) + (b.upper(0) - b.lower(0)) * i / scan;
    const double v = psi.derivative(1, x);
    if ((prev < 0.0) != (v < 0.0)) {
      double lo = x - (b.upper(0) - b.lower(0)) / scan, hi = x;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((psi.derivative(1, mid) < 0.0) == (prev < 0.0))
          lo = mid;
        else
          hi = mid;
      }
      zeros.push_back(0.5 * (lo + hi));
    }
    prev = v;
  }
  const double tv = integrate_1d([&](double x) { return std::abs(psi.derivative(1, x)); },
                                 b.lower(0), b.upper(0), {}, zeros)
                      .value;
  return { std::abs(gap), pair.sup_distance * tv };
}

const DistributionModel& conditioning_model(const DistributionModel& model)
{
  if (const auto* r = dynamic_cast<const RegressionModel*>(&model))
    return r->x_model();
  if (const auto* p = dynamic_cast<const IndependentProductModel*>(&model))
    if (p->y_model().dim() == 1)
      return p->x_model();
  fail(ErrorKind::unsupported_combination,
       "model " + model.id() + " has no conditional structure (need product or regression)");
}

FunctionalReport conddist_pair_oracle(const DistributionModel& model, const TestFunction& psi,
                                      double y, const QuadratureSpec& spec)
{
  check_conditional(model, psi);
  const DistributionModel& xm = conditioning_model(model);
  // panel doubling to target_tol: flat-edged psi such as mollifiers need
  // many panels once composed with a curved F_x
  QuadratureSpec fine = spec;
  double coarse_v = conddist_from_nodes(model, copula_nodes(xm, psi, fine), y), fine_v = coarse_v;
  for (;;) {
    fine.panels_per_axis *= 2;
    fine_v = conddist_from_nodes(model, copula_nodes(xm, psi, fine), y);
    if (std::abs(fine_v - coarse_v) <= spec.target_tol * std::max(1.0, std::abs(fine_v)) ||
        fine.panels_per_axis >= 512)
      break;
    coarse_v = fine_v;
  }
  auto r = base_report(psi.id(), model.id(), Method::exact_oracle);
  r.value = fine_v;
  r.error_estimate = std::abs(fine_v - coarse_v);
  r.extras = { { "y", y } };
  return r;
}

FunctionalReport conddens_pair_oracle(const DistributionModel& model, const TestFunction& psi_x,
                                      const TestFunction& psi_y, const QuadratureSpec& spec)
{
  check_conditional(model, psi_x);
  if (psi_y.dim() != 1)
    fail(ErrorKind::invalid_argument, "conditional density pairing supports d_y = 1");
  const DistributionModel& xm = conditioning_model(model);
  QuadratureSpec fine = spec;
  fine.panels_per_axis *= 2;
  const CopulaNodes nodes = copula_nodes(xm, psi_x, fine);
  const Box& b = psi_y.support_box();
  const auto q = integrate_1d(
    [&](double y) {
      const double d = psi_y.derivative(1, y);
      return d == 0.0 ? 0.0 : -d * conddist_from_nodes(model, nodes, y);
    },
    b.lower(0), b.upper(0), spec, psi_y.breakpoints()[0]);
  auto r = base_report(psi_x.id() + "x" + psi_y.id(), model.id(), Method::exact_oracle);
  r.value = q.value;
  r.error_estimate = q.error;
  return r;
}

LemmaTransform lemma_transform(const TestFunction& psi, const DistributionModel& x_model,
                               double density_floor)
{
  if (x_model.dim() != 1 || psi.dim() != 1)
    fail(ErrorKind::unsupported_combination, "lemma transform is implemented for d_x = 1");
  if (!x_model.has_density())
    fail(ErrorKind::not_in_phi_c, "x model " + x_model.id() + " has no density");
  const Box& sb = psi.support_box();
  LemmaTransform t;
  t.x_window = Box::interval(x_model.marginal_quantile(0, std::max(0.0, sb.lower(0))),
                             x_model.marginal_quantile(0, std::min(1.0, sb.upper(0))));
  const auto psi_breaks = psi.breakpoints();
  for (double b : psi_breaks[0])
    if (b > 0.0 && b < 1.0)
      t.breakpoints.push_back(x_model.marginal_quantile(0, b));
  const double lo = t.x_window.lower(0), hi = t.x_window.upper(0);
  for (int i = 1; i < 200; ++i) {
    const double x = lo + (hi - lo) * i / 200.0;
    const double f = x_model.density(Vector::Constant(1, x));
    if (!(f > density_floor))
      fail(ErrorKind::not_in_phi_c, "density of " + x_model.id() + " vanishes at x = " +
                                      fmt17(x) + " inside the transformed support");
  }
  const TestFunction* p = &psi;
  const DistributionModel* m = &x_model;
  t.forward = [p, m](double x) {
    const double v = (*p)(m->marginal_cdf(0, x));
    return v == 0.0 ? 0.0 : m->density(Vector::Constant(1, x)) * v;
  };
  return t;
}

std::function<double(double)> lemma_inverse(std::function<double(double)> psi_tilde,
                                            const DistributionModel& x_model)
{
  const DistributionModel* m = &x_model;
  return [psi_tilde = std::move(psi_tilde), m](double a) {
    if (!(a > 0.0 && a < 1.0))
      return 0.0;
    const double x = m->marginal_quantile(0, a);
    const double f = m->density(Vector::Constant(1, x));
    return f > 0.0 ? psi_tilde(x) / f : 0.0;
  };
}

FunctionalReport conddist_pair_lemma(const DistributionModel& model, const TestFunction& psi,
                                     double y, const QuadratureSpec& spec)
{
  check_conditional(model, psi);
  const DistributionModel& xm = conditioning_model(model);
  const LemmaTransform t = lemma_transform(psi, xm);
  const auto q = integrate_1d(
    [&](double x) {
      const double v = t.forward(x);
      return v == 0.0 ? 0.0 : model.conditional_cdf(y, Vector::Constant(1, x)) * v;
    },
    t.x_window.lower(0), t.x_window.upper(0), spec, t.breakpoints);
  auto r = base_report(psi.id(), model.id(), Method::exact_oracle);
  r.value = q.value;
  r.error_estimate = q.error;
  r.extras = { { "y", y } };
  return r;
}

MomentFunction MomentFunction::constant(double c)
{
  return { "const(" + fmt17(c) + ")", [c](double) { return c; }, [](double) { return 0.0; } };
}

MomentFunction MomentFunction::identity()
{
  return { "y", [](double y) { return y; }, [](double) { return 1.0; } };
}

MomentFunction MomentFunction::power(int k)
{
  if (k < 0)
    fail(ErrorKind::invalid_argument, "moment power must be non-negative");
  return { "y^" + std::to_string(k), [k](double y) { return std::pow(y, k); },
           [k](double y) { return k == 0 ? 0.0 : k * std::pow(y, k - 1); } };
}

PartitionSum sum_over_shells(const PartitionOfUnity& pu, const Box& core,
                             const std::function<double(const LatticeIndex&)>& term,
                             double tail_tol, int max_shells)
{
  PartitionSum out;
  double prev = kInf;
  for (int s = 0; s < max_shells; ++s) {
    double shell_sum = 0.0;
    for (const auto& v : pu.shell(core, s)) {
      const double t = term(v);
      out.terms.emplace_back(v, t);
      shell_sum += t;
    }
    out.value += shell_sum;
    if (std::abs(shell_sum) < tail_tol && std::abs(prev) < tail_tol) {
      out.shells = s + 1;
      out.tail = std::abs(shell_sum) + std::abs(prev);
      return out;
    }
    prev = shell_sum;
  }
  fail(ErrorKind::divergence_suspected,
       "partition tail did not fall below " + fmt17(tail_tol) + " within " +
         std::to_string(max_shells) + " shells (conditional moment may not exist)");
}

PartitionSum condmoment_terms(const DistributionModel& model, const MomentFunction& g,
                              const TestFunction& psi, const PartitionOfUnity& pu,
                              double tail_tol, int max_shells, const QuadratureSpec& spec)
{
  check_conditional(model, psi);
  if (pu.dim() != 1)
    fail(ErrorKind::invalid_argument, "conditional moments are implemented for d_y = 1");
  const DistributionModel& xm = conditioning_model(model);
  QuadratureSpec fine = spec;
  fine.panels_per_axis *= 2;
  const CopulaNodes nodes = copula_nodes(xm, psi, fine);
  const double delta = pu.spacing();
  // V(y) at the nodes of each lattice cell [k delta, (k+1) delta], shared by
  // the two members overlapping the cell
  struct Cell
  {
    std::vector<double> y, w, v;
  };
  std::map<long, Cell> cells;
  auto cell = [&](long k) -> const Cell& {
    auto it = cells.find(k);
    if (it != cells.end())
      return it->second;
    Cell c;
    // members flatten at the cell ends like mollifiers, where the panel rule
    // converges slowly; four times the panels keeps the error near 1e-9
    panel_nodes(k * delta, (k + 1) * delta, {}, spec.panel_order, 4 * spec.panels_per_axis, c.y,
                c.w);
    for (double y : c.y)
      c.v.push_back(conddist_from_nodes(model, nodes, y));
    return cells.emplace(k, std::move(c)).first->second;
  };
  auto term = [&](const LatticeIndex& v) {
    const TestFunction member = pu.member(v);
    // (g psi_v)' integrates to zero, so V may be shifted by any constant; the
    // value at the member centre keeps far terms at the size of the tails
    const double shift = conddist_from_nodes(model, nodes, double(v[0]) * delta);
    double acc = 0.0;
    for (long k = v[0] - 1; k <= v[0]; ++k) {
      const Cell& c = cell(k);
      for (std::size_t i = 0; i < c.y.size(); ++i) {
        const double y = c.y[i];
        const double dgpsi = g.dg(y) * member(y) + g.g(y) * member.derivative(1, y);
        acc += c.w[i] * (c.v[i] - shift) * dgpsi;
      }
    }
    return -acc;
  };
  return sum_over_shells(pu, pu.region(), term, tail_tol, max_shells);
}

FunctionalReport condmoment_pair_oracle(const DistributionModel& model, const MomentFunction& g,
                                        const TestFunction& psi, const PartitionOfUnity& pu,
                                        double tail_tol, int max_shells,
                                        const QuadratureSpec& spec)
{
  const PartitionSum s = condmoment_terms(model, g, psi, pu, tail_tol, max_shells, spec);
  auto r = base_report(psi.id() + "|" + g.id, model.id(), Method::exact_oracle);
  r.value = s.value;
  r.error_estimate = s.tail;
  r.extras = { { "shells", double(s.shells) },
               { "members", double(s.terms.size()) },
               { "tail", s.tail } };
  return r;
}

Vector conditional_weights(const Sample& sample, const TestFunction& psi,
                           const ConditionalSmoothing& sm)
{
  const Index n = sample.n(), dx = sample.dim() - 1;
  if (dx < 1 || psi.dim() != dx)
    fail(ErrorKind::invalid_argument, "sample needs d_x + 1 columns matching the test function");
  Vector A = Vector::Zero(n);
  if (sm.x_kernel.is_indicator()) {
    if (dx == 1) {
      std::vector<Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Index{ 0 });
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return sample.points(a, 0) < sample.points(b, 0);
      });
      // tie groups share Fhat_x = (group end) / n
      std::vector<double> d(static_cast<std::size_t>(n));
      std::vector<Index> group_start(static_cast<std::size_t>(n));
      Index p = 0;
      while (p < n) {
        Index q = p;
        while (q < n && sample.points(order[q], 0) == sample.points(order[p], 0))
          ++q;
        const double v = psi.derivative(1, double(q) / double(n));
        for (Index r = p; r < q; ++r) {
          d[static_cast<std::size_t>(r)] = v;
          group_start[static_cast<std::size_t>(r)] = p;
        }
        p = q;
      }
      std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
      for (Index r = n - 1; r >= 0; --r)
        suffix[static_cast<std::size_t>(r)] = suffix[static_cast<std::size_t>(r) + 1] + d[static_cast<std::size_t>(r)];
      for (Index r = 0; r < n; ++r)
        A(order[r]) = suffix[static_cast<std::size_t>(group_start[static_cast<std::size_t>(r)])] / double(n);
      return A;
    }
    // general d_x: O(n^2) dominance counts
    Matrix u(n, dx);
    for (Index j = 0; j < dx; ++j) {
      std::vector<double> col(sample.points.col(j).data(), sample.points.col(j).data() + n);
      std::sort(col.begin(), col.end());
      for (Index i = 0; i < n; ++i)
        u(i, j) = double(std::upper_bound(col.begin(), col.end(), sample.points(i, j)) - col.begin()) /
                  double(n);
    }
    const TestFunction dpsi = psi.mixed_derivative();
    Vector d(n);
    for (Index i = 0; i < n; ++i)
      d(i) = dpsi(u.row(i).transpose());
    const double sgn = sign_pow(dx + 1);
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        bool dominates = true;
        for (Index c = 0; c < dx && dominates; ++c)
          dominates = sample.points(j, c) <= sample.points(i, c);
        if (dominates)
          acc += d(i);
      }
      A(j) = sgn * acc / double(n);
    }
    return A;
  }
  if (dx != 1)
    fail(ErrorKind::unsupported_combination, "smoothed x-side estimator supports d_x = 1");
  const Kernel& K = sm.x_kernel;
  if (!K.is_symmetric())
    fail(ErrorKind::unsupported_combination, "smoothed x-side estimator needs a symmetric kernel");
  if (!(sm.h > 0.0))
    fail(ErrorKind::invalid_argument, "smoothed x-side estimator needs h > 0");
  const double h = sm.h;
  std::vector<double> t(sample.points.col(0).data(), sample.points.col(0).data() + n);
  const KernelSum Fx(t, std::vector<double>(t.size(), 1.0 / double(n)),
                     K.antiderivative_polynomial(), 1.0, h);
  const KernelSum fx(t, std::vector<double>(t.size(), 1.0 / (double(n) * h)), K.base_polynomial(),
                     0.0, h);
  std::vector<double> cuts;
  for (double v : t) {
    cuts.push_back(v - h);
    cuts.push_back(v + h);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  // psi' composed with a high-order Ftilde is far from polynomial between
  // cuts, so each cut interval gets several Gauss pieces
  const GaussRule& rule = gauss_legendre(12);
  constexpr int pieces = 4;
  std::vector<double> nodes, weights;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double width = (cuts[i + 1] - cuts[i]) / pieces, half = 0.5 * width;
    for (int piece = 0; piece < pieces; ++piece) {
      const double a = cuts[i] + piece * width;
      for (Index q = 0; q < rule.nodes.size(); ++q) {
        const double x = a + half * (rule.nodes(q) + 1.0);
        const double f = fx(x);
        if (f == 0.0)
          continue;
        const double c = half * rule.weights(q) * psi.derivative(1, std::clamp(Fx(x), 0.0, 1.0)) * f;
        nodes.push_back(x);
        weights.push_back(c);
        total += c;
      }
    }
  }
  // A_j = int Kbar((x - x_j)/h) c(x) dx = total - sum_nodes c Kbar((x_j - x)/h)
  const KernelSum S(nodes, weights, K.antiderivative_polynomial(), 1.0, h);
  for (Index j = 0; j < n; ++j)
    A(j) = total - S(t[static_cast<std::size_t>(j)]);
  return A;
}

namespace {

double gbar(const ConditionalSmoothing& sm, double y, double yj)
{
  if (sm.y_kernel.is_indicator())
    return yj <= y ? 1.0 : 0.0;
  return sm.y_kernel.base_antiderivative((y - yj) / sm.h_y);
}

void check_y_smoothing(const ConditionalSmoothing& sm)
{
  if (!sm.y_kernel.is_indicator() && !(sm.h_y > 0.0))
    fail(ErrorKind::invalid_argument, "smoothed y-side estimator needs h_y > 0");
}

} // namespace

FunctionalReport conddist_estimator_pair(const Sample& sample, const TestFunction& psi, double y,
                                         const ConditionalSmoothing& sm)
{
  check_y_smoothing(sm);
  const Vector A = conditional_weights(sample, psi, sm);
  const Index n = sample.n(), dx = sample.dim() - 1;
  double acc = 0.0;
  for (Index j = 0; j < n; ++j)
    acc += gbar(sm, y, sample.points(j, dx)) * A(j);
  auto r = base_report(psi.id(), sample.model_id, Method::estimator);
  r.value = -acc / double(n);
  r.n = n;
  r.h = sm.h;
  r.seed = sample.seed;
  r.extras = { { "y", y }, { "h_y", sm.h_y } };
  return r;
}

FunctionalReport condmean_estimator_pair(const Sample& sample, const TestFunction& psi,
                                         const PartitionOfUnity& pu, double tail_tol,
                                         const ConditionalSmoothing& sm)
{
  check_y_smoothing(sm);
  if (pu.dim() != 1)
    fail(ErrorKind::invalid_argument, "conditional mean estimator needs d_y = 1");
  const Vector A = conditional_weights(sample, psi, sm);
  const Index n = sample.n(), dx = sample.dim() - 1;
  const double delta = pu.spacing();
  const double hy = sm.y_kernel.is_indicator() ? 0.0 : sm.h_y;
  // per-member terms -(1/n) sum_j A_j int G_h(y - y_j) y psi_v(y) dy
  std::map<long, double> terms;
  std::map<long, TestFunction> members;
  auto member = [&](long v) -> const TestFunction& {
    auto it = members.find(v);
    if (it == members.end())
      it = members.emplace(v, pu.member({ v })).first;
    return it->second;
  };
  const GaussRule& rule = gauss_legendre(8);
  double ymin = kInf, ymax = -kInf;
  for (Index j = 0; j < n; ++j) {
    const double yj = sample.points(j, dx);
    ymin = std::min(ymin, yj);
    ymax = std::max(ymax, yj);
    if (A(j) == 0.0)
      continue;
    const long first = static_cast<long>(std::floor((yj - hy) / delta));
    const long last = static_cast<long>(std::ceil((yj + hy) / delta));
    for (long v = first; v <= last; ++v) {
      const TestFunction& m = member(v);
      double val;
      if (hy == 0.0) {
        val = yj * m(yj);
      } else {
        // split [-1, 1] where y_j + h w crosses the member's breakpoints
        std::vector<double> cuts{ -1.0, 1.0 };
        const auto member_breaks = m.breakpoints();
        for (double b : member_breaks[0]) {
          const double w = (b - yj) / hy;
          if (w > -1.0 && w < 1.0)
            cuts.push_back(w);
        }
        std::sort(cuts.begin(), cuts.end());
        val = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
          const double half = 0.5 * (cuts[c + 1] - cuts[c]);
          for (Index q = 0; q < rule.nodes.size(); ++q) {
            const double w = cuts[c] + half * (rule.nodes(q) + 1.0);
            const double yy = yj + hy * w;
            val += half * rule.weights(q) * sm.y_kernel.base(w) * yy * m(yy);
          }
        }
      }
      if (val != 0.0)
        terms[v] -= A(j) * val / double(n);
    }
  }
  const Box core = Box::interval(ymin - hy, ymax + hy);
  const PartitionSum s = sum_over_shells(
    pu, core,
    [&](const LatticeIndex& v) {
      const auto it = terms.find(v[0]);
      return it == terms.end() ? 0.0 : it->second;
    },
    tail_tol, 100000);
  auto r = base_report(psi.id(), sample.model_id, Method::estimator);
  r.value = s.value;
  r.error_estimate = s.tail;
  r.n = n;
  r.h = sm.h;
  r.seed = sample.seed;
  r.extras = { { "shells", double(s.shells) }, { "members", double(s.terms.size()) },
               { "tail", s.tail } };
  return r;
}

} // namespace genfun
