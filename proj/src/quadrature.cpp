#include "genfun/quadrature.hpp"

#include "genfun/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace genfun {

namespace {

GaussRule compute_gauss_legendre(int m)
{
  GaussRule rule{ Vector(m), Vector(m) };
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (m == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    rule.nodes(m - 1 - i) = x;
    rule.weights(m - 1 - i) = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

std::string format_point(const Vector& x)
{
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Index j = 0; j < x.size(); ++j)
    os << (j ? ", " : "") << x(j);
  os << ")";
  return os.str();
}

void check_finite(double v, const Vector& x)
{
  if (!std::isfinite(v))
    fail(ErrorKind::integrand_error, "non-finite integrand value at " + format_point(x));
}

struct AxisNodes
{
  std::vector<double> x;
  std::vector<double> w;
};

double tensor_sum(const Integrand& g, const std::vector<AxisNodes>& axes, double scale)
{
  const std::size_t k = axes.size();
  for (const auto& a : axes)
    if (a.x.empty())
      return 0.0;
  std::vector<std::size_t> idx(k, 0);
  Vector point(static_cast<Index>(k));
  double acc = 0.0;
  while (true) {
    double w = scale;
    for (std::size_t j = 0; j < k; ++j) {
      point(static_cast<Index>(j)) = axes[j].x[idx[j]];
      w *= axes[j].w[idx[j]];
    }
    if (w != 0.0) {
      const double v = g(point);
      check_finite(v, point);
      acc += w * v;
    }
    std::size_t j = 0;
    while (j < k && ++idx[j] == axes[j].x.size()) {
      idx[j] = 0;
      ++j;
    }
    if (j == k)
      break;
  }
  return acc;
}

void cantor_nodes(double a, double len, double mass, int depth, int max_depth, double lo,
                  double hi, AxisNodes& out)
{
  if (a + len <= lo || a >= hi)
    return;
  const bool inside = a >= lo && a + len <= hi;
  if ((inside && depth >= max_depth) || depth >= max_depth + 24) {
    const double mid = a + 0.5 * len;
    if (mid >= lo && mid <= hi) {
      out.x.push_back(mid);
      out.w.push_back(mass);
    }
    return;
  }
  const double third = len / 3.0;
  cantor_nodes(a, third, 0.5 * mass, depth + 1, max_depth, lo, hi, out);
  cantor_nodes(a + 2.0 * third, third, 0.5 * mass, depth + 1, max_depth, lo, hi, out);
}

AxisNodes axis_nodes(const AxisMeasure& m, double lo, double hi,
                     const std::vector<double>& extra_breaks, const QuadratureSpec& spec,
                     int panels)
{
  AxisNodes out;
  if (const auto* d = std::get_if<DensityPart>(&m)) {
    const double a = std::max(lo, d->lo), b = std::min(hi, d->hi);
    if (!(b > a))
      return out;
    std::vector<double> breaks = d->breaks;
    breaks.insert(breaks.end(), extra_breaks.begin(), extra_breaks.end());
    panel_nodes(a, b, breaks, spec.panel_order, panels, out.x, out.w);
    for (std::size_t i = 0; i < out.x.size(); ++i)
      out.w[i] *= d->pdf(out.x[i]);
  } else if (const auto* at = std::get_if<AtomPart>(&m)) {
    for (std::size_t i = 0; i < at->points.size(); ++i)
      if (at->points[i] >= lo && at->points[i] <= hi) {
        out.x.push_back(at->points[i]);
        out.w.push_back(at->weights[i]);
      }
  } else {
    const auto& c = std::get<CantorPart>(m);
    cantor_nodes(c.offset, c.scale, 1.0, 0, spec.cantor_depth, lo, hi, out);
  }
  return out;
}

std::vector<AxisNodes> component_nodes(const MeasureComponent& comp, const QuadratureSpec& spec,
                                       const Box& window,
                                       const std::vector<std::vector<double>>& breakpoints,
                                       int panels)
{
  std::vector<AxisNodes> axes;
  for (std::size_t j = 0; j < comp.axes.size(); ++j) {
    const double lo = window.dim() ? window.lower(static_cast<Index>(j)) : -kInf;
    const double hi = window.dim() ? window.upper(static_cast<Index>(j)) : kInf;
    static const std::vector<double> none;
    const auto& extra = j < breakpoints.size() ? breakpoints[j] : none;
    axes.push_back(axis_nodes(comp.axes[j], lo, hi, extra, spec, panels));
  }
  return axes;
}

} // namespace

const GaussRule& gauss_legendre(int m)
{
  if (m < 1)
    fail(ErrorKind::invalid_argument, "Gauss-Legendre rule needs at least one node");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[m];
  if (!slot)
    slot = std::make_unique<GaussRule>(compute_gauss_legendre(m));
  return *slot;
}

void panel_nodes(double a, double b, const std::vector<double>& breaks, int panel_order,
                 int panels, std::vector<double>& x, std::vector<double>& w)
{
  x.clear();
  w.clear();
  if (!(b > a))
    return;
  std::vector<double> cuts{ a };
  for (double t : breaks)
    if (t > a && t < b)
      cuts.push_back(t);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const GaussRule& rule = gauss_legendre(panel_order);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const int np = std::max(1, static_cast<int>(std::ceil(panels * (hi - lo) / (b - a) - 1e-9)));
    const double step = (hi - lo) / np;
    for (int p = 0; p < np; ++p) {
      const double pa = lo + p * step;
      const double half = 0.5 * step;
      for (Index q = 0; q < rule.nodes.size(); ++q) {
        x.push_back(pa + half * (rule.nodes(q) + 1.0));
        w.push_back(half * rule.weights(q));
      }
    }
  }
}

QuadResult integrate_box(const Integrand& g, const Box& box, const QuadratureSpec& spec,
                         const std::vector<std::vector<double>>& breakpoints)
{
  const Index k = box.dim();
  if (k < 1 || k > spec.max_dim)
    fail(ErrorKind::invalid_argument, "integrate_box supports dimensions 1.." +
                                        std::to_string(spec.max_dim));
  auto rule = [&](int panels) {
    std::vector<AxisNodes> axes(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) {
      static const std::vector<double> none;
      const auto& br = static_cast<std::size_t>(j) < breakpoints.size() ? breakpoints[j] : none;
      panel_nodes(box.lower(j), box.upper(j), br, spec.panel_order, panels, axes[j].x,
                  axes[j].w);
    }
    return tensor_sum(g, axes, 1.0);
  };
  // double the panels until successive rules agree to target_tol, within a
  // node budget that shrinks with the dimension
  const int cap = k == 1 ? 512 : k == 2 ? 64 : 16;
  int panels = std::max(1, spec.panels_per_axis);
  double coarse = rule(panels);
  double fine = rule(2 * panels);
  while (std::abs(fine - coarse) > spec.target_tol * std::max(1.0, std::abs(fine)) &&
         4 * panels <= cap) {
    panels *= 2;
    coarse = fine;
    fine = rule(2 * panels);
  }
  return { fine, std::abs(fine - coarse) };
}

QuadResult integrate_1d(const Integrand1D& g, double a, double b, const QuadratureSpec& spec,
                        const std::vector<double>& breakpoints)
{
  if (!(b >= a))
    fail(ErrorKind::invalid_argument, "integrate_1d needs a <= b");
  if (a == b)
    return {};
  return integrate_box([&](const Vector& x) { return g(x(0)); }, Box::interval(a, b), spec,
                       { breakpoints });
}

Index Measure::dim() const
{
  return components.empty() ? 0 : static_cast<Index>(components.front().axes.size());
}

Measure Measure::marginal(Index axis) const
{
  Measure m;
  for (const auto& c : components)
    m.components.push_back({ c.weight, { c.axes.at(static_cast<std::size_t>(axis)) } });
  return m;
}

PointSet stieltjes_nodes(const Measure& measure, const QuadratureSpec& spec, const Box& window,
                         const std::vector<std::vector<double>>& breakpoints)
{
  const Index k = measure.dim();
  std::vector<std::vector<double>> rows;
  std::vector<double> weights;
  for (const auto& comp : measure.components) {
    if (comp.weight == 0.0)
      continue;
    const auto axes = component_nodes(comp, spec, window, breakpoints, spec.panels_per_axis);
    bool empty = false;
    for (const auto& a : axes)
      empty = empty || a.x.empty();
    if (empty)
      continue;
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
      std::vector<double> row(axes.size());
      double w = comp.weight;
      for (std::size_t j = 0; j < axes.size(); ++j) {
        row[j] = axes[j].x[idx[j]];
        w *= axes[j].w[idx[j]];
      }
      rows.push_back(std::move(row));
      weights.push_back(w);
      std::size_t j = 0;
      while (j < axes.size() && ++idx[j] == axes[j].x.size()) {
        idx[j] = 0;
        ++j;
      }
      if (j == axes.size())
        break;
    }
  }
  PointSet ps{ Matrix(static_cast<Index>(rows.size()), k),
               Vector(static_cast<Index>(weights.size())) };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < k; ++j)
      ps.points(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    ps.weights(static_cast<Index>(i)) = weights[i];
  }
  return ps;
}

QuadResult integrate_measure(const Integrand& g, const Measure& measure,
                             const QuadratureSpec& spec, const Box& window,
                             const std::vector<std::vector<double>>& breakpoints)
{
  auto pass = [&](int panels) {
    double acc = 0.0;
    for (const auto& comp : measure.components) {
      if (comp.weight == 0.0)
        continue;
      acc += tensor_sum(g, component_nodes(comp, spec, window, breakpoints, panels), comp.weight);
    }
    return acc;
  };
  bool has_density = false;
  for (const auto& comp : measure.components)
    for (const auto& a : comp.axes)
      has_density = has_density || std::holds_alternative<DensityPart>(a);
  const double coarse = pass(spec.panels_per_axis);
  if (!has_density)
    return { coarse, 0.0 };
  const double fine = pass(2 * spec.panels_per_axis);
  return { fine, std::abs(fine - coarse) };
}

QuadResult integrate_stieltjes(const Integrand& g, const DistributionModel& model,
                               const QuadratureSpec& spec,
                               const std::vector<std::vector<double>>& breakpoints)
{
  return integrate_measure(g, model.measure(), spec, {}, breakpoints);
}

QuadResult integrate_stieltjes_mc(const Integrand& g, const DistributionModel& model,
                                  Index draws, std::uint64_t seed)
{
  if (draws < 2)
    fail(ErrorKind::invalid_argument, "Monte Carlo integration needs at least two draws");
  const Sample s = model.sample(draws, seed);
  Vector v(draws);
  for (Index i = 0; i < draws; ++i) {
    const Vector x = s.points.row(i).transpose();
    v(i) = g(x);
    check_finite(v(i), x);
  }
  const double m = v.mean();
  const double var = (v.array() - m).square().sum() / double(draws - 1);
  return { m, std::sqrt(var / double(draws)) };
}

double integrate_empirical(const Integrand& g, const Sample& sample)
{
  const Index n = sample.points.rows();
  if (n == 0)
    fail(ErrorKind::invalid_argument, "empirical integral over an empty sample");
  double acc = 0.0;
  for (Index i = 0; i < n; ++i)
    acc += g(sample.points.row(i).transpose());
  return acc / double(n);
}

} // namespace genfun
