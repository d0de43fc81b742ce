#include "genfun/testspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace genfun {

namespace {

std::vector<Polynomial> mollifier_prefactors(int max_order)
{
  // d^n/du^n exp(-1/s) = P_n(u) s^(-2n) exp(-1/s), s = 1 - u^2
  const Polynomial u = Polynomial::monomial(1);
  const Polynomial s = Polynomial::constant(1.0) - Polynomial::monomial(2);
  std::vector<Polynomial> p{ Polynomial::constant(1.0) };
  for (int n = 0; n < max_order; ++n) {
    const Polynomial& pn = p.back();
    p.push_back(pn.derivative() * s * s + (4.0 * n) * (u * pn * s) - 2.0 * (u * pn));
  }
  return p;
}

double mollifier_eval(const std::vector<Polynomial>& pre, double c, double r, int order,
                      double x)
{
  const double u = (x - c) / r;
  const double s = 1.0 - u * u;
  if (s <= 0.0)
    return 0.0;
  if (order == 0)
    return std::exp(-1.0 / s);
  return pre[order](u) * std::exp(-1.0 / s - 2.0 * order * std::log(s)) /
         std::pow(r, order);
}

double binomial(int n, int k)
{
  double b = 1.0;
  for (int i = 1; i <= k; ++i)
    b = b * (n - k + i) / i;
  return b;
}

void check_order(int order, int smoothness)
{
  if (order < 0)
    fail(ErrorKind::invalid_argument, "negative derivative order");
  if (order > smoothness)
    fail(ErrorKind::unsupported_order, "derivative order " + std::to_string(order) +
                                         " exceeds factor smoothness " +
                                         std::to_string(smoothness));
}

} // namespace

PiecewisePolyFactor::PiecewisePolyFactor(std::vector<double> breaks,
                                         std::vector<Polynomial> pieces, int smoothness,
                                         double scale)
  : breaks_(std::move(breaks))
  , smoothness_(smoothness)
  , scale_(scale)
{
  if (!(scale > 0.0))
    fail(ErrorKind::invalid_argument, "piece scale must be positive");
  if (breaks_.size() != pieces.size() + 1 || pieces.empty())
    fail(ErrorKind::invalid_argument, "piecewise polynomial needs one more break than pieces");
  if (!std::is_sorted(breaks_.begin(), breaks_.end()))
    fail(ErrorKind::invalid_argument, "breaks must be increasing");
  for (const auto& p : pieces) {
    std::vector<Polynomial> d{ p };
    for (int k = 0; k < p.degree(); ++k)
      d.push_back(d.back().derivative());
    derivs_.push_back(std::move(d));
  }
}

double PiecewisePolyFactor::eval(int order, double x) const
{
  // the factor vanishes with its derivatives at the support ends
  if (x <= breaks_.front() || x >= breaks_.back())
    return 0.0;
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t piece = static_cast<std::size_t>(it - breaks_.begin());
  piece = std::clamp<std::size_t>(piece, 1, derivs_.size()) - 1;
  const auto& d = derivs_[piece];
  if (order >= static_cast<int>(d.size()))
    return 0.0;
  const double mid = 0.5 * (breaks_[piece] + breaks_[piece + 1]);
  return d[order]((x - mid) / scale_) / std::pow(scale_, order);
}

MollifierFactor::MollifierFactor(double center, double radius, int smoothness)
  : c_(center)
  , r_(radius)
  , smoothness_(smoothness)
  , prefactors_(mollifier_prefactors(smoothness))
{
  if (!(radius > 0.0))
    fail(ErrorKind::invalid_argument, "mollifier radius must be positive");
}

double MollifierFactor::eval(int order, double x) const
{
  check_order(order, smoothness_);
  return mollifier_eval(prefactors_, c_, r_, order, x);
}

PartitionFactor::PartitionFactor(double spacing, long index, int smoothness)
  : spacing_(spacing)
  , index_(index)
  , smoothness_(smoothness)
  , prefactors_(mollifier_prefactors(smoothness))
{
  if (!(spacing > 0.0))
    fail(ErrorKind::invalid_argument, "partition spacing must be positive");
}

std::vector<double> PartitionFactor::breakpoints() const
{
  return { lower(), index_ * spacing_, upper() };
}

double PartitionFactor::eval(int order, double x) const
{
  check_order(order, smoothness_);
  if (x <= lower() || x >= upper())
    return 0.0;
  const long k = static_cast<long>(std::floor(x / spacing_));
  std::vector<double> b(order + 1, 0.0), s(order + 1, 0.0), q(order + 1);
  for (int j = 0; j <= order; ++j) {
    for (long w = k; w <= k + 1; ++w) {
      const double v = mollifier_eval(prefactors_, w * spacing_, spacing_, j, x);
      s[j] += v;
      if (w == index_)
        b[j] = v;
    }
  }
  // Leibniz rule for b = q * s
  for (int n = 0; n <= order; ++n) {
    double acc = b[n];
    for (int j = 0; j < n; ++j)
      acc -= binomial(n, j) * q[j] * s[n - j];
    q[n] = acc / s[0];
  }
  return q[order];
}

TestFunction::TestFunction(std::vector<Term> terms, int smoothness_order, std::string id)
  : terms_(std::move(terms))
  , smoothness_(smoothness_order)
  , id_(std::move(id))
{
  if (terms_.empty() || terms_.front().factors.empty())
    fail(ErrorKind::invalid_argument, "test function needs at least one factor");
  dim_ = static_cast<Index>(terms_.front().factors.size());
  support_.lower = Vector::Constant(dim_, kInf);
  support_.upper = Vector::Constant(dim_, -kInf);
  for (auto& t : terms_) {
    if (static_cast<Index>(t.factors.size()) != dim_)
      fail(ErrorKind::invalid_argument, "terms of a test function differ in dimension");
    if (t.offsets.empty())
      t.offsets.assign(t.factors.size(), 0);
    for (Index j = 0; j < dim_; ++j) {
      support_.lower(j) = std::min(support_.lower(j), t.factors[j]->lower());
      support_.upper(j) = std::max(support_.upper(j), t.factors[j]->upper());
    }
  }
}

double TestFunction::eval_term(const Term& t, const MultiIndex* alpha, const double* x) const
{
  double prod = t.coef;
  for (Index j = 0; j < dim_; ++j) {
    const int order = t.offsets[j] + (alpha ? (*alpha)[j] : 0);
    const double v = t.factors[j]->eval(order, x[j]);
    if (v == 0.0)
      return 0.0;
    prod *= v;
  }
  return prod;
}

double TestFunction::operator()(const Vector& x) const
{
  if (x.size() != dim_)
    fail(ErrorKind::invalid_argument, "point dimension does not match test function");
  double acc = 0.0;
  for (const auto& t : terms_)
    acc += eval_term(t, nullptr, x.data());
  return acc;
}

double TestFunction::operator()(double x) const
{
  if (dim_ != 1)
    fail(ErrorKind::invalid_argument, "scalar evaluation of a multivariate test function");
  double acc = 0.0;
  for (const auto& t : terms_)
    acc += eval_term(t, nullptr, &x);
  return acc;
}

double TestFunction::derivative(const MultiIndex& alpha, const Vector& x) const
{
  if (static_cast<Index>(alpha.size()) != dim_ || x.size() != dim_)
    fail(ErrorKind::invalid_argument, "multi-index dimension does not match test function");
  if (total_order(alpha) > smoothness_)
    fail(ErrorKind::unsupported_order, "derivative of total order " +
                                         std::to_string(total_order(alpha)) + " exceeds " +
                                         std::to_string(smoothness_) + " for " + id_);
  double acc = 0.0;
  for (const auto& t : terms_)
    acc += eval_term(t, &alpha, x.data());
  return acc;
}

double TestFunction::derivative(int order, double x) const
{
  if (dim_ != 1)
    fail(ErrorKind::invalid_argument, "scalar derivative of a multivariate test function");
  const MultiIndex alpha{ order };
  if (order > smoothness_)
    fail(ErrorKind::unsupported_order, "derivative of order " + std::to_string(order) +
                                         " exceeds " + std::to_string(smoothness_) +
                                         " for " + id_);
  double acc = 0.0;
  for (const auto& t : terms_)
    acc += eval_term(t, &alpha, &x);
  return acc;
}

TestFunction TestFunction::derivative(const MultiIndex& alpha) const
{
  if (static_cast<Index>(alpha.size()) != dim_)
    fail(ErrorKind::invalid_argument, "multi-index dimension does not match test function");
  const int order = total_order(alpha);
  if (order > smoothness_)
    fail(ErrorKind::unsupported_order, "derivative of total order " + std::to_string(order) +
                                         " exceeds " + std::to_string(smoothness_) +
                                         " for " + id_);
  std::vector<Term> terms = terms_;
  for (auto& t : terms)
    for (Index j = 0; j < dim_; ++j)
      t.offsets[j] += alpha[j];
  std::string id = id_ + "_d";
  for (int a : alpha)
    id += std::to_string(a);
  return TestFunction(std::move(terms), smoothness_ - order, id);
}

TestFunction TestFunction::derivative(int order) const
{
  return derivative(MultiIndex{ order });
}

TestFunction TestFunction::mixed_derivative() const
{
  return derivative(mixed_first(static_cast<int>(dim_)));
}

std::vector<std::vector<double>> TestFunction::breakpoints() const
{
  std::vector<std::vector<double>> out(dim_);
  for (const auto& t : terms_)
    for (Index j = 0; j < dim_; ++j) {
      const auto b = t.factors[j]->breakpoints();
      out[j].insert(out[j].end(), b.begin(), b.end());
    }
  for (auto& axis : out) {
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  }
  return out;
}

TestFunction TestFunction::with_id(std::string id) const
{
  TestFunction f = *this;
  f.id_ = std::move(id);
  return f;
}

TestFunction operator*(double a, const TestFunction& f)
{
  auto terms = f.terms_;
  for (auto& t : terms)
    t.coef *= a;
  return TestFunction(std::move(terms), f.smoothness_, f.id_);
}

TestFunction operator+(const TestFunction& f, const TestFunction& g)
{
  if (f.dim_ != g.dim_)
    fail(ErrorKind::invalid_argument, "sum of test functions of different dimension");
  auto terms = f.terms_;
  terms.insert(terms.end(), g.terms_.begin(), g.terms_.end());
  return TestFunction(std::move(terms), std::min(f.smoothness_, g.smoothness_),
                      f.id_ + "+" + g.id_);
}

TestFunction make_poly_bump(const Vector& center, const Vector& radius, int p)
{
  if (center.size() != radius.size() || center.size() == 0)
    fail(ErrorKind::invalid_argument, "bump center and radius must have equal positive size");
  if ((radius.array() <= 0.0).any())
    fail(ErrorKind::invalid_argument, "bump radius must be positive");
  if (p < 2)
    fail(ErrorKind::invalid_argument, "bump exponent p must be at least 2");
  TestFunction::Term term;
  const Polynomial one_minus_sq = Polynomial::constant(1.0) - Polynomial::monomial(2);
  for (Index j = 0; j < center.size(); ++j) {
    const double c = center(j), r = radius(j);
    term.factors.push_back(std::make_shared<PiecewisePolyFactor>(
      std::vector<double>{ c - r, c + r }, std::vector<Polynomial>{ pow(one_minus_sq, p) },
      p - 1, r));
  }
  std::string id = "bump";
  for (Index j = 0; j < center.size(); ++j) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%g:%g", j ? "," : "(", center(j), radius(j));
    id += buf;
  }
  id += ")p" + std::to_string(p);
  return TestFunction({ term }, p - 1, id);
}

TestFunction make_poly_bump(double center, double radius, int p)
{
  return make_poly_bump(Vector::Constant(1, center), Vector::Constant(1, radius), p);
}

TestFunction make_mollifier(const Vector& center, const Vector& radius, int smoothness)
{
  if (center.size() != radius.size() || center.size() == 0)
    fail(ErrorKind::invalid_argument, "mollifier center and radius must have equal positive size");
  if ((radius.array() <= 0.0).any())
    fail(ErrorKind::invalid_argument, "mollifier radius must be positive");
  TestFunction::Term term;
  for (Index j = 0; j < center.size(); ++j)
    term.factors.push_back(
      std::make_shared<MollifierFactor>(center(j), radius(j), smoothness));
  std::string id = "moll";
  for (Index j = 0; j < center.size(); ++j) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%g:%g", j ? "," : "(", center(j), radius(j));
    id += buf;
  }
  id += ")";
  return TestFunction({ term }, smoothness, id);
}

TestFunction make_mollifier(double center, double radius, int smoothness)
{
  return make_mollifier(Vector::Constant(1, center), Vector::Constant(1, radius), smoothness);
}

TestFunction make_plateau(double lo, double hi, double ramp, int p)
{
  if (!(hi >= lo) || !(ramp > 0.0) || p < 2)
    fail(ErrorKind::invalid_argument, "plateau needs lo <= hi, ramp > 0, p >= 2");
  // regularized incomplete beta I_t(p, p), a polynomial step of degree 2p-1
  const int m = 2 * p - 1;
  Polynomial step;
  const Polynomial t = Polynomial::monomial(1);
  const Polynomial one_minus_t = Polynomial::constant(1.0) - t;
  for (int j = p; j <= m; ++j)
    step = step + binomial(m, j) * (pow(t, j) * pow(one_minus_t, m - j));
  // local variable t in [-1/2, 1/2] on each ramp
  const Polynomial rise = step.compose_affine(0.5, 1.0);
  const Polynomial fall = step.compose_affine(0.5, -1.0);
  TestFunction::Term term;
  term.factors.push_back(std::make_shared<PiecewisePolyFactor>(
    std::vector<double>{ lo - ramp, lo, hi, hi + ramp },
    std::vector<Polynomial>{ rise, Polynomial::constant(1.0), fall }, p - 1, ramp));
  char buf[96];
  std::snprintf(buf, sizeof buf, "plateau(%g:%g:%g)p%d", lo, hi, ramp, p);
  return TestFunction({ term }, p - 1, buf);
}

TestFunction tensor_product(const std::vector<TestFunction>& parts)
{
  if (parts.empty())
    fail(ErrorKind::invalid_argument, "tensor product of an empty list");
  std::vector<TestFunction::Term> terms{ TestFunction::Term{} };
  int smoothness = parts.front().smoothness_order();
  std::string id;
  for (const auto& part : parts) {
    if (part.dim() != 1)
      fail(ErrorKind::invalid_argument, "tensor product parts must be univariate");
    smoothness = std::min(smoothness, part.smoothness_order());
    std::vector<TestFunction::Term> next;
    for (const auto& a : terms)
      for (const auto& b : part.terms()) {
        TestFunction::Term t = a;
        t.coef *= b.coef;
        t.factors.push_back(b.factors.front());
        t.offsets.push_back(b.offsets.front());
        next.push_back(std::move(t));
      }
    terms = std::move(next);
    id += (id.empty() ? "" : "x") + part.id();
  }
  return TestFunction(std::move(terms), smoothness, id);
}

PartitionOfUnity::PartitionOfUnity(Box region, double spacing, int smoothness)
  : region_(std::move(region))
  , spacing_(spacing)
  , smoothness_(smoothness)
{
  if (!(spacing > 0.0))
    fail(ErrorKind::invalid_argument, "partition spacing must be positive");
  if (region_.dim() < 1 || region_.empty())
    fail(ErrorKind::invalid_argument, "partition region must be a nonempty box");
}

TestFunction PartitionOfUnity::member(const LatticeIndex& v) const
{
  if (static_cast<Index>(v.size()) != dim())
    fail(ErrorKind::invalid_argument, "lattice index dimension mismatch");
  TestFunction::Term term;
  std::string id = "pu[";
  for (std::size_t j = 0; j < v.size(); ++j) {
    term.factors.push_back(std::make_shared<PartitionFactor>(spacing_, v[j], smoothness_));
    id += (j ? "," : "") + std::to_string(v[j]);
  }
  return TestFunction({ term }, smoothness_, id + "]");
}

std::vector<LatticeIndex> PartitionOfUnity::covering(const Vector& y) const
{
  if (y.size() != dim())
    fail(ErrorKind::invalid_argument, "point dimension mismatch");
  std::vector<std::vector<long>> axes(dim());
  for (Index j = 0; j < dim(); ++j) {
    const long k = static_cast<long>(std::floor(y(j) / spacing_));
    for (long w = k; w <= k + 1; ++w)
      if (std::abs(y(j) - w * spacing_) < spacing_)
        axes[j].push_back(w);
  }
  std::vector<LatticeIndex> out{ LatticeIndex{} };
  for (const auto& axis : axes) {
    std::vector<LatticeIndex> next;
    for (const auto& prefix : out)
      for (long w : axis) {
        auto v = prefix;
        v.push_back(w);
        next.push_back(std::move(v));
      }
    out = std::move(next);
  }
  return out;
}

std::pair<long, long> PartitionOfUnity::index_range(double lo, double hi) const
{
  // supports are the open intervals ((v-1)s, (v+1)s)
  const long first = static_cast<long>(std::floor(lo / spacing_ - 1.0)) + 1;
  const long last = static_cast<long>(std::ceil(hi / spacing_ + 1.0)) - 1;
  return { first, last };
}

std::vector<LatticeIndex> PartitionOfUnity::shell(const Box& core, int s) const
{
  if (core.dim() != dim())
    fail(ErrorKind::invalid_argument, "core box dimension mismatch");
  std::vector<std::pair<long, long>> ranges;
  for (Index j = 0; j < dim(); ++j)
    ranges.push_back(index_range(core.lower(j), core.upper(j)));
  std::vector<LatticeIndex> out{ LatticeIndex{} };
  for (const auto& [a, b] : ranges) {
    std::vector<LatticeIndex> next;
    for (const auto& prefix : out)
      for (long w = a - s; w <= b + s; ++w) {
        auto v = prefix;
        v.push_back(w);
        next.push_back(std::move(v));
      }
    out = std::move(next);
  }
  std::vector<LatticeIndex> filtered;
  for (auto& v : out) {
    long dist = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const auto [a, b] = ranges[j];
      dist = std::max(dist, std::max(a - v[j], v[j] - b));
    }
    if (dist == s)
      filtered.push_back(std::move(v));
  }
  return filtered;
}

std::vector<LatticeIndex> PartitionOfUnity::members_in_region() const
{
  return shell(region_, 0);
}

double PartitionOfUnity::sum(const Vector& y) const
{
  double acc = 0.0;
  for (const auto& v : covering(y))
    acc += member(v)(y);
  return acc;
}

PartitionOfUnity make_partition_of_unity(const Box& region, double spacing)
{
  return PartitionOfUnity(region, spacing);
}

} // namespace genfun
