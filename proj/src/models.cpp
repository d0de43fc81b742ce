#include "genfun/models.hpp"

#include "genfun/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace genfun {

namespace {

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double clamp01(double t)
{
  return std::clamp(t, 0.0, 1.0);
}

double binomial(int n, int k)
{
  double b = 1.0;
  for (int i = 1; i <= k; ++i)
    b = b * (n - k + i) / i;
  return b;
}

} // namespace

const char* to_string(ModelKind kind)
{
  switch (kind) {
    case ModelKind::absolutely_continuous:
      return "absolutely-continuous";
    case ModelKind::atomic_mixture:
      return "atomic-mixture";
    case ModelKind::cantor:
      return "cantor";
    case ModelKind::product:
      return "product";
    case ModelKind::regression:
      return "regression";
  }
  return "unknown";
}

double DistributionModel::marginal_quantile(Index axis, double z) const
{
  const Box box = support();
  double lo = box.lower(axis), hi = box.upper(axis);
  if (z <= 0.0)
    return lo;
  if (z >= 1.0)
    return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (marginal_cdf(axis, mid) >= z)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double DistributionModel::density(const Vector&) const
{
  fail(ErrorKind::unsupported_combination, "model " + id() + " has no density");
}

double DistributionModel::conditional_cdf(double, const Vector&) const
{
  fail(ErrorKind::unsupported_combination, "model " + id() + " has no conditional structure");
}

Sample DistributionModel::sample(Index n, std::uint64_t seed, std::uint64_t stream) const
{
  if (n < 1)
    fail(ErrorKind::invalid_argument, "sample size must be at least 1");
  Rng rng(seed, stream);
  const Index k = dim();
  // row-major fill, then transpose into the column-major sample matrix
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(n, k);
  for (Index i = 0; i < n; ++i)
    draw(rng, rows.row(i).data());
  return { Matrix(rows), seed, id() };
}

MeanFunction MeanFunction::linear(double a, const Vector& b)
{
  std::string id = "linear(" + fmt(a);
  for (Index j = 0; j < b.size(); ++j)
    id += "," + fmt(b(j));
  return { id + ")", [a, b](const Vector& x) { return a + b.dot(x); } };
}

MeanFunction MeanFunction::constant(double c)
{
  return { "constant(" + fmt(c) + ")", [c](const Vector&) { return c; } };
}

MeanFunction MeanFunction::sine(double a, double b, double freq)
{
  return { "sine(" + fmt(a) + "," + fmt(b) + "," + fmt(freq) + ")",
           [a, b, freq](const Vector& x) { return a + b * std::sin(2.0 * M_PI * freq * x(0)); } };
}

UniformModel::UniformModel(Index k)
  : k_(k)
{
  if (k < 1)
    fail(ErrorKind::invalid_argument, "uniform model dimension must be positive");
}

std::string UniformModel::id() const
{
  return k_ == 1 ? "uniform" : "uniform" + std::to_string(k_);
}

double UniformModel::cdf(const Vector& x) const
{
  double v = 1.0;
  for (Index j = 0; j < k_; ++j)
    v *= clamp01(x(j));
  return v;
}

double UniformModel::marginal_cdf(Index, double t) const
{
  return clamp01(t);
}

double UniformModel::marginal_quantile(Index, double z) const
{
  return clamp01(z);
}

double UniformModel::density(const Vector& x) const
{
  return Box::unit(k_).contains(x) ? 1.0 : 0.0;
}

Measure UniformModel::measure() const
{
  MeasureComponent c;
  for (Index j = 0; j < k_; ++j)
    c.axes.push_back(DensityPart{ [](double) { return 1.0; }, 0.0, 1.0, {} });
  return { { c } };
}

void UniformModel::draw(Rng& rng, double* out) const
{
  for (Index j = 0; j < k_; ++j)
    out[j] = rng.uniform();
}

BetaModel::BetaModel(int a, int b)
  : a_(a)
  , b_(b)
{
  if (a < 1 || b < 1)
    fail(ErrorKind::invalid_argument, "beta model needs integer parameters >= 1");
  // 1 / B(a, b) = (a + b - 1) C(a + b - 2, a - 1)
  norm_ = (a + b - 1) * binomial(a + b - 2, a - 1);
}

std::string BetaModel::id() const
{
  return "beta(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
}

double BetaModel::marginal_cdf(Index, double t) const
{
  if (t <= 0.0)
    return 0.0;
  if (t >= 1.0)
    return 1.0;
  const int n = a_ + b_ - 1;
  double acc = 0.0;
  for (int j = a_; j <= n; ++j)
    acc += binomial(n, j) * std::pow(t, j) * std::pow(1.0 - t, n - j);
  return std::min(acc, 1.0);
}

double BetaModel::cdf(const Vector& x) const
{
  return marginal_cdf(0, x(0));
}

double BetaModel::pdf(double t) const
{
  if (t < 0.0 || t > 1.0)
    return 0.0;
  return norm_ * std::pow(t, a_ - 1) * std::pow(1.0 - t, b_ - 1);
}

double BetaModel::density(const Vector& x) const
{
  return pdf(x(0));
}

Measure BetaModel::measure() const
{
  const double norm = norm_;
  const int a = a_, b = b_;
  MeasureComponent c;
  c.axes.push_back(DensityPart{
    [norm, a, b](double t) { return norm * std::pow(t, a - 1) * std::pow(1.0 - t, b - 1); },
    0.0, 1.0, {} });
  return { { c } };
}

void BetaModel::draw(Rng& rng, double* out) const
{
  // a-th order statistic of a + b - 1 uniforms
  const int n = a_ + b_ - 1;
  double u[64];
  if (n > 64)
    fail(ErrorKind::unsupported_combination, "beta sampler supports a + b <= 65");
  for (int i = 0; i < n; ++i)
    u[i] = rng.uniform();
  std::nth_element(u, u + (a_ - 1), u + n);
  out[0] = u[a_ - 1];
}

NormalModel::NormalModel(double mean, double sd)
  : mean_(mean)
  , sd_(sd)
{
  if (!(sd > 0.0))
    fail(ErrorKind::invalid_argument, "normal model needs sd > 0");
}

std::string NormalModel::id() const
{
  return "normal(" + fmt(mean_) + "," + fmt(sd_) + ")";
}

double NormalModel::marginal_cdf(Index, double t) const
{
  return normal_cdf((t - mean_) / sd_);
}

double NormalModel::cdf(const Vector& x) const
{
  return marginal_cdf(0, x(0));
}

double NormalModel::density(const Vector& x) const
{
  return normal_pdf((x(0) - mean_) / sd_) / sd_;
}

Measure NormalModel::measure() const
{
  const double m = mean_, s = sd_;
  std::vector<double> breaks;
  for (int k = -11; k <= 11; ++k)
    breaks.push_back(m + k * s);
  MeasureComponent c;
  c.axes.push_back(DensityPart{ [m, s](double t) { return normal_pdf((t - m) / s) / s; },
                                m - 12.0 * s, m + 12.0 * s, breaks });
  return { { c } };
}

Box NormalModel::support() const
{
  return Box::interval(mean_ - 12.0 * sd_, mean_ + 12.0 * sd_);
}

void NormalModel::draw(Rng& rng, double* out) const
{
  out[0] = mean_ + sd_ * rng.normal();
}

AtomMixtureModel::AtomMixtureModel(std::vector<Vector> atoms, std::vector<double> weights,
                                   ModelPtr continuous, double mix)
  : atoms_(std::move(atoms))
  , weights_(std::move(weights))
  , continuous_(std::move(continuous))
  , mix_(mix)
{
  if (!continuous_)
    fail(ErrorKind::invalid_argument, "atom mixture needs a continuous part");
  if (!(mix >= 0.0 && mix <= 1.0))
    fail(ErrorKind::invalid_argument, "mixing weight must lie in [0, 1]");
  if (atoms_.size() != weights_.size() || (atoms_.empty() && mix > 0.0))
    fail(ErrorKind::invalid_argument, "atoms and weights must have equal nonzero length");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].size() != continuous_->dim())
      fail(ErrorKind::invalid_argument, "atom dimension does not match the continuous part");
    if (!(weights_[i] > 0.0))
      fail(ErrorKind::invalid_argument, "atom weights must be positive");
    total += weights_[i];
  }
  if (!atoms_.empty() && std::abs(total - 1.0) > 1e-12)
    fail(ErrorKind::invalid_argument, "atom weights sum to " + fmt(total) + ", not 1");
}

std::string AtomMixtureModel::id() const
{
  std::string s = "atoms[";
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    s += (i ? ";" : "");
    for (Index j = 0; j < atoms_[i].size(); ++j)
      s += (j ? "," : "") + fmt(atoms_[i](j));
    s += ":" + fmt(weights_[i]);
  }
  return s + "]" + fmt(mix_) + "+" + continuous_->id();
}

double AtomMixtureModel::cdf(const Vector& x) const
{
  double atom_part = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    if ((atoms_[i].array() <= x.array()).all())
      atom_part += weights_[i];
  return mix_ * atom_part + (1.0 - mix_) * continuous_->cdf(x);
}

double AtomMixtureModel::marginal_cdf(Index axis, double t) const
{
  double atom_part = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    if (atoms_[i](axis) <= t)
      atom_part += weights_[i];
  return mix_ * atom_part + (1.0 - mix_) * continuous_->marginal_cdf(axis, t);
}

bool AtomMixtureModel::has_density() const
{
  return mix_ == 0.0 && continuous_->has_density();
}

double AtomMixtureModel::density(const Vector& x) const
{
  if (!has_density())
    fail(ErrorKind::unsupported_combination, "atomic mixture has no density");
  return continuous_->density(x);
}

Measure AtomMixtureModel::measure() const
{
  Measure m;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    MeasureComponent c;
    c.weight = mix_ * weights_[i];
    for (Index j = 0; j < atoms_[i].size(); ++j)
      c.axes.push_back(AtomPart{ { atoms_[i](j) }, { 1.0 } });
    m.components.push_back(std::move(c));
  }
  for (auto c : continuous_->measure().components) {
    c.weight *= 1.0 - mix_;
    m.components.push_back(std::move(c));
  }
  return m;
}

bool AtomMixtureModel::continuous_marginals() const
{
  return mix_ == 0.0 && continuous_->continuous_marginals();
}

Box AtomMixtureModel::support() const
{
  Box b = continuous_->support();
  for (const auto& a : atoms_)
    b = bounding_box(b, Box{ a, a });
  return b;
}

void AtomMixtureModel::draw(Rng& rng, double* out) const
{
  if (rng.uniform() < mix_) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = atoms_.size() - 1;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      acc += weights_[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    for (Index j = 0; j < atoms_[pick].size(); ++j)
      out[j] = atoms_[pick](j);
  } else {
    continuous_->draw(rng, out);
  }
}

double AtomMixtureModel::jump(const Vector& x) const
{
  double v = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    if ((atoms_[i].array() == x.array()).all())
      v += weights_[i];
  return mix_ * v;
}

double cantor_cdf(double x)
{
  if (x <= 0.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  double f = 0.0, scale = 0.5;
  for (int i = 0; i < 52; ++i) {
    x *= 3.0;
    const int d = static_cast<int>(x);
    x -= d;
    if (d == 1)
      return f + scale;
    if (d == 2)
      f += scale;
    scale *= 0.5;
  }
  return f;
}

double CantorModel::cdf(const Vector& x) const
{
  return cantor_cdf(x(0));
}

double CantorModel::marginal_cdf(Index, double t) const
{
  return cantor_cdf(t);
}

double CantorModel::marginal_quantile(Index, double z) const
{
  if (z <= 0.0)
    return 0.0;
  if (z >= 1.0)
    return 1.0;
  // binary digits of z become ternary digits 0/2
  double x = 0.0, p = 1.0 / 3.0;
  for (int j = 0; j < 40; ++j) {
    z *= 2.0;
    if (z >= 1.0) {
      x += 2.0 * p;
      z -= 1.0;
    }
    p /= 3.0;
  }
  return x;
}

Measure CantorModel::measure() const
{
  return { { MeasureComponent{ 1.0, { CantorPart{} } } } };
}

void CantorModel::draw(Rng& rng, double* out) const
{
  std::uint64_t bits = rng.bits();
  double x = 0.0, p = 1.0 / 3.0;
  for (int j = 0; j < 40; ++j) {
    if (bits >> 63)
      x += 2.0 * p;
    bits <<= 1;
    p /= 3.0;
  }
  out[0] = x;
}

double CantorModel::dimension()
{
  return std::log(2.0) / std::log(3.0);
}

IndependentProductModel::IndependentProductModel(ModelPtr x_model, ModelPtr y_model)
  : x_(std::move(x_model))
  , y_(std::move(y_model))
{
  if (!x_ || !y_)
    fail(ErrorKind::invalid_argument, "independent product needs two models");
}

std::string IndependentProductModel::id() const
{
  return x_->id() + "*" + y_->id();
}

double IndependentProductModel::cdf(const Vector& x) const
{
  return x_->cdf(x.head(x_->dim())) * y_->cdf(x.tail(y_->dim()));
}

double IndependentProductModel::marginal_cdf(Index axis, double t) const
{
  return axis < x_->dim() ? x_->marginal_cdf(axis, t) : y_->marginal_cdf(axis - x_->dim(), t);
}

double IndependentProductModel::marginal_quantile(Index axis, double z) const
{
  return axis < x_->dim() ? x_->marginal_quantile(axis, z)
                          : y_->marginal_quantile(axis - x_->dim(), z);
}

bool IndependentProductModel::has_density() const
{
  return x_->has_density() && y_->has_density();
}

double IndependentProductModel::density(const Vector& x) const
{
  return x_->density(x.head(x_->dim())) * y_->density(x.tail(y_->dim()));
}

Measure IndependentProductModel::measure() const
{
  Measure m;
  const Measure mx = x_->measure(), my = y_->measure();
  for (const auto& cx : mx.components)
    for (const auto& cy : my.components) {
      MeasureComponent c{ cx.weight * cy.weight, cx.axes };
      c.axes.insert(c.axes.end(), cy.axes.begin(), cy.axes.end());
      m.components.push_back(std::move(c));
    }
  return m;
}

bool IndependentProductModel::continuous_marginals() const
{
  return x_->continuous_marginals() && y_->continuous_marginals();
}

Box IndependentProductModel::support() const
{
  const Box bx = x_->support(), by = y_->support();
  Box b{ Vector(dim()), Vector(dim()) };
  b.lower << bx.lower, by.lower;
  b.upper << bx.upper, by.upper;
  return b;
}

void IndependentProductModel::draw(Rng& rng, double* out) const
{
  x_->draw(rng, out);
  y_->draw(rng, out + x_->dim());
}

double IndependentProductModel::conditional_cdf(double y, const Vector&) const
{
  return y_->cdf(Vector::Constant(1, y));
}

RegressionModel::RegressionModel(ModelPtr x_model, MeanFunction mean, double noise_sd)
  : x_(std::move(x_model))
  , mean_(std::move(mean))
  , sigma_(noise_sd)
{
  if (!x_)
    fail(ErrorKind::invalid_argument, "regression model needs an x model");
  if (!(noise_sd >= 0.0))
    fail(ErrorKind::invalid_argument, "noise_sd must be non-negative");
  if (!x_->continuous_marginals())
    fail(ErrorKind::assumption_violation,
         "regression model needs continuous x marginals (conditioning on F_x)");
  if (x_->dim() > 2)
    fail(ErrorKind::unsupported_combination, "regression models support d_x <= 2");
  // range of m over the x support
  const Box bx = x_->support();
  const int grid = x_->dim() == 1 ? 2001 : 201;
  double lo = kInf, hi = -kInf;
  Vector x(x_->dim());
  if (x_->dim() == 1) {
    for (int i = 0; i < grid; ++i) {
      x(0) = bx.lower(0) + (bx.upper(0) - bx.lower(0)) * i / (grid - 1.0);
      lo = std::min(lo, mean_(x));
      hi = std::max(hi, mean_(x));
    }
  } else {
    for (int i = 0; i < grid; ++i)
      for (int k = 0; k < grid; ++k) {
        x(0) = bx.lower(0) + (bx.upper(0) - bx.lower(0)) * i / (grid - 1.0);
        x(1) = bx.lower(1) + (bx.upper(1) - bx.lower(1)) * k / (grid - 1.0);
        lo = std::min(lo, mean_(x));
        hi = std::max(hi, mean_(x));
      }
  }
  const double pad = std::max(12.0 * sigma_, 1e-9 + 1e-3 * (hi - lo));
  y_lo_ = lo - pad;
  y_hi_ = hi + pad;
}

std::string RegressionModel::id() const
{
  return "regression(" + x_->id() + "," + mean_.id + "," + fmt(sigma_) + ")";
}

double RegressionModel::cdf_degenerate(double x, double y) const
{
  // F_xy(x, y) = P(t <= x, m(t) <= y) over the set cut at the roots of m - y
  const Box bx = x_->support();
  const double a = bx.lower(0);
  const double b = std::min(x, bx.upper(0));
  if (!(b > a))
    return 0.0;
  auto g = [&](double t) { return mean_(Vector::Constant(1, t)) - y; };
  std::vector<double> cuts{ a };
  const int scan = 2000;
  double prev_t = a, prev_g = g(a);
  for (int i = 1; i <= scan; ++i) {
    const double t = a + (b - a) * i / scan;
    const double gt = g(t);
    if ((prev_g < 0.0) != (gt < 0.0)) {
      double lo = prev_t, hi = t, glo = prev_g;
      for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev_t = t;
    prev_g = gt;
  }
  cuts.push_back(b);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    if (g(mid) <= 0.0)
      acc += x_->marginal_cdf(0, cuts[i + 1]) - x_->marginal_cdf(0, cuts[i]);
  }
  return clamp01(acc);
}

double RegressionModel::cdf(const Vector& xy) const
{
  const Index dx = x_->dim();
  const double y = xy(dx);
  if (sigma_ == 0.0) {
    if (dx != 1)
      fail(ErrorKind::unsupported_combination, "degenerate noise needs d_x = 1");
    return cdf_degenerate(xy(0), y);
  }
  Box window{ Vector::Constant(dx, -kInf), xy.head(dx) };
  QuadratureSpec spec;
  spec.panel_order = 10;
  spec.panels_per_axis = 4;
  const PointSet nodes = stieltjes_nodes(x_->measure(), spec, window);
  double acc = 0.0;
  for (Index i = 0; i < nodes.size(); ++i) {
    const Vector t = nodes.points.row(i).transpose();
    acc += nodes.weights(i) * normal_cdf((y - mean_(t)) / sigma_);
  }
  return clamp01(acc);
}

double RegressionModel::marginal_cdf(Index axis, double t) const
{
  const Index dx = x_->dim();
  if (axis < dx)
    return x_->marginal_cdf(axis, t);
  Vector xy(dx + 1);
  xy.head(dx) = x_->support().upper;
  xy(dx) = t;
  return cdf(xy);
}

double RegressionModel::marginal_quantile(Index axis, double z) const
{
  if (axis < x_->dim())
    return x_->marginal_quantile(axis, z);
  return DistributionModel::marginal_quantile(axis, z);
}

bool RegressionModel::has_density() const
{
  return sigma_ > 0.0 && x_->has_density();
}

double RegressionModel::density(const Vector& xy) const
{
  if (!has_density())
    fail(ErrorKind::unsupported_combination, "regression model has no joint density");
  const Index dx = x_->dim();
  const Vector x = xy.head(dx);
  return x_->density(x) * normal_pdf((xy(dx) - mean_(x)) / sigma_) / sigma_;
}

Measure RegressionModel::measure() const
{
  fail(ErrorKind::unsupported_combination,
       "regression joint law is not a product measure; integrate over x_model instead");
}

Box RegressionModel::support() const
{
  const Box bx = x_->support();
  const Index dx = x_->dim();
  Box b{ Vector(dx + 1), Vector(dx + 1) };
  b.lower << bx.lower, y_lo_;
  b.upper << bx.upper, y_hi_;
  return b;
}

void RegressionModel::draw(Rng& rng, double* out) const
{
  const Index dx = x_->dim();
  x_->draw(rng, out);
  const Vector x = Eigen::Map<const Vector>(out, dx);
  out[dx] = mean_(x) + (sigma_ > 0.0 ? sigma_ * rng.normal() : 0.0);
}

double RegressionModel::conditional_cdf(double y, const Vector& x) const
{
  const double m = mean_(x);
  if (sigma_ == 0.0)
    return m <= y ? 1.0 : 0.0;
  return normal_cdf((y - m) / sigma_);
}

double RegressionModel::second_moment(const Vector& x) const
{
  const double m = mean_(x);
  return m * m + sigma_ * sigma_;
}

ModelPtr uniform_model(Index k)
{
  return std::make_shared<UniformModel>(k);
}

ModelPtr beta_model(int a, int b)
{
  return std::make_shared<BetaModel>(a, b);
}

ModelPtr normal_model(double mean, double sd)
{
  return std::make_shared<NormalModel>(mean, sd);
}

ModelPtr atom_mixture_model(std::vector<Vector> atoms, std::vector<double> weights,
                            ModelPtr continuous_part, double mix)
{
  return std::make_shared<AtomMixtureModel>(std::move(atoms), std::move(weights),
                                            std::move(continuous_part), mix);
}

ModelPtr cantor_model()
{
  return std::make_shared<CantorModel>();
}

ModelPtr independent_product_model(ModelPtr x_model, ModelPtr y_model)
{
  return std::make_shared<IndependentProductModel>(std::move(x_model), std::move(y_model));
}

std::shared_ptr<const RegressionModel> regression_model(ModelPtr x_model, MeanFunction mean,
                                                        double noise_sd)
{
  return std::make_shared<RegressionModel>(std::move(x_model), std::move(mean), noise_sd);
}

std::string sample_to_csv(const Sample& s)
{
  std::string out;
  for (Index j = 0; j < s.dim(); ++j)
    out += (j ? ",x" : "x") + std::to_string(j + 1);
  out += "\n";
  char buf[40];
  for (Index i = 0; i < s.n(); ++i) {
    for (Index j = 0; j < s.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", s.points(i, j));
      out += (j ? "," : "") + std::string(buf);
    }
    out += "\n";
  }
  return out;
}

Sample sample_from_csv(const std::string& text, std::string model_id)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorKind::invalid_argument, "empty sample CSV");
  const Index k = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::istringstream ls(line);
    std::string cell;
    Index cols = 0;
    while (std::getline(ls, cell, ',')) {
      values.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != k)
      fail(ErrorKind::invalid_argument, "sample CSV row " + std::to_string(rows + 1) +
                                          " has " + std::to_string(cols) + " columns");
    ++rows;
  }
  if (rows == 0)
    fail(ErrorKind::invalid_argument, "sample CSV has no rows");
  Sample s;
  s.points = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
    values.data(), rows, k);
  s.model_id = std::move(model_id);
  if (!s.points.allFinite())
    fail(ErrorKind::invalid_argument, "sample CSV contains non-finite values");
  return s;
}

} // namespace genfun
