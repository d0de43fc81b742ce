#include "genfun/kernels.hpp"

#include "genfun/quadrature.hpp"

#include <cmath>

namespace genfun {

Kernel::Kernel(Polynomial base, int order, std::string name, Index dim)
  : base_(std::move(base))
  , order_(order)
  , name_(std::move(name))
  , dim_(dim)
{
  if (dim < 1)
    fail(ErrorKind::invalid_argument, "kernel dimension must be positive");
  const Polynomial anti = base_.antiderivative();
  base_anti_ = anti - Polynomial::constant(anti(-1.0));
  if (std::abs(base_anti_(1.0) - 1.0) > 1e-12)
    fail(ErrorKind::invalid_argument, "kernel " + name_ + " does not integrate to 1");
}

Kernel Kernel::indicator(Index dim)
{
  Kernel k;
  k.indicator_ = true;
  k.dim_ = dim;
  k.name_ = "indicator";
  return k;
}

double Kernel::base(double w) const
{
  if (indicator_)
    fail(ErrorKind::invalid_argument, "indicator kernel has no density part");
  if (w < -1.0 || w > 1.0)
    return 0.0;
  return base_(w);
}

double Kernel::base_antiderivative(double w) const
{
  if (indicator_)
    return w >= 0.0 ? 1.0 : 0.0;
  if (w <= -1.0)
    return 0.0;
  if (w >= 1.0)
    return 1.0;
  return base_anti_(w);
}

double Kernel::operator()(const Vector& w) const
{
  if (w.size() != dim_)
    fail(ErrorKind::invalid_argument, "kernel argument dimension mismatch");
  double v = 1.0;
  for (Index j = 0; j < dim_ && v != 0.0; ++j)
    v *= base(w(j));
  return v;
}

double Kernel::antiderivative(const Vector& w) const
{
  if (w.size() != dim_)
    fail(ErrorKind::invalid_argument, "kernel argument dimension mismatch");
  double v = 1.0;
  for (Index j = 0; j < dim_ && v != 0.0; ++j)
    v *= base_antiderivative(w(j));
  return v;
}

bool Kernel::is_symmetric() const
{
  if (indicator_)
    return false;
  const auto& c = base_.coefficients();
  for (Index j = 1; j < c.size(); j += 2)
    if (c(j) != 0.0)
      return false;
  return true;
}

Kernel Kernel::with_dim(Index k) const
{
  if (k < 1)
    fail(ErrorKind::invalid_argument, "kernel dimension must be positive");
  Kernel out = *this;
  out.dim_ = k;
  return out;
}

Kernel epanechnikov()
{
  Polynomial::Coefficients c(3);
  c << 0.75, 0.0, -0.75;
  return Kernel(Polynomial(c), 2, "epanechnikov");
}

Kernel higher_order_kernel(int l)
{
  if (l < 2 || l % 2 != 0)
    fail(ErrorKind::invalid_argument, "kernel order must be even and at least 2");
  const int m = l / 2;
  // int_{-1}^{1} w^{2q} (1 - w^2) dw
  auto moment = [](int q) { return 2.0 / (2 * q + 1) - 2.0 / (2 * q + 3); };
  Matrix A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      A(i, j) = moment(i + j);
  Vector rhs = Vector::Zero(m);
  rhs(0) = 1.0;
  const Vector a = A.fullPivLu().solve(rhs);
  if (!(A * a).isApprox(rhs, 1e-10))
    fail(ErrorKind::numeric_failure, "singular kernel moment system");
  Polynomial k;
  const Polynomial bump = Polynomial::constant(1.0) - Polynomial::monomial(2);
  for (int j = 0; j < m; ++j)
    k = k + a(j) * (Polynomial::monomial(2 * j) * bump);
  return Kernel(k, l, "poly" + std::to_string(l));
}

Kernel product_kernel(const Kernel& base, Index k)
{
  return base.with_dim(k);
}

Kernel indicator_kernel(Index k)
{
  return Kernel::indicator(k);
}

Kernel make_kernel(const std::string& name, int order)
{
  if (name == "epanechnikov") {
    if (order != 2)
      fail(ErrorKind::invalid_argument, "epanechnikov kernel has order 2");
    return epanechnikov();
  }
  if (name == "poly")
    return higher_order_kernel(order);
  if (name == "indicator")
    return indicator_kernel();
  fail(ErrorKind::invalid_argument, "unknown kernel '" + name + "'");
}

double kernel_moment(const Kernel& K, const MultiIndex& m)
{
  if (K.is_indicator())
    fail(ErrorKind::invalid_argument, "indicator kernel has no moments");
  if (static_cast<Index>(m.size()) != K.dim())
    fail(ErrorKind::invalid_argument, "moment multi-index dimension mismatch");
  // the product kernel factorizes, so each axis is a univariate integral
  QuadratureSpec spec;
  spec.panel_order = 16;
  spec.panels_per_axis = 2;
  double v = 1.0;
  for (int e : m)
    v *= integrate_1d([&](double w) { return K.base(w) * std::pow(w, e); }, -1.0, 1.0, spec)
           .value;
  return v;
}

MomentReport verify_order(const Kernel& K, int l, double tol)
{
  MomentReport r;
  if (K.is_indicator()) {
    r.passed = true;
    r.indicator_skipped = true;
    r.message = "indicator: no density part, order check skipped";
    return r;
  }
  const int k = static_cast<int>(K.dim());
  r.integral = kernel_moment(K, MultiIndex(static_cast<std::size_t>(k), 0));
  if (std::abs(r.integral - 1.0) > tol) {
    r.offending = MultiIndex(static_cast<std::size_t>(k), 0);
    r.message = "order violation: integral of K is " + std::to_string(r.integral);
    return r;
  }
  for (int order = 1; order < l; ++order)
    for (const auto& m : multi_indices(k, order)) {
      const double v = kernel_moment(K, m);
      r.max_low_order = std::max(r.max_low_order, std::abs(v));
      if (std::abs(v) > tol && r.offending.empty()) {
        r.offending = m;
        std::string idx;
        for (int e : m)
          idx += (idx.empty() ? "" : ",") + std::to_string(e);
        r.message = "order violation at multi-index (" + idx + "): moment " +
                    std::to_string(v);
      }
    }
  for (const auto& m : multi_indices(k, l))
    r.order_l_moments.emplace_back(m, kernel_moment(K, m));
  r.passed = r.offending.empty();
  if (r.passed)
    r.message = "ok";
  return r;
}

Vector Bandwidth::h(double n) const
{
  if (!(c > 0.0) || !(n >= 1.0))
    fail(ErrorKind::invalid_argument, "bandwidth needs c > 0 and n >= 1");
  return c * std::pow(n, -alpha) * components;
}

double Bandwidth::hbar(double n) const
{
  return h(n).maxCoeff();
}

} // namespace genfun
