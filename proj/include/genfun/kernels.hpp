#pragma once

#include "genfun/core.hpp"
#include "genfun/polynomial.hpp"

#include <string>
#include <utility>
#include <vector>

namespace genfun {

//! Product kernel on [-1,1]^k built from a univariate polynomial kernel, or
//! the indicator antiderivative variant (no density part).
class Kernel
{
public:
  //! Univariate kernel K(w) = poly(w) on [-1, 1] with declared order.
  Kernel(Polynomial base, int order, std::string name, Index dim = 1);

  static Kernel indicator(Index dim = 1);

  Index dim() const { return dim_; }
  int order() const { return order_; }
  bool is_indicator() const { return indicator_; }
  const std::string& name() const { return name_; }
  const Polynomial& base_polynomial() const { return base_; }
  //! Kbar on [-1, 1] as a polynomial (not defined for the indicator).
  const Polynomial& antiderivative_polynomial() const { return base_anti_; }
  //! K(-w) = K(w), so Kbar(-w) = 1 - Kbar(w).
  bool is_symmetric() const;

  double base(double w) const;
  //! Univariate antiderivative: 0 below -1, 1 above 1.
  double base_antiderivative(double w) const;

  double operator()(const Vector& w) const;
  double antiderivative(const Vector& w) const;

  Kernel with_dim(Index k) const;

private:
  Kernel() = default;

  Polynomial base_;
  Polynomial base_anti_;
  int order_ = 0;
  std::string name_;
  Index dim_ = 1;
  bool indicator_ = false;
};

//! 0.75 (1 - w^2) on [-1, 1].
Kernel epanechnikov();

//! Even polynomial kernel of order l from the basis w^{2j} (1 - w^2),
//! j < l/2, with moments 2..l-1 set to zero by a Hankel moment system.
Kernel higher_order_kernel(int l);

Kernel product_kernel(const Kernel& base, Index k);

//! Kbar(w) = 1[w >= 0] coordinatewise.
Kernel indicator_kernel(Index k = 1);

//! Kernel by name ("epanechnikov", "poly") and order.
Kernel make_kernel(const std::string& name, int order);

//! Mixed moment int K(w) w^m dw by quadrature.
double kernel_moment(const Kernel& K, const MultiIndex& m);

struct MomentReport
{
  bool passed = false;
  bool indicator_skipped = false;
  double integral = 0.0;
  double max_low_order = 0.0;
  MultiIndex offending;
  std::vector<std::pair<MultiIndex, double>> order_l_moments;
  std::string message;
};

//! Checks int K = 1 and that all mixed moments of total order 1..l-1 vanish
//! within tol; reports the order-l moments.
MomentReport verify_order(const Kernel& K, int l, double tol);

struct Bandwidth
{
  double c = 1.0;
  double alpha = 0.2;
  Vector components = Vector::Ones(1);

  Vector h(double n) const;
  double hbar(double n) const;
};

} // namespace genfun
