#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace genfun {

//! Dense univariate polynomial, coefficients in increasing degree.
template <typename Scalar>
class BasicPolynomial
{
public:
  using Coefficients = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicPolynomial()
    : c_(Coefficients::Zero(1))
  {}

  explicit BasicPolynomial(Coefficients c)
    : c_(std::move(c))
  {
    if (c_.size() == 0)
      c_ = Coefficients::Zero(1);
  }

  static BasicPolynomial monomial(int degree, Scalar coeff = Scalar(1))
  {
    Coefficients c = Coefficients::Zero(degree + 1);
    c(degree) = coeff;
    return BasicPolynomial(c);
  }

  static BasicPolynomial constant(Scalar value)
  {
    return BasicPolynomial(Coefficients::Constant(1, value));
  }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const Coefficients& coefficients() const { return c_; }

  Scalar operator()(Scalar x) const
  {
    Scalar acc = c_(c_.size() - 1);
    for (Eigen::Index i = c_.size() - 2; i >= 0; --i)
      acc = acc * x + c_(i);
    return acc;
  }

  BasicPolynomial derivative() const
  {
    if (c_.size() == 1)
      return BasicPolynomial();
    Coefficients d(c_.size() - 1);
    for (Eigen::Index i = 1; i < c_.size(); ++i)
      d(i - 1) = c_(i) * Scalar(i);
    return BasicPolynomial(d);
  }

  //! Antiderivative vanishing at zero.
  BasicPolynomial antiderivative() const
  {
    Coefficients a = Coefficients::Zero(c_.size() + 1);
    for (Eigen::Index i = 0; i < c_.size(); ++i)
      a(i + 1) = c_(i) / Scalar(i + 1);
    return BasicPolynomial(a);
  }

  //! x -> p(a + b x)
  BasicPolynomial compose_affine(Scalar a, Scalar b) const
  {
    BasicPolynomial result;
    BasicPolynomial lin(Coefficients((Coefficients(2) << a, b).finished()));
    for (Eigen::Index i = c_.size() - 1; i >= 0; --i)
      result = result * lin + constant(c_(i));
    return result;
  }

  friend BasicPolynomial operator+(const BasicPolynomial& p, const BasicPolynomial& q)
  {
    Coefficients r = Coefficients::Zero(std::max(p.c_.size(), q.c_.size()));
    r.head(p.c_.size()) += p.c_;
    r.head(q.c_.size()) += q.c_;
    return BasicPolynomial(r);
  }

  friend BasicPolynomial operator-(const BasicPolynomial& p, const BasicPolynomial& q)
  {
    return p + Scalar(-1) * q;
  }

  friend BasicPolynomial operator*(Scalar s, const BasicPolynomial& p)
  {
    return BasicPolynomial(Coefficients(s * p.c_));
  }

  friend BasicPolynomial operator*(const BasicPolynomial& p, const BasicPolynomial& q)
  {
    Coefficients r = Coefficients::Zero(p.c_.size() + q.c_.size() - 1);
    for (Eigen::Index i = 0; i < p.c_.size(); ++i)
      r.segment(i, q.c_.size()) += p.c_(i) * q.c_;
    return BasicPolynomial(r);
  }

private:
  Coefficients c_;
};

using Polynomial = BasicPolynomial<double>;

//! p^k by repeated multiplication.
template <typename Scalar>
BasicPolynomial<Scalar> pow(const BasicPolynomial<Scalar>& p, int k)
{
  auto result = BasicPolynomial<Scalar>::constant(Scalar(1));
  for (int i = 0; i < k; ++i)
    result = result * p;
  return result;
}

} // namespace genfun
