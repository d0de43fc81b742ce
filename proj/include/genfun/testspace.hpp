#pragma once

#include "genfun/core.hpp"
#include "genfun/polynomial.hpp"

#include <memory>
#include <string>
#include <vector>

namespace genfun {

//! Compactly supported univariate building block with exact derivatives.
class Factor1D
{
public:
  virtual ~Factor1D() = default;

  //! Derivative of the given order at x; exactly 0 outside [lower, upper].
  virtual double eval(int order, double x) const = 0;
  virtual int smoothness() const = 0;
  virtual double lower() const = 0;
  virtual double upper() const = 0;

  //! Points where the factor is not analytic (support ends, piece joins).
  virtual std::vector<double> breakpoints() const { return { lower(), upper() }; }
};

//! Piecewise polynomial on consecutive intervals, zero outside. Piece i is a
//! polynomial in the local variable t = (x - m_i) / scale, m_i the midpoint
//! of the piece, which keeps the coefficients well conditioned.
class PiecewisePolyFactor : public Factor1D
{
public:
  PiecewisePolyFactor(std::vector<double> breaks, std::vector<Polynomial> pieces,
                      int smoothness, double scale = 1.0);

  double eval(int order, double x) const override;
  int smoothness() const override { return smoothness_; }
  double lower() const override { return breaks_.front(); }
  double upper() const override { return breaks_.back(); }
  std::vector<double> breakpoints() const override { return breaks_; }

private:
  std::vector<double> breaks_;
  std::vector<std::vector<Polynomial>> derivs_; // [piece][order]
  int smoothness_;
  double scale_;
};

//! exp(-1/(1-u^2)) with u = (x - c)/r.
class MollifierFactor : public Factor1D
{
public:
  MollifierFactor(double center, double radius, int smoothness);

  double eval(int order, double x) const override;
  int smoothness() const override { return smoothness_; }
  double lower() const override { return c_ - r_; }
  double upper() const override { return c_ + r_; }

private:
  double c_;
  double r_;
  int smoothness_;
  std::vector<Polynomial> prefactors_; // P_n(u)
};

//! Member v of the normalized lattice partition b_v / sum_w b_w on R.
class PartitionFactor : public Factor1D
{
public:
  PartitionFactor(double spacing, long index, int smoothness);

  double eval(int order, double x) const override;
  int smoothness() const override { return smoothness_; }
  double lower() const override { return (index_ - 1) * spacing_; }
  double upper() const override { return (index_ + 1) * spacing_; }
  std::vector<double> breakpoints() const override;

private:
  double spacing_;
  long index_;
  int smoothness_;
  std::vector<Polynomial> prefactors_;
};

//! Sum of coefficient-weighted products of univariate factors, with a
//! per-factor derivative offset.
class TestFunction
{
public:
  struct Term
  {
    double coef = 1.0;
    std::vector<std::shared_ptr<const Factor1D>> factors;
    std::vector<int> offsets;
  };

  TestFunction(std::vector<Term> terms, int smoothness_order, std::string id);

  Index dim() const { return dim_; }
  const Box& support_box() const { return support_; }
  int smoothness_order() const { return smoothness_; }
  const std::string& id() const { return id_; }
  const std::vector<Term>& terms() const { return terms_; }

  double operator()(const Vector& x) const;
  double operator()(double x) const;

  double derivative(const MultiIndex& alpha, const Vector& x) const;
  double derivative(int order, double x) const;

  //! Exact derivative as a new test function; unsupported-order when
  //! |alpha| exceeds smoothness_order.
  TestFunction derivative(const MultiIndex& alpha) const;
  TestFunction derivative(int order) const;

  //! The mixed first partial in every coordinate.
  TestFunction mixed_derivative() const;

  //! Sorted breakpoints along each axis, including support ends.
  std::vector<std::vector<double>> breakpoints() const;

  TestFunction with_id(std::string id) const;

  friend TestFunction operator*(double a, const TestFunction& f);
  friend TestFunction operator+(const TestFunction& f, const TestFunction& g);

private:
  double eval_term(const Term& t, const MultiIndex* alpha, const double* x) const;

  std::vector<Term> terms_;
  Index dim_;
  int smoothness_;
  Box support_;
  std::string id_;
};

//! prod_j (1 - u_j^2)^p on the box |u_j| <= 1, u_j = (x_j - c_j)/r_j.
TestFunction make_poly_bump(const Vector& center, const Vector& radius, int p);
TestFunction make_poly_bump(double center, double radius, int p);

//! prod_j exp(-1/(1 - u_j^2)) inside the box, 0 outside.
TestFunction make_mollifier(const Vector& center, const Vector& radius,
                            int smoothness = 16);
TestFunction make_mollifier(double center, double radius, int smoothness = 16);

//! Univariate function equal to 1 on [lo, hi], rising and falling over
//! ramps of width `ramp` with C^(p-1) joins.
TestFunction make_plateau(double lo, double hi, double ramp, int p);

//! Product of univariate test functions on the product space.
TestFunction tensor_product(const std::vector<TestFunction>& parts);

using LatticeIndex = std::vector<long>;

//! Normalized translated mollifiers on the lattice spacing * Z^d. Members are
//! produced on demand, so tail sums may reach beyond the declared region.
class PartitionOfUnity
{
public:
  PartitionOfUnity(Box region, double spacing, int smoothness = 12);

  Index dim() const { return region_.dim(); }
  double spacing() const { return spacing_; }
  const Box& region() const { return region_; }

  TestFunction member(const LatticeIndex& v) const;

  //! Indices of members whose support contains y.
  std::vector<LatticeIndex> covering(const Vector& y) const;

  //! Members whose support meets the region.
  std::vector<LatticeIndex> members_in_region() const;

  //! Members at lattice Chebyshev distance exactly s from the index range of
  //! the members meeting `core`; shell 0 is that range itself.
  std::vector<LatticeIndex> shell(const Box& core, int s) const;

  //! Upper bound on the number of members covering any point.
  int max_overlap() const { return 1 << dim(); }

  double sum(const Vector& y) const;

private:
  std::pair<long, long> index_range(double lo, double hi) const;

  Box region_;
  double spacing_;
  int smoothness_;
};

PartitionOfUnity make_partition_of_unity(const Box& region, double spacing);

} // namespace genfun
