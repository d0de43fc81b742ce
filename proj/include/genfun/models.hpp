#pragma once

#include "genfun/core.hpp"
#include "genfun/quadrature.hpp"
#include "genfun/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace genfun {

enum class ModelKind
{
  absolutely_continuous,
  atomic_mixture,
  cantor,
  product,
  regression
};

const char* to_string(ModelKind kind);

//! n x k matrix of draws with provenance.
struct Sample
{
  Matrix points;
  std::uint64_t seed = 0;
  std::string model_id;

  Index n() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};

class DistributionModel
{
public:
  virtual ~DistributionModel() = default;

  virtual std::string id() const = 0;
  virtual Index dim() const = 0;
  virtual ModelKind kind() const = 0;

  virtual double cdf(const Vector& x) const = 0;
  virtual double marginal_cdf(Index axis, double t) const = 0;

  //! inf { t : F_axis(t) >= z } by bisection on the marginal cdf.
  virtual double marginal_quantile(Index axis, double z) const;

  virtual bool has_density() const { return false; }
  virtual double density(const Vector& x) const;

  //! Law as a mixture of product measures (for Stieltjes integration).
  virtual Measure measure() const = 0;

  virtual bool continuous_marginals() const = 0;

  //! Box containing the support (numerically, for unbounded laws).
  virtual Box support() const = 0;

  //! One draw into out[0..dim).
  virtual void draw(Rng& rng, double* out) const = 0;

  //! n draws from the stream (seed, stream).
  Sample sample(Index n, std::uint64_t seed, std::uint64_t stream = 0) const;

  //! Conditional structure of the last coordinate y given the first
  //! dim() - 1 coordinates x, when the model provides it.
  virtual bool has_conditional() const { return false; }
  virtual double conditional_cdf(double y, const Vector& x) const;
  virtual Index x_dim() const { return dim() - 1; }
};

using ModelPtr = std::shared_ptr<const DistributionModel>;

//! Smooth m(x) for regression models.
struct MeanFunction
{
  std::string id;
  std::function<double(const Vector&)> f;

  double operator()(const Vector& x) const { return f(x); }

  //! a + b'x
  static MeanFunction linear(double a, const Vector& b);
  static MeanFunction constant(double c);
  //! a + b sin(2 pi freq x_1)
  static MeanFunction sine(double a, double b, double freq);
};

class UniformModel : public DistributionModel
{
public:
  explicit UniformModel(Index k);

  std::string id() const override;
  Index dim() const override { return k_; }
  ModelKind kind() const override { return ModelKind::absolutely_continuous; }
  double cdf(const Vector& x) const override;
  double marginal_cdf(Index axis, double t) const override;
  double marginal_quantile(Index axis, double z) const override;
  bool has_density() const override { return true; }
  double density(const Vector& x) const override;
  Measure measure() const override;
  bool continuous_marginals() const override { return true; }
  Box support() const override { return Box::unit(k_); }
  void draw(Rng& rng, double* out) const override;

private:
  Index k_;
};

//! Beta(a, b) with integer parameters.
class BetaModel : public DistributionModel
{
public:
  BetaModel(int a, int b);

  std::string id() const override;
  Index dim() const override { return 1; }
  ModelKind kind() const override { return ModelKind::absolutely_continuous; }
  double cdf(const Vector& x) const override;
  double marginal_cdf(Index axis, double t) const override;
  bool has_density() const override { return true; }
  double density(const Vector& x) const override;
  double pdf(double t) const;
  Measure measure() const override;
  bool continuous_marginals() const override { return true; }
  Box support() const override { return Box::unit(1); }
  void draw(Rng& rng, double* out) const override;

private:
  int a_;
  int b_;
  double norm_;
};

class NormalModel : public DistributionModel
{
public:
  NormalModel(double mean, double sd);

  std::string id() const override;
  Index dim() const override { return 1; }
  ModelKind kind() const override { return ModelKind::absolutely_continuous; }
  double cdf(const Vector& x) const override;
  double marginal_cdf(Index axis, double t) const override;
  bool has_density() const override { return true; }
  double density(const Vector& x) const override;
  Measure measure() const override;
  bool continuous_marginals() const override { return true; }
  Box support() const override;
  void draw(Rng& rng, double* out) const override;

private:
  double mean_;
  double sd_;
};

class AtomMixtureModel : public DistributionModel
{
public:
  AtomMixtureModel(std::vector<Vector> atoms, std::vector<double> weights, ModelPtr continuous,
                   double mix);

  std::string id() const override;
  Index dim() const override { return continuous_->dim(); }
  ModelKind kind() const override { return ModelKind::atomic_mixture; }
  double cdf(const Vector& x) const override;
  double marginal_cdf(Index axis, double t) const override;
  bool has_density() const override;
  double density(const Vector& x) const override;
  Measure measure() const override;
  bool continuous_marginals() const override;
  Box support() const override;
  void draw(Rng& rng, double* out) const override;

  //! F(x) - F(x-) at a point (coordinatewise left limit).
  double jump(const Vector& x) const;

  const std::vector<Vector>& atoms() const { return atoms_; }
  double mix() const { return mix_; }

private:
  std::vector<Vector> atoms_;
  std::vector<double> weights_;
  ModelPtr continuous_;
  double mix_;
};

//! Cantor distribution on [0, 1].
class CantorModel : public DistributionModel
{
public:
  std::string id() const override { return "cantor"; }
  Index dim() const override { return 1; }
  ModelKind kind() const override { return ModelKind::cantor; }
  double cdf(const Vector& x) const override;
  double marginal_cdf(Index axis, double t) const override;
  double marginal_quantile(Index axis, double z) const override;
  Measure measure() const override;
  bool continuous_marginals() const override { return true; }
  Box support() const override { return Box::unit(1); }
  void draw(Rng& rng, double* out) const override;

  //! ln 2 / ln 3
  static double dimension();
};

double cantor_cdf(double x);

class IndependentProductModel : public DistributionModel
{
public:
  IndependentProductModel(ModelPtr x_model, ModelPtr y_model);

  std::string id() const override;
  Index dim() const override { return x_->dim() + y_->dim(); }
  ModelKind kind() const override { return ModelKind::product; }
  double cdf(const Vector& x) const override;
  double marginal_cdf(Index axis, double t) const override;
  double marginal_quantile(Index axis, double z) const override;
  bool has_density() const override;
  double density(const Vector& x) const override;
  Measure measure() const override;
  bool continuous_marginals() const override;
  Box support() const override;
  void draw(Rng& rng, double* out) const override;

  bool has_conditional() const override { return y_->dim() == 1; }
  double conditional_cdf(double y, const Vector& x) const override;
  Index x_dim() const override { return x_->dim(); }

  const DistributionModel& x_model() const { return *x_; }
  const DistributionModel& y_model() const { return *y_; }

private:
  ModelPtr x_;
  ModelPtr y_;
};

//! y = m(x) + sigma * eps, eps standard normal independent of x.
class RegressionModel : public DistributionModel
{
public:
  RegressionModel(ModelPtr x_model, MeanFunction mean, double noise_sd);

  std::string id() const override;
  Index dim() const override { return x_->dim() + 1; }
  ModelKind kind() const override { return ModelKind::regression; }

  //! F_{x,y}(x, y) = int 1[t <= x] Phi((y - m(t))/sigma) dF_x(t).
  double cdf(const Vector& xy) const override;
  double marginal_cdf(Index axis, double t) const override;
  double marginal_quantile(Index axis, double z) const override;
  bool has_density() const override;
  double density(const Vector& x) const override;
  //! The joint law is not a finite mixture of products; unsupported.
  Measure measure() const override;
  bool continuous_marginals() const override { return x_->continuous_marginals(); }
  Box support() const override;
  void draw(Rng& rng, double* out) const override;

  bool has_conditional() const override { return true; }
  double conditional_cdf(double y, const Vector& x) const override;
  Index x_dim() const override { return x_->dim(); }

  const DistributionModel& x_model() const { return *x_; }
  const MeanFunction& mean_function() const { return mean_; }
  double noise_sd() const { return sigma_; }
  //! E(y^2 | x) = m(x)^2 + sigma^2
  double second_moment(const Vector& x) const;

private:
  double cdf_degenerate(double x, double y) const;

  ModelPtr x_;
  MeanFunction mean_;
  double sigma_;
  double y_lo_;
  double y_hi_;
};

ModelPtr uniform_model(Index k = 1);
ModelPtr beta_model(int a, int b);
ModelPtr normal_model(double mean, double sd);
ModelPtr atom_mixture_model(std::vector<Vector> atoms, std::vector<double> weights,
                            ModelPtr continuous_part, double mix);
ModelPtr cantor_model();
ModelPtr independent_product_model(ModelPtr x_model, ModelPtr y_model);
std::shared_ptr<const RegressionModel> regression_model(ModelPtr x_model, MeanFunction mean,
                                                        double noise_sd);

//! Sample rows as CSV with a header x1..xk.
std::string sample_to_csv(const Sample& s);
Sample sample_from_csv(const std::string& text, std::string model_id = "csv");

} // namespace genfun
