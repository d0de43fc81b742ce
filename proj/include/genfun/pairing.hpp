#pragma once

#include "genfun/core.hpp"
#include "genfun/kernels.hpp"
#include "genfun/models.hpp"
#include "genfun/quadrature.hpp"
#include "genfun/testspace.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace genfun {

enum class Method
{
  exact_oracle,
  estimator,
  limit_sim
};

const char* to_string(Method m);

//! Value of a functional at a test function, with provenance.
struct FunctionalReport
{
  double value = 0.0;
  double error_estimate = 0.0;
  std::string psi_id;
  std::string model_id;
  Index n = 0;
  double h = 0.0;
  std::uint64_t seed = 0;
  Method method = Method::exact_oracle;
  //! Operation-specific named quantities (bias level, truncation shell, ...).
  std::vector<std::pair<std::string, double>> extras;

  bool has_extra(const std::string& key) const;
  double extra(const std::string& key) const;

  static std::string csv_header();
  std::string csv_row() const;
  std::string to_json() const;
};

using CdfFunction = std::function<double(const Vector&)>;

//! Breakpoints of the model cdf per axis (atom coordinates), merged with the
//! breakpoints of psi.
std::vector<std::vector<double>> pairing_breakpoints(const DistributionModel& model,
                                                     const TestFunction& psi);

//! (f, psi) = (-1)^k (F, d^k psi), d^k the mixed first partial, by
//! quadrature over the support of psi.
FunctionalReport pair_generalized_derivative(const CdfFunction& F, const TestFunction& psi,
                                             Index k, const QuadratureSpec& spec = {},
                                             const std::vector<std::vector<double>>& breaks = {});
FunctionalReport pair_generalized_derivative(const DistributionModel& model,
                                             const TestFunction& psi,
                                             const QuadratureSpec& spec = {});

//! E psi(X) by Stieltjes integration; equals (f, psi) for every model.
FunctionalReport pair_expectation(const DistributionModel& model, const TestFunction& psi,
                                  const QuadratureSpec& spec = {});

//! Nodes per piece for estimator integrals: exact for polynomial pieces of
//! the kernel times psi up to degree 2 * panel_order - 1.
QuadratureSpec estimator_spec();

//! (K_h * psi)(x) = int K(w) psi(x - h w) dw, factored over the product
//! terms of psi.
double kernel_smooth(const TestFunction& psi, const Kernel& K, const Vector& h, const Vector& x,
                     const QuadratureSpec& spec = estimator_spec());

//! (K_h * psi)(x_i) at every sample point.
Vector kernel_smooth_sample(const Sample& sample, const Kernel& K, const Vector& h,
                            const TestFunction& psi,
                            const QuadratureSpec& spec = estimator_spec());

//! (fhat, psi) = (1/n) sum_i int K(w) psi(x_i - h w) dw. The error estimate
//! is the sampling standard error of the per-point terms.
FunctionalReport pair_density_estimator(const Sample& sample, const Kernel& K, const Vector& h,
                                        const TestFunction& psi,
                                        const QuadratureSpec& spec = estimator_spec());

//! int Fhat(x) psi(x) dx with Fhat(x) = (1/n) sum_i Kbar((x - x_i)/h); the
//! indicator kernel gives the empirical cdf.
FunctionalReport pair_distribution_estimator(const Sample& sample, const Kernel& Kbar,
                                             const Vector& h, const TestFunction& psi,
                                             const QuadratureSpec& spec = estimator_spec());

//! Pointwise kernel density estimate (1/(n prod h)) sum_i K((x - x_i)/h).
double kde_pointwise(const Sample& sample, const Kernel& K, const Vector& h, const Vector& x);

//! Leading bias term (B(h, K), psi) for an order-l kernel:
//! (-1)^(l+k) sum_{|m|=l} prod (h_i/hbar)^m_i / m_i! * mu_m * (F, d^(1+m) psi).
//! Extras: "bias" = hbar^l * value, "hbar".
FunctionalReport bias_functional(const DistributionModel& model, const Kernel& K, const Vector& h,
                                 const TestFunction& psi, const QuadratureSpec& spec = {});

//! cov(psi1(X), psi2(X)) under the model.
FunctionalReport covariance_functional(const DistributionModel& model, const TestFunction& psi1,
                                       const TestFunction& psi2, const QuadratureSpec& spec = {});

//! Gram matrix of covariance_functional over a set of test functions.
Matrix covariance_gram(const DistributionModel& model, const std::vector<TestFunction>& psis,
                       const QuadratureSpec& spec = {});

//! Pair of densities on [0, 1] with disjoint alternating supports: far apart
//! in L1, close in the uniform metric of their cdfs.
struct IllposedPair
{
  double eps_bar = 0.0;
  double eps = 0.0; //!< used half-width, 1/eps an even integer
  long intervals = 0; //!< number of intervals of length eps per density
  double l1_distance = 0.0;
  double sup_distance = 0.0;

  double f1(double x) const;
  double f2(double x) const;
  double F1(double x) const;
  double F2(double x) const;
  std::vector<double> breakpoints() const;
};

IllposedPair illposed_pair(double eps_bar);

struct IllposedGap
{
  double gap = 0.0;   //!< |(f1 - f2, psi)|
  double bound = 0.0; //!< sup|F1 - F2| * int |psi'|
};

IllposedGap illposed_gap(const IllposedPair& pair, const TestFunction& psi);

//! x-part of a model with conditional structure (product or regression).
const DistributionModel& conditioning_model(const DistributionModel& model);

//! (F_{y|x}, psi) = (-1)^dx int F_xy(x, y) d^dx psi(F_x(x)) dF_x(x), psi on
//! (0, 1)^dx in copula coordinates.
FunctionalReport conddist_pair_oracle(const DistributionModel& model, const TestFunction& psi,
                                      double y, const QuadratureSpec& spec = {});

//! (F_{y|x} x f_y-pairing): (-1)^(dx+1) int int F_xy d^dx psi_x(F_x) psi_y'(y) dF_x dy.
FunctionalReport conddens_pair_oracle(const DistributionModel& model, const TestFunction& psi_x,
                                      const TestFunction& psi_y, const QuadratureSpec& spec = {});

//! psi~(x) = f_x(x) psi(F_x(x)) on the preimage of the support of psi.
struct LemmaTransform
{
  std::function<double(double)> forward;
  Box x_window;
  std::vector<double> breakpoints;
};

//! Forward map for a univariate x-model with a density bounded below on the
//! preimage of supp psi; not-in-phi-c otherwise. The returned function keeps
//! references to psi and the model, which must outlive it.
LemmaTransform lemma_transform(const TestFunction& psi, const DistributionModel& x_model,
                               double density_floor = 1e-12);

//! Inverse map a -> psi~(F^{-1}(a)) / f(F^{-1}(a)).
std::function<double(double)> lemma_inverse(std::function<double(double)> psi_tilde,
                                            const DistributionModel& x_model);

//! (F_{y|x}, psi) through the density representation int F_{y|x}(y|x) psi~(x) dx,
//! with the model's closed-form conditional cdf.
FunctionalReport conddist_pair_lemma(const DistributionModel& model, const TestFunction& psi,
                                     double y, const QuadratureSpec& spec = {});

//! Smooth g(y) with its derivative, for conditional moments E(g(y) | x).
struct MomentFunction
{
  std::string id;
  std::function<double(double)> g;
  std::function<double(double)> dg;

  static MomentFunction constant(double c);
  static MomentFunction identity();
  static MomentFunction power(int k);
};

//! Partition-member contributions in summation order with the truncation
//! outcome.
struct PartitionSum
{
  std::vector<std::pair<LatticeIndex, double>> terms;
  double value = 0.0;
  int shells = 0;        //!< shells visited, the last two below tolerance
  double tail = 0.0;     //!< |last shell| + |second to last shell|
};

//! Sum over members v of (-1)^(dx+1) int int F_xy d^dx psi(F_x) (g psi_v)' dF_x dy,
//! shell by shell outward from the partition region until two consecutive
//! shells contribute less than tail_tol each; divergence-suspected when the
//! shell budget runs out.
PartitionSum condmoment_terms(const DistributionModel& model, const MomentFunction& g,
                              const TestFunction& psi, const PartitionOfUnity& pu,
                              double tail_tol = 1e-8, int max_shells = 200,
                              const QuadratureSpec& spec = {});

FunctionalReport condmoment_pair_oracle(const DistributionModel& model, const MomentFunction& g,
                                        const TestFunction& psi, const PartitionOfUnity& pu,
                                        double tail_tol = 1e-8, int max_shells = 200,
                                        const QuadratureSpec& spec = {});

//! Smoothing choices for the conditional estimators. Indicator kernels give
//! the empirical cdfs (the default path).
struct ConditionalSmoothing
{
  Kernel x_kernel = indicator_kernel();
  Kernel y_kernel = indicator_kernel();
  double h = 0.0;
  double h_y = 0.0;
};

//! Per-observation weights A_j with Fhat_{y|x} pairing
//! V(y) = -(1/n) sum_j Gbar((y - y_j)/h_y) A_j.
Vector conditional_weights(const Sample& sample, const TestFunction& psi,
                           const ConditionalSmoothing& sm = {});

//! (Fhat_{y|x}, psi) with the cdf estimates plugged into the oracle formula.
FunctionalReport conddist_estimator_pair(const Sample& sample, const TestFunction& psi, double y,
                                         const ConditionalSmoothing& sm = {});

//! (mhat, psi): the conditional-mean plug-in summed over partition members
//! ordered outward from the sample's y-range.
FunctionalReport condmean_estimator_pair(const Sample& sample, const TestFunction& psi,
                                         const PartitionOfUnity& pu, double tail_tol = 1e-8,
                                         const ConditionalSmoothing& sm = {});

//! Shell-ordered sum of per-member terms with the two-quiet-shells rule.
PartitionSum sum_over_shells(const PartitionOfUnity& pu, const Box& core,
                             const std::function<double(const LatticeIndex&)>& term,
                             double tail_tol, int max_shells);

} // namespace genfun
