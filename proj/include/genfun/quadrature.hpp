#pragma once

#include "genfun/core.hpp"

#include <cstdint>
#include <functional>
#include <variant>

namespace genfun {

class DistributionModel;
struct Sample;

//! Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule
{
  Vector nodes;
  Vector weights;
};

//! Cached rule with m nodes (Newton iteration on the Legendre recurrence).
const GaussRule& gauss_legendre(int m);

struct QuadratureSpec
{
  int panel_order = 8;
  int panels_per_axis = 4;
  //! Panel doubling in integrate_box stops once successive rules agree to
  //! this relative level.
  double target_tol = 1e-10;
  int max_dim = 3;
  int cantor_depth = 20;
};

struct QuadResult
{
  double value = 0.0;
  double error = 0.0;
};

//! Weighted point set; rows of `points` are nodes.
struct PointSet
{
  Matrix points;
  Vector weights;

  Index size() const { return weights.size(); }
};

using Integrand = std::function<double(const Vector&)>;
using Integrand1D = std::function<double(double)>;

//! Composite Gauss-Legendre nodes on [a, b]: the interval is first split at
//! the breakpoints inside it, then `panels` panels are shared out by length.
void panel_nodes(double a, double b, const std::vector<double>& breaks, int panel_order,
                 int panels, std::vector<double>& x, std::vector<double>& w);

//! Tensor Gauss-Legendre rule on a box, with panels aligned to per-axis
//! breakpoints. The error estimate is the difference to the rule with twice
//! as many panels; the finer value is returned.
QuadResult integrate_box(const Integrand& g, const Box& box, const QuadratureSpec& spec = {},
                         const std::vector<std::vector<double>>& breakpoints = {});

QuadResult integrate_1d(const Integrand1D& g, double a, double b,
                        const QuadratureSpec& spec = {},
                        const std::vector<double>& breakpoints = {});

//! Absolutely continuous part of a univariate measure.
struct DensityPart
{
  std::function<double(double)> pdf;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> breaks;
};

struct AtomPart
{
  std::vector<double> points;
  std::vector<double> weights;
};

//! Cantor measure pushed forward by x -> offset + scale * x.
struct CantorPart
{
  double offset = 0.0;
  double scale = 1.0;
};

using AxisMeasure = std::variant<DensityPart, AtomPart, CantorPart>;

//! A product of univariate measures with a mixture weight.
struct MeasureComponent
{
  double weight = 1.0;
  std::vector<AxisMeasure> axes;
};

//! Finite mixture of product measures; every model exposes its law this way.
struct Measure
{
  std::vector<MeasureComponent> components;

  Index dim() const;
  Measure marginal(Index axis) const;
};

//! Quadrature nodes for integrating against `measure` restricted to `window`
//! (an unbounded box when empty). Density axes use panels aligned to
//! `breakpoints`; atoms are exact; Cantor axes use the self-similar
//! recursion to spec.cantor_depth.
PointSet stieltjes_nodes(const Measure& measure, const QuadratureSpec& spec = {},
                         const Box& window = {},
                         const std::vector<std::vector<double>>& breakpoints = {});

QuadResult integrate_measure(const Integrand& g, const Measure& measure,
                             const QuadratureSpec& spec = {}, const Box& window = {},
                             const std::vector<std::vector<double>>& breakpoints = {});

//! Integral of g against dF for the model's law.
QuadResult integrate_stieltjes(const Integrand& g, const DistributionModel& model,
                               const QuadratureSpec& spec = {},
                               const std::vector<std::vector<double>>& breakpoints = {});

//! Monte Carlo cross-check of integrate_stieltjes: value and standard error.
QuadResult integrate_stieltjes_mc(const Integrand& g, const DistributionModel& model,
                                  Index draws, std::uint64_t seed);

//! Integral against the empirical measure of the sample rows.
double integrate_empirical(const Integrand& g, const Sample& sample);

} // namespace genfun
