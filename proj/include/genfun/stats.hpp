#pragma once

#include "genfun/core.hpp"

#include <functional>

namespace genfun {

double normal_cdf(double z);
double normal_pdf(double z);

//! Two-sided Kolmogorov distribution tail P(K > t).
double kolmogorov_tail(double t);

struct KsResult
{
  double statistic = 0.0;
  double p_value = 1.0;
};

//! One-sample Kolmogorov-Smirnov test of `data` against a continuous cdf.
//! The p-value uses the asymptotic law with Stephens' small-sample scaling.
KsResult ks_test(Vector data, const std::function<double(double)>& cdf);

//! Critical value of the KS statistic at level `level` (0.01 or 0.05).
double ks_critical_value(Index n, double level);

double mean(const Vector& v);
double variance(const Vector& v);
double skewness(const Vector& v);
double excess_kurtosis(const Vector& v);

//! Sample covariance of the columns of `draws` (rows are observations).
Matrix sample_covariance(const Matrix& draws);

//! 0.975 quantile of Student's t with `df` degrees of freedom.
double t_quantile_975(int df);

struct LinearFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

//! Ordinary least squares of y on x with a 95% slope interval.
LinearFit ols_fit(const Vector& x, const Vector& y);

} // namespace genfun
