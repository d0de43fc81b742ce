#include "genfun/stats.hpp"

#include <algorithm>
#include <cmath>

namespace genfun {

double normal_cdf(double z)
{
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double normal_pdf(double z)
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double kolmogorov_tail(double t)
{
  if (t <= 0.0)
    return 1.0;
  if (t < 1.0) {
    // small-t form converges faster
    const double a = M_PI * M_PI / (8.0 * t * t);
    double s = 0.0;
    for (int j = 1; j <= 40; j += 2)
      s += std::exp(-a * j * j);
    return 1.0 - std::sqrt(2.0 * M_PI) / t * s;
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    s += (j % 2 == 1 ? term : -term);
    if (term < 1e-18)
      break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_test(Vector data, const std::function<double(double)>& cdf)
{
  const Index n = data.size();
  if (n == 0)
    fail(ErrorKind::invalid_argument, "ks_test on empty data");
  std::sort(data.data(), data.data() + n);
  double d = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double f = cdf(data(i));
    d = std::max(d, std::max(f - double(i) / n, double(i + 1) / n - f));
  }
  const double sn = std::sqrt(double(n));
  return { d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d) };
}

double ks_critical_value(Index n, double level)
{
  double c;
  if (level == 0.01)
    c = 1.628;
  else if (level == 0.05)
    c = 1.358;
  else
    fail(ErrorKind::invalid_argument, "ks_critical_value supports levels 0.01 and 0.05");
  const double sn = std::sqrt(double(n));
  return c / (sn + 0.12 + 0.11 / sn);
}

double mean(const Vector& v)
{
  return v.mean();
}

double variance(const Vector& v)
{
  if (v.size() < 2)
    return 0.0;
  return (v.array() - v.mean()).square().sum() / double(v.size() - 1);
}

double skewness(const Vector& v)
{
  const Eigen::ArrayXd c = v.array() - v.mean();
  const double m2 = c.square().mean();
  return m2 > 0.0 ? c.cube().mean() / std::pow(m2, 1.5) : 0.0;
}

double excess_kurtosis(const Vector& v)
{
  const Eigen::ArrayXd c = v.array() - v.mean();
  const double m2 = c.square().mean();
  return m2 > 0.0 ? c.square().square().mean() / (m2 * m2) - 3.0 : 0.0;
}

Matrix sample_covariance(const Matrix& draws)
{
  const Index n = draws.rows();
  if (n < 2)
    return Matrix::Zero(draws.cols(), draws.cols());
  const Matrix centered = draws.rowwise() - draws.colwise().mean();
  return centered.transpose() * centered / double(n - 1);
}

double t_quantile_975(int df)
{
  static const double table[] = { 12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                  2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                  2.131,  2.120, 2.110, 2.101, 2.093, 2.086, 2.080,
                                  2.074,  2.069, 2.064, 2.060, 2.056, 2.052, 2.048,
                                  2.045,  2.042 };
  if (df < 1)
    fail(ErrorKind::invalid_argument, "t quantile needs df >= 1");
  if (df <= 30)
    return table[df - 1];
  return 1.959964 + 2.4 / df;
}

LinearFit ols_fit(const Vector& x, const Vector& y)
{
  const Index n = x.size();
  if (n < 2 || y.size() != n)
    fail(ErrorKind::invalid_argument, "ols_fit needs at least two paired points");
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    const double rss =
      (y.array() - fit.intercept - fit.slope * x.array()).square().sum();
    fit.slope_se = std::sqrt(rss / double(n - 2) / sxx);
    const double t = t_quantile_975(static_cast<int>(n - 2));
    fit.ci_lower = fit.slope - t * fit.slope_se;
    fit.ci_upper = fit.slope + t * fit.slope_se;
  } else {
    fit.ci_lower = fit.ci_upper = fit.slope;
  }
  return fit;
}

} // namespace genfun
