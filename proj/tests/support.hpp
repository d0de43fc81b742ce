#pragma once

#include "genfun/core.hpp"

#include <cmath>
#include <functional>

namespace genfun::test {

//! Sixth-order central difference of f at x with step s.
inline double central_diff6(const std::function<double(double)>& f, double x, double s)
{
  return (f(x + 3 * s) - 9 * f(x + 2 * s) + 45 * f(x + s) - 45 * f(x - s) +
          9 * f(x - 2 * s) - f(x - 3 * s)) /
         (60.0 * s);
}

//! Plain composite Simpson rule with m (even) intervals; an oracle that
//! shares no code with the library's Gauss-Legendre panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int m)
{
  const double step = (b - a) / m;
  double acc = f(a) + f(b);
  for (int i = 1; i < m; ++i)
    acc += (i % 2 ? 4.0 : 2.0) * f(a + i * step);
  return acc * step / 3.0;
}

inline Vector vec(std::initializer_list<double> v)
{
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v)
    out(i++) = x;
  return out;
}

} // namespace genfun::test
