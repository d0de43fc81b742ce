#include "doctest.h"

#include "genfun/rng.hpp"
#include "genfun/testspace.hpp"
#include "support.hpp"

#include <cmath>

using namespace genfun;
using genfun::test::central_diff6;
using genfun::test::vec;

namespace {

//! Relative check with an absolute floor.
void check_close(double got, double want, double rel, double floor)
{
  CHECK(std::abs(got - want) <= rel * std::abs(want) + floor);
}

//! Exact derivative against a sixth-order central difference, relative to
//! the derivative's magnitude over the sampled points.
void check_fd(const TestFunction& psi, int max_order, double lo, double hi, double step)
{
  for (int order = 0; order < max_order; ++order) {
    const auto g = [&](double x) { return psi.derivative(order, x); };
    double scale = 0.0;
    for (int i = 0; i <= 400; ++i)
      scale = std::max(scale, std::abs(psi.derivative(order + 1, lo + (hi - lo) * i / 400.0)));
    for (int i = 1; i < 10; ++i) {
      const double x = lo + (hi - lo) * i / 10.0;
      check_close(psi.derivative(order + 1, x), central_diff6(g, x, step), 0.0,
                  1e-6 * scale + 1e-10);
    }
  }
}

} // namespace

TEST_CASE("poly bump values and symmetry")
{
  const auto psi = make_poly_bump(0.0, 1.0, 2);
  CHECK(psi(0.0) == 1.0);
  CHECK(psi.derivative(1, 0.0) == doctest::Approx(0.0));
  CHECK(psi(1.5) == 0.0);
  CHECK(psi.smoothness_order() == 1);
  CHECK_THROWS_AS(make_poly_bump(0.0, -1.0, 2), Error);
  CHECK_THROWS_AS(make_poly_bump(0.0, 1.0, 1), Error);
}

TEST_CASE("poly bump derivative against finite differences")
{
  const auto psi = make_poly_bump(0.0, 1.0, 3);
  CHECK(psi.derivative(1, 0.0) == doctest::Approx(0.0));
  const auto f = [&](double x) { return psi(x); };
  CHECK(std::abs(psi.derivative(1, 0.5) - central_diff6(f, 0.5, 1e-3)) < 1e-8);
  for (double x : { -0.7, 0.1, 0.33 })
    CHECK(psi.derivative(MultiIndex{ 0 }, vec({ x })) == psi(x));
  check_fd(make_poly_bump(0.4, 0.3, 6), 5, 0.1, 0.7, 1e-3);
}

TEST_CASE("mollifier values, flatness and derivatives")
{
  const auto psi = make_mollifier(0.0, 1.0);
  CHECK(psi(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(psi(1.0) == 0.0);
  CHECK(psi(-1.0) == 0.0);
  for (int k = 1; k <= 6; ++k) {
    CHECK(psi.derivative(k, 1.0) == 0.0);
    CHECK(std::abs(psi.derivative(k, 0.999)) < 1e-100);
  }
  CHECK(psi.derivative(1, 0.0) == doctest::Approx(0.0));
  check_fd(make_mollifier(0.5, 0.4), 6, 0.15, 0.85, 1e-3);
}

TEST_CASE("plateau equals one on its core and is smooth")
{
  const auto psi = make_plateau(0.3, 0.6, 0.1, 5);
  CHECK(psi(0.45) == doctest::Approx(1.0));
  CHECK(psi(0.3) == doctest::Approx(1.0));
  CHECK(psi(0.15) == 0.0);
  CHECK(psi(0.75) == 0.0);
  check_fd(psi, 3, 0.2, 0.7, 1e-4);
}

TEST_CASE("derivative contracts")
{
  const auto psi = make_poly_bump(0.5, 0.25, 4);
  CHECK_THROWS_WITH_AS(psi.derivative(4, 0.5), doctest::Contains("unsupported-order"), Error);
  const auto d1 = psi.derivative(1);
  CHECK(d1.smoothness_order() == 2);
  CHECK(d1.support_box().lower(0) == psi.support_box().lower(0));
  const auto d12 = d1.derivative(2);
  const auto d3 = psi.derivative(3);
  for (double x : { 0.3, 0.41, 0.5, 0.66 })
    CHECK(std::abs(d12(x) - d3(x)) <= 1e-10);
}

TEST_CASE("support containment of values and derivatives")
{
  for (const auto& psi : { make_poly_bump(0.5, 0.2, 4), make_mollifier(0.5, 0.2),
                           make_plateau(0.4, 0.5, 0.1, 4) }) {
    const Box& b = psi.support_box();
    for (double x : { b.lower(0), b.upper(0), b.lower(0) - 0.1, b.upper(0) + 1e-9, 5.0 })
      for (int k = 0; k <= 3; ++k)
        CHECK(psi.derivative(k, x) == 0.0);
  }
}

TEST_CASE("tensor products")
{
  const auto a = make_poly_bump(0.3, 0.2, 4);
  const auto b = make_poly_bump(0.6, 0.3, 3);
  const auto ab = tensor_product({ a, b });
  CHECK(ab.dim() == 2);
  CHECK(ab(vec({ 0.3, 0.6 })) == doctest::Approx(1.0));
  CHECK(ab(vec({ 0.0, 0.6 })) == 0.0);
  CHECK(ab.smoothness_order() == 2);
  const double x = 0.37, y = 0.52;
  CHECK(std::abs(ab.derivative(MultiIndex{ 1, 1 }, vec({ x, y })) -
                 a.derivative(1, x) * b.derivative(1, y)) <= 1e-12);
  CHECK(std::abs(ab.mixed_derivative()(vec({ x, y })) -
                 a.derivative(1, x) * b.derivative(1, y)) <= 1e-12);
  CHECK_THROWS_AS(tensor_product({}), Error);
}

TEST_CASE("linear combinations")
{
  const auto a = make_poly_bump(0.3, 0.2, 4);
  const auto b = make_mollifier(0.6, 0.3);
  const auto c = 2.0 * a + (-0.5) * b;
  for (double x : { 0.2, 0.35, 0.6, 0.8 }) {
    CHECK(c(x) == doctest::Approx(2.0 * a(x) - 0.5 * b(x)));
    CHECK(c.derivative(2, x) == doctest::Approx(2.0 * a.derivative(2, x) - 0.5 * b.derivative(2, x)));
  }
}

TEST_CASE("partition of unity sums to one")
{
  const Box region = Box::interval(-2.0, 3.0);
  const auto pu = make_partition_of_unity(region, 0.5);
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double y = -2.0 + 5.0 * rng.uniform();
    const Vector p = vec({ y });
    CHECK(std::abs(pu.sum(p) - 1.0) <= 1e-10);
    const auto cov = pu.covering(p);
    CHECK(static_cast<int>(cov.size()) <= pu.max_overlap());
    for (const auto& v : cov)
      CHECK(pu.member(v)(p) >= 0.0);
  }
  // a lattice point is covered by one member only
  const Vector node = vec({ 1.0 });
  double covered = 0.0;
  int nonzero = 0;
  for (const auto& v : pu.covering(node)) {
    const double m = pu.member(v)(node);
    covered += m;
    nonzero += m > 0.0;
  }
  CHECK(nonzero == 1);
  CHECK(covered == doctest::Approx(1.0));
}

TEST_CASE("partition of unity in two dimensions")
{
  Box region{ vec({ 0.0, 0.0 }), vec({ 1.0, 2.0 }) };
  const auto pu = make_partition_of_unity(region, 0.3);
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const Vector y = vec({ rng.uniform(), 2.0 * rng.uniform() });
    CHECK(std::abs(pu.sum(y) - 1.0) <= 1e-10);
    CHECK(pu.covering(y).size() <= 4);
  }
  CHECK(pu.shell(region, 1).size() > 0);
}

TEST_CASE("partition members have exact derivatives")
{
  const auto pu = make_partition_of_unity(Box::interval(0.0, 1.0), 0.25);
  const auto m = pu.member({ 2 });
  check_fd(m, 4, 0.27, 0.73, 1e-4);
  // derivatives of the sum vanish
  for (double y : { 0.1, 0.33, 0.61 }) {
    double d = 0.0;
    for (const auto& v : pu.covering(vec({ y })))
      d += pu.member(v).derivative(1, y);
    CHECK(std::abs(d) < 1e-10);
  }
}
