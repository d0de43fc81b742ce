#include "doctest.h"

#include "genfun/kernels.hpp"
#include "support.hpp"

#include <cmath>

using namespace genfun;
using genfun::test::central_diff6;
using genfun::test::simpson;
using genfun::test::vec;

TEST_CASE("epanechnikov values and moments")
{
  const Kernel K = epanechnikov();
  CHECK(K(vec({ 0.0 })) == 0.75);
  CHECK(K.base_antiderivative(-1.0) == 0.0);
  CHECK(K.base_antiderivative(1.0) == 1.0);
  CHECK(K(vec({ 1.5 })) == 0.0);
  // analytic: 0.75 * int (1 - w^2) w^j dw
  CHECK(std::abs(kernel_moment(K, { 0 }) - 1.0) < 1e-10);
  CHECK(std::abs(kernel_moment(K, { 1 })) < 1e-10);
  CHECK(std::abs(kernel_moment(K, { 2 }) - 0.2) < 1e-10);
}

TEST_CASE("higher order kernels")
{
  for (int l : { 2, 4, 6 }) {
    const Kernel K = higher_order_kernel(l);
    const auto r = verify_order(K, l, 1e-9);
    CHECK(r.passed);
    // independent Simpson oracle for the integral and the order-l moment
    const double total = simpson([&](double w) { return K.base(w); }, -1.0, 1.0, 2000);
    CHECK(std::abs(total - 1.0) < 1e-10);
    const double ml = simpson([&](double w) { return K.base(w) * std::pow(w, l); }, -1.0, 1.0, 2000);
    REQUIRE(r.order_l_moments.size() == 1);
    CHECK(std::abs(ml) > 1e-3);
    CHECK(r.order_l_moments[0].second == doctest::Approx(ml).epsilon(1e-9));
  }
  const Kernel K4 = higher_order_kernel(4);
  // (15/32)(3 - 10 w^2 + 7 w^4)
  for (double w : { 0.0, 0.3, -0.8 })
    CHECK(K4.base(w) ==
          doctest::Approx(15.0 / 32.0 * (3 - 10 * w * w + 7 * std::pow(w, 4))).epsilon(1e-12));
  CHECK(std::abs(simpson([&](double w) { return K4.base(w) * w * w; }, -1, 1, 2000)) < 1e-10);
  CHECK_THROWS_AS(higher_order_kernel(3), Error);
}

TEST_CASE("verify_order reports violations")
{
  const auto r = verify_order(epanechnikov(), 4, 1e-9);
  CHECK_FALSE(r.passed);
  CHECK(r.offending == MultiIndex{ 2 });
  CHECK(r.message.find("(2)") != std::string::npos);
  const auto ok = verify_order(epanechnikov(), 2, 1e-9);
  CHECK(ok.passed);
  CHECK(ok.order_l_moments[0].second == doctest::Approx(0.2));
  const auto ind = verify_order(indicator_kernel(), 2, 1e-9);
  CHECK(ind.indicator_skipped);
  CHECK(ind.message.find("indicator") != std::string::npos);
}

TEST_CASE("product kernel")
{
  const Kernel K = product_kernel(epanechnikov(), 2);
  CHECK(K(vec({ 0.0, 0.0 })) == doctest::Approx(0.5625));
  CHECK(K(vec({ 0.2, 1.1 })) == 0.0);
  const double total = simpson(
    [&](double a) { return simpson([&](double b) { return K(vec({ a, b })); }, -1, 1, 200); },
    -1, 1, 200);
  CHECK(std::abs(total - 1.0) < 1e-9);
  const auto r = verify_order(product_kernel(higher_order_kernel(4), 2), 4, 1e-9);
  CHECK(r.passed);
  CHECK(r.order_l_moments.size() == 5);
  CHECK(K.antiderivative(vec({ 2.0, 2.0 })) == 1.0);
}

TEST_CASE("antiderivative consistency")
{
  for (const Kernel& K : { epanechnikov(), higher_order_kernel(4), higher_order_kernel(6) })
    for (double w : { -0.9, -0.4, 0.0, 0.25, 0.7 }) {
      const double d =
        central_diff6([&](double t) { return K.base_antiderivative(t); }, w, 1e-3);
      CHECK(std::abs(d - K.base(w)) < 1e-6);
    }
  const Kernel G = indicator_kernel();
  CHECK(G.base_antiderivative(0.0) == 1.0);
  CHECK(G.base_antiderivative(-1e-300) == 0.0);
  CHECK_THROWS_AS(G.base(0.1), Error);
}

TEST_CASE("bandwidth law")
{
  Bandwidth bw{ 0.5, 0.2, vec({ 1.0, 2.0 }) };
  const Vector h = bw.h(1024.0);
  CHECK(h(0) == doctest::Approx(0.5 * std::pow(1024.0, -0.2)));
  CHECK(bw.hbar(1024.0) == doctest::Approx(h(1)));
  CHECK_THROWS_AS(Bandwidth{ -1.0 }.h(10.0), Error);
  CHECK(make_kernel("poly", 6).order() == 6);
  CHECK_THROWS_AS(make_kernel("gauss", 2), Error);
}
