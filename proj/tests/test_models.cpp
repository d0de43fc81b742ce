#include "doctest.h"

#include "genfun/models.hpp"
#include "genfun/stats.hpp"
#include "support.hpp"

#include <cmath>

using namespace genfun;
using genfun::test::simpson;
using genfun::test::vec;

namespace {

void check_ks(const ModelPtr& m, Index axis = 0)
{
  const auto s = m->sample(100000, 2024);
  const auto r = ks_test(s.points.col(axis), [&](double t) { return m->marginal_cdf(axis, t); });
  CHECK(r.statistic < ks_critical_value(100000, 0.01));
}

void check_monotone(const ModelPtr& m)
{
  const Box b = m->support();
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = b.lower(0) - 0.1 + (b.upper(0) - b.lower(0) + 0.2) * i / 1000.0;
    const double f = m->marginal_cdf(0, t);
    CHECK(f >= prev);
    prev = f;
  }
  CHECK(m->marginal_cdf(0, b.lower(0) - 1.0) == doctest::Approx(0.0));
  CHECK(m->marginal_cdf(0, b.upper(0) + 1.0) == doctest::Approx(1.0));
}

} // namespace

TEST_CASE("uniform model")
{
  const auto u = uniform_model();
  CHECK(u->cdf(vec({ 0.3 })) == 0.3);
  CHECK(u->density(vec({ 0.5 })) == 1.0);
  check_ks(u);
  check_monotone(u);
  CHECK(uniform_model(2)->cdf(vec({ 0.5, 0.4 })) == doctest::Approx(0.2));
}

TEST_CASE("beta model")
{
  const auto b = beta_model(2, 2);
  // F(t) = 3t^2 - 2t^3
  for (double t : { 0.1, 0.5, 0.77 })
    CHECK(b->cdf(vec({ t })) == doctest::Approx(3 * t * t - 2 * t * t * t));
  CHECK(b->density(vec({ 0.5 })) == doctest::Approx(1.5));
  check_ks(b);
  check_ks(beta_model(3, 5));
  check_monotone(b);
  // cdf recovered from density
  for (double t : { 0.2, 0.6 })
    CHECK(std::abs(simpson([&](double s) { return b->density(vec({ s })); }, 0, t, 200) -
                   b->cdf(vec({ t }))) < 1e-6);
}

TEST_CASE("normal model")
{
  const auto m = normal_model(1.0, 2.0);
  CHECK(m->cdf(vec({ 1.0 })) == doctest::Approx(0.5));
  check_ks(m);
  CHECK(std::abs(simpson([&](double s) { return m->density(vec({ s })); }, -20, 2.5, 4000) -
                 m->cdf(vec({ 2.5 }))) < 1e-6);
}

TEST_CASE("atom mixture model")
{
  const auto pure = atom_mixture_model({ vec({ 0.5 }) }, { 1.0 }, uniform_model(), 1.0);
  const auto* am = dynamic_cast<const AtomMixtureModel*>(pure.get());
  REQUIRE(am);
  CHECK(am->jump(vec({ 0.5 })) == 1.0);
  CHECK(pure->cdf(vec({ 0.5 })) - pure->cdf(vec({ std::nextafter(0.5, 0.0) })) == 1.0);
  const auto none = atom_mixture_model({ vec({ 0.5 }) }, { 1.0 }, beta_model(2, 2), 0.0);
  for (double t : { 0.1, 0.5, 0.9 })
    CHECK(none->cdf(vec({ t })) == beta_model(2, 2)->cdf(vec({ t })));
  const auto half = atom_mixture_model({ vec({ 0.5 }) }, { 1.0 }, uniform_model(), 0.5);
  CHECK(half->cdf(vec({ 0.75 })) == doctest::Approx(0.875));
  CHECK_FALSE(half->has_density());
  CHECK_FALSE(half->continuous_marginals());
  CHECK_THROWS_WITH_AS(atom_mixture_model({ vec({ 0.5 }) }, { 0.7 }, uniform_model(), 0.5),
                       doctest::Contains("invalid-argument"), Error);
  // empirical jump size matches the atom mass
  const auto s = half->sample(100000, 8);
  Index hits = 0;
  for (Index i = 0; i < s.n(); ++i)
    hits += s.points(i, 0) == 0.5;
  CHECK(std::abs(hits / 1e5 - 0.5) < 4 * std::sqrt(0.25 / 1e5));
}

TEST_CASE("cantor model")
{
  const auto c = cantor_model();
  CHECK(c->cdf(vec({ 1.0 / 3.0 })) == doctest::Approx(0.5));
  CHECK(c->cdf(vec({ 0.25 })) == doctest::Approx(1.0 / 3.0));
  for (double x : { 0.05, 0.2, 0.41, 0.7, 0.93 })
    CHECK(c->cdf(vec({ x })) + c->cdf(vec({ 1.0 - x })) == doctest::Approx(1.0));
  const auto s = c->sample(100000, 1);
  const Vector x = s.points.col(0);
  const double se = std::sqrt(0.125 / 1e5);
  CHECK(std::abs(x.mean() - 0.5) < 3 * se);
  check_ks(c);
  check_monotone(c);
  CHECK(CantorModel::dimension() == doctest::Approx(0.6309297535714574));
  for (double z : { 0.1, 0.5, 0.8 })
    CHECK(c->marginal_cdf(0, c->marginal_quantile(0, z)) == doctest::Approx(z).epsilon(1e-10));
}

TEST_CASE("independent product model")
{
  const auto m = independent_product_model(beta_model(2, 2), normal_model(0, 1));
  for (double a : { 0.2, 0.7 })
    for (double b : { -0.5, 1.0 })
      CHECK(m->cdf(vec({ a, b })) == doctest::Approx(m->marginal_cdf(0, a) * normal_cdf(b)));
  CHECK(m->conditional_cdf(0.3, vec({ 0.9 })) == doctest::Approx(normal_cdf(0.3)));
  // copula of the product is a * b
  for (double a : { 0.25, 0.5, 0.9 })
    for (double b : { 0.1, 0.6 }) {
      const double x = m->marginal_quantile(0, a), y = m->marginal_quantile(1, b);
      CHECK(m->cdf(vec({ x, y })) == doctest::Approx(a * b).epsilon(1e-9));
    }
  check_ks(m, 1);
}

TEST_CASE("regression model")
{
  const auto zero = regression_model(uniform_model(), MeanFunction::constant(0.0), 1.0);
  CHECK(zero->cdf(vec({ 1.0, 0.0 })) == doctest::Approx(0.5).epsilon(1e-12));

  const auto deg = regression_model(uniform_model(), MeanFunction::linear(0.0, vec({ 1.0 })), 0.0);
  const auto s = deg->sample(100, 4);
  for (Index i = 0; i < 100; ++i)
    CHECK(s.points(i, 1) == s.points(i, 0));
  CHECK(deg->cdf(vec({ 0.8, 0.3 })) == doctest::Approx(0.3));

  const auto lin = regression_model(uniform_model(), MeanFunction::linear(1.0, vec({ 2.0 })), 1.0);
  const auto big = lin->sample(100000, 9);
  const Vector y = big.points.col(1);
  const double se = std::sqrt((1.0 / 3.0 + 1.0) / 1e5);
  CHECK(std::abs(y.mean() - 2.0) < 3 * se);
  check_ks(lin, 1);
  // joint cdf by nested quadrature against a Simpson oracle
  for (double x : { 0.3, 0.8 })
    for (double yy : { 0.5, 2.0 }) {
      const double want =
        simpson([&](double t) { return normal_cdf(yy - 1.0 - 2.0 * t); }, 0.0, x, 400);
      CHECK(lin->cdf(vec({ x, yy })) == doctest::Approx(want).epsilon(1e-10));
    }
  CHECK_THROWS_WITH_AS(regression_model(uniform_model(), MeanFunction::constant(0), -1.0),
                       doctest::Contains("invalid-argument"), Error);
  CHECK_THROWS_WITH_AS(
    regression_model(atom_mixture_model({ vec({ 0.5 }) }, { 1.0 }, uniform_model(), 0.5),
                     MeanFunction::constant(0), 1.0),
    doctest::Contains("assumption-violation"), Error);
}

TEST_CASE("seed determinism and csv round trip")
{
  const auto m = regression_model(beta_model(2, 2), MeanFunction::sine(0, 1, 1), 0.5);
  const auto a = m->sample(50, 77), b = m->sample(50, 77), c = m->sample(50, 78);
  CHECK(a.points == b.points);
  CHECK(a.points != c.points);
  const auto back = sample_from_csv(sample_to_csv(a));
  CHECK(back.points == a.points);
  CHECK_THROWS_AS(sample_from_csv("x1,x2\n1,2\n3\n"), Error);
  CHECK_THROWS_AS(m->sample(0, 1), Error);
}
