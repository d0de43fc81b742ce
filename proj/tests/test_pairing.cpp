#include "doctest.h"

#include "genfun/pairing.hpp"
#include "support.hpp"

#include <algorithm>
#include <random>

using namespace genfun;
using genfun::test::simpson;
using genfun::test::vec;

namespace {

double normal_cdf(double z)
{
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double psi_integral(const TestFunction& psi, int m = 20000)
{
  const Box& b = psi.support_box();
  return simpson([&](double x) { return psi(x); }, b.lower(0), b.upper(0), m);
}

} // namespace

TEST_CASE("generalized derivative equals expectation across models")
{
  const auto psi = make_poly_bump(0.4, 0.3, 4);
  const auto psi_cantor = make_poly_bump(0.5, 0.45, 4);
  const std::vector<std::pair<ModelPtr, TestFunction>> cases{
    { uniform_model(), psi },
    { beta_model(2, 5), psi },
    { normal_model(0.3, 0.2), psi },
    { atom_mixture_model({ vec({ 0.3 }), vec({ 0.55 }) }, { 0.4, 0.6 }, beta_model(2, 2), 0.5),
      psi },
    { cantor_model(), psi_cantor },
  };
  for (const auto& [model, p] : cases) {
    CAPTURE(model->id());
    const auto a = pair_generalized_derivative(*model, p);
    const auto b = pair_expectation(*model, p);
    CHECK(std::abs(a.value - b.value) < 1e-6);
    CHECK(a.method == Method::exact_oracle);
  }
}

TEST_CASE("generalized derivative matches density integral for beta")
{
  const auto psi = make_mollifier(0.6, 0.25);
  const auto model = beta_model(3, 2);
  // f(x) = 12 x^2 (1 - x)
  const double oracle =
    simpson([&](double x) { return 12 * x * x * (1 - x) * psi(x); }, 0.35, 0.85, 20000);
  CHECK(std::abs(pair_generalized_derivative(*model, psi).value - oracle) < 1e-9);
}

TEST_CASE("bivariate generalized derivative on a product model")
{
  const auto psi = make_poly_bump(vec({ 0.5, 0.4 }), vec({ 0.3, 0.25 }), 3);
  const auto model = independent_product_model(beta_model(2, 2), beta_model(2, 3));
  const auto a = pair_generalized_derivative(*model, psi);
  const auto b = pair_expectation(*model, psi);
  CHECK(std::abs(a.value - b.value) < 1e-8);
}

TEST_CASE("pairing is bilinear")
{
  const auto p1 = make_poly_bump(0.4, 0.2, 3);
  const auto p2 = make_mollifier(0.6, 0.3);
  const auto combo = 2.5 * p1 + (-0.75) * p2;
  const auto model = beta_model(2, 3);
  const double lhs = pair_generalized_derivative(*model, combo).value;
  const double rhs = 2.5 * pair_generalized_derivative(*model, p1).value -
                     0.75 * pair_generalized_derivative(*model, p2).value;
  CHECK(std::abs(lhs - rhs) < 1e-12);

  const Sample s = model->sample(200, 7);
  const Kernel K = epanechnikov();
  const Vector h = vec({ 0.1 });
  const double el = pair_density_estimator(s, K, h, combo).value;
  const double er = 2.5 * pair_density_estimator(s, K, h, p1).value -
                    0.75 * pair_density_estimator(s, K, h, p2).value;
  CHECK(std::abs(el - er) < 1e-12);
}

TEST_CASE("density estimator equals the integral of the kernel estimate on a grid")
{
  const auto model = normal_model(0.5, 0.15);
  const Sample s = model->sample(50, 11);
  const auto psi = make_poly_bump(0.45, 0.3, 4);
  const Kernel K = epanechnikov();
  const Vector h = vec({ 0.2 });
  const double est = pair_density_estimator(s, K, h, psi).value;
  const double grid = simpson(
    [&](double x) { return kde_pointwise(s, K, h, vec({ x })) * psi(x); }, 0.15, 0.75, 240000);
  CHECK(std::abs(est - grid) < 1e-8);
}

TEST_CASE("kernel smoothing agrees with direct integration")
{
  const auto psi = make_plateau(0.3, 0.6, 0.1, 4);
  const Kernel K = higher_order_kernel(4);
  for (double x : { 0.15, 0.25, 0.42, 0.68 }) {
    const double oracle = simpson([&](double w) { return K.base(w) * psi(x - 0.07 * w); }, -1.0,
                                  1.0, 40000);
    CHECK(std::abs(kernel_smooth(psi, K, vec({ 0.07 }), vec({ x })) - oracle) < 1e-10);
  }
}

TEST_CASE("distribution and density estimators are adjoint through psi'")
{
  const auto model = beta_model(2, 2);
  const Sample s = model->sample(100, 3);
  const auto psi = make_poly_bump(0.5, 0.3, 4);
  const Kernel K = epanechnikov();
  const Vector h = vec({ 0.08 });
  const double dens = pair_density_estimator(s, K, h, psi).value;
  const double dist = pair_distribution_estimator(s, K, h, psi.derivative(1)).value;
  CHECK(std::abs(dens + dist) < 1e-12);

  // empirical cdf: (1/n) sum_i int_{x_i}^inf psi
  const double ecdf = pair_distribution_estimator(s, indicator_kernel(), h, psi).value;
  double oracle = 0.0;
  for (Index i = 0; i < s.n(); ++i) {
    const double a = std::max(0.2, s.points(i, 0));
    if (a < 0.8)
      oracle += simpson([&](double x) { return psi(x); }, a, 0.8, 4000);
  }
  CHECK(std::abs(ecdf - oracle / double(s.n())) < 1e-10);
}

TEST_CASE("bias functional for beta(2,2) has a closed form")
{
  const auto model = beta_model(2, 2);
  const auto psi = make_poly_bump(0.5, 0.3, 6);
  const double mu2 = 0.2;
  for (double h : { 0.16, 0.04 }) {
    const auto r = bias_functional(*model, epanechnikov(), vec({ h }), psi);
    // f'' = -12, so the bias is (h^2 mu2 / 2) int f'' psi
    CHECK(std::abs(r.extra("bias") + 6 * h * h * mu2 * psi_integral(psi)) < 1e-12);
    CHECK(r.extra("hbar") == h);
  }
  const auto r4 = bias_functional(*model, higher_order_kernel(4), vec({ 0.1 }), psi);
  CHECK(std::abs(r4.value) < 1e-12);
}

TEST_CASE("bias functional refuses psi that is not smooth enough")
{
  const auto psi = make_poly_bump(0.5, 0.3, 2);
  try {
    bias_functional(*beta_model(2, 2), higher_order_kernel(4), vec({ 0.1 }), psi);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported_order);
  }
}

TEST_CASE("covariance gram is symmetric positive semidefinite")
{
  const auto model = beta_model(2, 3);
  std::vector<TestFunction> psis;
  for (int i = 0; i < 6; ++i)
    psis.push_back(make_poly_bump(0.15 + 0.12 * i, 0.2, 3));
  psis.push_back(psis[0] + psis[1]);
  const Matrix G = covariance_gram(*model, psis);
  CHECK((G - G.transpose()).norm() < 1e-15);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  // the added combination makes G singular
  CHECK(std::abs(es.eigenvalues().minCoeff()) < 1e-12);
  CHECK(std::abs(G(0, 1) - covariance_functional(*model, psis[0], psis[1]).value) < 1e-13);

  // independent oracle for the uniform law
  const auto u = uniform_model();
  const auto& a = psis[2];
  const auto& b = psis[3];
  const double ea = psi_integral(a), eb = psi_integral(b);
  const double eab = simpson([&](double x) { return a(x) * b(x); }, 0.0, 1.0, 20000);
  CHECK(std::abs(covariance_functional(*u, a, b).value - (eab - ea * eb)) < 1e-10);
}

TEST_CASE("ill-posed pair: far in L1, close in sup, gap bounded")
{
  for (double eb : { 0.1, 0.013, 0.001 }) {
    const auto p = illposed_pair(eb);
    CHECK(p.l1_distance == 2.0);
    CHECK(p.sup_distance <= eb + 1e-15);
    CHECK(p.eps <= eb / 2 + 1e-15);
    CHECK(std::abs(p.F1(1.0) - 1.0) < 1e-15);
    CHECK(std::abs(p.F2(1.0 - 1e-12) - 1.0) < 1e-9);
    // cdfs integrate the densities
    const double x = 0.37;
    const double F1 = simpson([&](double t) { return p.f1(t); }, 0.0, x, 2 * 200000);
    CHECK(std::abs(F1 - p.F1(x)) < 1e-3);
    for (const auto& psi : { make_poly_bump(0.5, 0.3, 3), make_mollifier(0.4, 0.2) }) {
      const auto g = illposed_gap(p, psi);
      CHECK(g.gap <= g.bound * (1 + 1e-9) + 1e-14);
    }
  }
  CHECK_THROWS_AS(illposed_pair(0.0), Error);
}

TEST_CASE("conditional distribution pairing for an independent product")
{
  const auto model = independent_product_model(beta_model(2, 3), normal_model(0.0, 1.0));
  const auto psi = make_poly_bump(0.5, 0.35, 4);
  for (double y : { -0.5, 0.3, 1.2 }) {
    // F_{y|x} = Phi(y) does not depend on x
    const double oracle = normal_cdf(y) * psi_integral(psi);
    CHECK(std::abs(conddist_pair_oracle(*model, psi, y).value - oracle) < 1e-8);
  }
}

TEST_CASE("conditional distribution pairing for a regression")
{
  const auto model = regression_model(uniform_model(), MeanFunction::sine(0.5, 0.4, 1.0), 0.3);
  const auto psi = make_poly_bump(0.45, 0.3, 4);
  const double y = 0.7;
  const double oracle = simpson(
    [&](double u) {
      return normal_cdf((y - 0.5 - 0.4 * std::sin(2 * M_PI * u)) / 0.3) * psi(u);
    },
    0.15, 0.75, 20000);
  const auto r = conddist_pair_oracle(*model, psi, y);
  CHECK(std::abs(r.value - oracle) < 1e-6);

  // route through the density representation agrees
  const auto beta_x = regression_model(beta_model(2, 2), MeanFunction::linear(0.2, vec({ 1.0 })), 0.25);
  const auto lemma = conddist_pair_lemma(*beta_x, psi, y);
  const auto direct = conddist_pair_oracle(*beta_x, psi, y);
  CHECK(std::abs(lemma.value - direct.value) < 1e-6);
}

TEST_CASE("lemma transform round trip and phi_c membership")
{
  const auto xm = beta_model(2, 3);
  const auto psi = make_mollifier(0.5, 0.3);
  const auto t = lemma_transform(psi, *xm);
  const auto back = lemma_inverse(t.forward, *xm);
  for (double a : { 0.25, 0.4, 0.5, 0.71 })
    CHECK(std::abs(back(a) - psi(a)) < 1e-9);
  // substitution a = F(x) preserves the integral
  const double lhs = simpson(t.forward, t.x_window.lower(0), t.x_window.upper(0), 20000);
  CHECK(std::abs(lhs - psi_integral(psi)) < 1e-8);

  try {
    lemma_transform(psi, *cantor_model());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_in_phi_c);
  }
}

TEST_CASE("conditioning on atoms is an assumption violation")
{
  const auto x = atom_mixture_model({ vec({ 0.5 }) }, { 1.0 }, uniform_model(), 0.5);
  const auto model = independent_product_model(x, normal_model(0.0, 1.0));
  try {
    conddist_pair_oracle(*model, make_poly_bump(0.5, 0.3, 3), 0.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::assumption_violation);
  }
}

TEST_CASE("conditional density pairing for an independent product")
{
  const auto model = independent_product_model(uniform_model(), normal_model(0.0, 1.0));
  const auto px = make_poly_bump(0.5, 0.3, 3);
  const auto py = make_poly_bump(0.2, 0.8, 3);
  const double oracle =
    psi_integral(px) *
    simpson([&](double y) { return std::exp(-0.5 * y * y) / std::sqrt(2 * M_PI) * py(y); }, -0.6,
            1.0, 20000);
  CHECK(std::abs(conddens_pair_oracle(*model, px, py).value - oracle) < 1e-8);
}

TEST_CASE("conditional moments by partition of unity")
{
  const auto model = regression_model(uniform_model(), MeanFunction::linear(1.0, vec({ 2.0 })), 0.5);
  const auto psi = make_poly_bump(0.5, 0.3, 4);
  const PartitionOfUnity pu(Box::interval(-1.0, 4.0), 0.5);
  const double mean_oracle =
    simpson([&](double u) { return (1.0 + 2.0 * u) * psi(u); }, 0.2, 0.8, 20000);
  const auto r = condmoment_pair_oracle(*model, MomentFunction::identity(), psi, pu);
  CHECK(std::abs(r.value - mean_oracle) < 1e-6);
  CHECK(r.extra("shells") >= 2);

  const double second_oracle = simpson(
    [&](double u) { return ((1.0 + 2.0 * u) * (1.0 + 2.0 * u) + 0.25) * psi(u); }, 0.2, 0.8,
    20000);
  CHECK(std::abs(condmoment_pair_oracle(*model, MomentFunction::power(2), psi, pu).value -
                 second_oracle) < 1e-6);

  // constant g recovers the normalization
  CHECK(std::abs(condmoment_pair_oracle(*model, MomentFunction::constant(1.0), psi, pu).value -
                 psi_integral(psi)) < 1e-6);
}

TEST_CASE("partition summation order does not change the result")
{
  const auto model = regression_model(uniform_model(), MeanFunction::sine(0.0, 1.0, 1.0), 0.4);
  const auto psi = make_poly_bump(0.4, 0.25, 4);
  const PartitionOfUnity pu(Box::interval(-2.0, 2.0), 0.4);
  const auto s = condmoment_terms(*model, MomentFunction::identity(), psi, pu);
  auto terms = s.terms;
  std::mt19937 gen(5);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(terms.begin(), terms.end(), gen);
    double acc = 0.0;
    for (const auto& [v, t] : terms)
      acc += t;
    CHECK(std::abs(acc - s.value) < 1e-12);
  }
}

TEST_CASE("shell summation gives up on slowly decaying terms")
{
  const PartitionOfUnity pu(Box::interval(0.0, 1.0), 0.5);
  try {
    sum_over_shells(pu, pu.region(), [](const LatticeIndex& v) { return 1.0 / (1.0 + std::abs(v[0])); },
                    1e-8, 30);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::divergence_suspected);
  }
}

namespace {

//! (-1)^dx (1/n) sum_i Fhat_xy(x_i, y) d^dx psi(uhat_i), straight from the
//! definition in O(n^2).
double conddist_naive(const Sample& s, const TestFunction& psi, double y)
{
  const Index n = s.n(), dx = s.dim() - 1;
  const TestFunction d = psi.mixed_derivative();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    Vector u(dx);
    for (Index c = 0; c < dx; ++c) {
      double cnt = 0;
      for (Index j = 0; j < n; ++j)
        cnt += s.points(j, c) <= s.points(i, c);
      u(c) = cnt / double(n);
    }
    double joint = 0;
    for (Index j = 0; j < n; ++j) {
      bool below = s.points(j, dx) <= y;
      for (Index c = 0; c < dx; ++c)
        below = below && s.points(j, c) <= s.points(i, c);
      joint += below;
    }
    acc += joint / double(n) * d(u);
  }
  return (dx % 2 ? -1.0 : 1.0) * acc / double(n);
}

} // namespace

TEST_CASE("empirical conditional estimator matches the definition")
{
  const auto model = regression_model(uniform_model(), MeanFunction::sine(0.5, 0.4, 1.0), 0.3);
  Sample s = model->sample(300, 9);
  const auto psi = make_poly_bump(0.45, 0.3, 4);
  for (double y : { 0.2, 0.7 })
    CHECK(std::abs(conddist_estimator_pair(s, psi, y).value - conddist_naive(s, psi, y)) < 1e-12);

  // ties in x share their group rank
  for (Index i = 0; i < s.n(); i += 3)
    s.points(i, 0) = std::round(s.points(i, 0) * 20) / 20;
  CHECK(std::abs(conddist_estimator_pair(s, psi, 0.6).value - conddist_naive(s, psi, 0.6)) <
        1e-12);

  const auto m2 = regression_model(uniform_model(2), MeanFunction::linear(0.0, vec({ 1.0, 1.0 })), 0.3);
  const Sample s2 = m2->sample(150, 4);
  const auto psi2 = make_poly_bump(vec({ 0.5, 0.5 }), vec({ 0.3, 0.3 }), 3);
  CHECK(std::abs(conddist_estimator_pair(s2, psi2, 0.9).value - conddist_naive(s2, psi2, 0.9)) <
        1e-12);
}

TEST_CASE("smoothed conditional weights match direct integration")
{
  const auto model = regression_model(beta_model(2, 2), MeanFunction::linear(0.0, vec({ 1.0 })), 0.2);
  const Sample s = model->sample(80, 21);
  const auto psi = make_poly_bump(0.5, 0.3, 8);
  const Index n = s.n();
  // high orders at small h used to lose every digit to power-sum cancellation
  for (const auto& [K, h] : { std::pair{ epanechnikov(), 0.1 }, std::pair{ higher_order_kernel(4), 0.01 },
                              std::pair{ higher_order_kernel(6), 0.01 }, std::pair{ higher_order_kernel(6), 0.002 } }) {
    CAPTURE(K.order());
    CAPTURE(h);
    ConditionalSmoothing sm;
    sm.x_kernel = K;
    sm.h = h;
    const Vector A = conditional_weights(s, psi, sm);
    auto Ft = [&](double x) {
      double a = 0;
      for (Index i = 0; i < n; ++i)
        a += K.base_antiderivative((x - s.points(i, 0)) / h);
      return a / double(n);
    };
    auto ft = [&](double x) {
      double a = 0;
      for (Index i = 0; i < n; ++i)
        a += K.base((x - s.points(i, 0)) / h);
      return a / (double(n) * h);
    };
    for (Index j : { Index{ 0 }, Index{ 17 }, Index{ 55 } }) {
      const double xj = s.points(j, 0);
      const double oracle = simpson(
        [&](double x) {
          return K.base_antiderivative((x - xj) / h) * psi.derivative(1, std::clamp(Ft(x), 0.0, 1.0)) * ft(x);
        },
        -0.2, 1.2, 400000);
      CHECK(std::abs(A(j) - oracle) < 1e-6);
    }
  }
}

TEST_CASE("conditional estimators approach their oracles")
{
  const auto model = regression_model(uniform_model(), MeanFunction::linear(1.0, vec({ 2.0 })), 0.5);
  const auto psi = make_poly_bump(0.5, 0.3, 4);
  const Sample s = model->sample(20000, 13);
  const double y = 1.8;
  const double dist_oracle = conddist_pair_oracle(*model, psi, y).value;
  CHECK(std::abs(conddist_estimator_pair(s, psi, y).value - dist_oracle) < 0.01);

  const PartitionOfUnity pu(Box::interval(-1.0, 4.0), 0.5);
  const double mean_oracle = condmoment_pair_oracle(*model, MomentFunction::identity(), psi, pu).value;
  const auto mean_est = condmean_estimator_pair(s, psi, pu);
  CHECK(std::abs(mean_est.value - mean_oracle) < 0.02);

  ConditionalSmoothing sm;
  sm.y_kernel = epanechnikov();
  sm.h_y = 0.05;
  CHECK(std::abs(condmean_estimator_pair(s, psi, pu, 1e-8, sm).value - mean_oracle) < 0.02);
}

TEST_CASE("empirical conditional mean equals the direct plug-in sum")
{
  // with indicator smoothing the member terms telescope to -(1/n) sum_j A_j y_j
  const auto model = regression_model(uniform_model(), MeanFunction::constant(0.4), 0.3);
  const Sample s = model->sample(500, 2);
  const auto psi = make_poly_bump(0.5, 0.3, 4);
  const PartitionOfUnity pu(Box::interval(-1.0, 2.0), 0.25);
  const Vector A = conditional_weights(s, psi);
  double direct = 0.0;
  for (Index j = 0; j < s.n(); ++j)
    direct -= A(j) * s.points(j, 1);
  direct /= double(s.n());
  CHECK(std::abs(condmean_estimator_pair(s, psi, pu).value - direct) < 1e-12);
}

TEST_CASE("report serialization")
{
  FunctionalReport r;
  r.value = 0.1;
  r.psi_id = "bump\"x";
  r.model_id = "uniform";
  r.extras = { { "bias", 2.0 } };
  CHECK(r.csv_row().find("\"bump\"\"x\"") != std::string::npos);
  CHECK(r.to_json().find("\"extras\":{\"bias\":2.0}") != std::string::npos);
  CHECK(r.extra("bias") == 2.0);
  CHECK_THROWS_AS(r.extra("nope"), Error);
}
