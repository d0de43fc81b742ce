#include "doctest.h"

#include "genfun/limitproc.hpp"
#include "genfun/stats.hpp"
#include "support.hpp"

#include <cmath>

using namespace genfun;
using genfun::test::vec;

namespace {

//! Bridge covariance over `reps` seeds compared entrywise with
//! F(min) - F F; the SE of a sample covariance of Gaussians is
//! sqrt((s_ii s_jj + s_ij^2) / N).
void check_bridge_covariance(const BridgeSampler& s, int reps)
{
  const Index m = s.grid().size();
  Matrix draws(reps, m);
  for (int r = 0; r < reps; ++r)
    draws.row(r) = s.draw(99, static_cast<std::uint64_t>(r)).values.transpose();
  const Matrix emp = sample_covariance(draws);
  const Matrix exact = s.covariance();
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      const double se =
        std::sqrt((exact(i, i) * exact(j, j) + exact(i, j) * exact(i, j)) / double(reps));
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(emp(i, j) - exact(i, j)) <= 4 * se + 1e-15);
    }
}

} // namespace

TEST_CASE("uniform bridge on three points")
{
  const BridgeSampler s([](double t) { return t; }, vec({ 0.0, 0.5, 1.0 }), "uniform");
  const Matrix S = s.covariance();
  CHECK(S(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(S(0, 0) == 0.0);
  CHECK(S(2, 2) == 0.0);
  const BridgePath p = s.draw(3);
  CHECK(p.values(0) == 0.0);
  CHECK(p.values(2) == 0.0);
  CHECK(p.target_cdf_id == "uniform");

  Vector mid(10000);
  for (Index r = 0; r < mid.size(); ++r)
    mid(r) = s.draw(1, static_cast<std::uint64_t>(r)).values(1);
  CHECK(std::abs(mean(mid)) < 4 * 0.5 / 100.0);
}

TEST_CASE("bridge covariance matches F(min) - F F on 16-point grids")
{
  for (const auto& model : { uniform_model(), beta_model(2, 2), cantor_model() }) {
    CAPTURE(model->id());
    const BridgeSampler s([&](double t) { return model->marginal_cdf(0, t); },
                          quantile_grid(*model, 16), model->id());
    check_bridge_covariance(s, 10000);
  }
  // equispaced points put several Cantor points in one gap
  Vector x(16);
  for (Index i = 0; i < 16; ++i)
    x(i) = (double(i) + 0.5) / 16.0;
  const auto c = cantor_model();
  check_bridge_covariance(BridgeSampler([&](double t) { return c->marginal_cdf(0, t); }, x, "cantor"),
                          10000);
}

TEST_CASE("Cantor bridge variance at one third")
{
  const auto c = cantor_model();
  const BridgeSampler s([&](double t) { return c->marginal_cdf(0, t); }, vec({ 0.0, 1.0 / 3.0, 1.0 }),
                        "cantor");
  CHECK(s.cdf_values()(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.covariance()(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("simulate_bridge pins the ends of the quantile grid")
{
  const BridgePath p = simulate_bridge(*normal_model(0.0, 1.0), 32, 4);
  CHECK(p.values(0) == 0.0);
  CHECK(p.values(31) == 0.0);
  CHECK(p.grid.size() == 32);
}

TEST_CASE("joint bridge in copula coordinates")
{
  const auto model = regression_model(uniform_model(), MeanFunction::linear(0.0, vec({ 1.0 })), 0.5);
  const CopulaGrid grid = make_copula_grid(*model, 32, { 0.0, 0.5, 1.0 });
  CHECK(grid.C.rows() == 33);
  CHECK(grid.C.cols() == 4);
  CHECK(grid.C(32, 3) == 1.0);
  const Index reps = 20000;
  const Index gi = 12, bi = 1, gj = 25;
  Vector a(reps), b(reps);
  for (Index r = 0; r < reps; ++r) {
    const JointBridge U = simulate_joint_bridge(grid, 8, static_cast<std::uint64_t>(r));
    CHECK(U.u(0, 2) == 0.0);
    CHECK(std::abs(U.u(32, 3)) < 1e-15);
    a(r) = U.u(gi, bi);
    b(r) = U.u(gj, 3);
  }
  // cov U(z1, y1), U(z2, inf) = C(min z, y1) - C(z1, y1) z2
  const double exact = grid.C(gi, bi) - grid.C(gi, bi) * grid.z(gj);
  const double va = grid.C(gi, bi) * (1 - grid.C(gi, bi)), vb = grid.z(gj) * (1 - grid.z(gj));
  const double emp = ((a.array() - mean(a)) * (b.array() - mean(b))).sum() / double(reps - 1);
  CHECK(std::abs(emp - exact) < 4 * std::sqrt((va * vb + exact * exact) / double(reps)));
  CHECK(std::abs(variance(a) - va) < 4 * std::sqrt(2.0 / double(reps)) * va);
}

TEST_CASE("limit functionals are linear in the bridges")
{
  const auto model = regression_model(uniform_model(), MeanFunction::linear(1.0, vec({ 2.0 })), 1.0);
  const CopulaGrid grid = quantile_copula_grid(*model, 64, 40);
  const auto psi = make_poly_bump(0.5, 0.3, 4);
  const PartitionOfUnity pu(Box::interval(-3.0, 6.0), 0.5);
  const JointBridge U = simulate_joint_bridge(grid, 1);
  const JointBridge V = simulate_joint_bridge(grid, 2);
  const JointBridge zero{ Matrix::Zero(grid.C.rows(), grid.C.cols()), 0 };
  JointBridge W{ 2.5 * U.u - 0.5 * V.u, 0 };

  CHECK(q_psi_conddist(zero, grid, psi, 10) == 0.0);
  CHECK(q_psi_condmean(zero, grid, psi, pu) == 0.0);
  const double cu = q_psi_conddist(U, grid, psi, 10), cv = q_psi_conddist(V, grid, psi, 10);
  CHECK(std::abs(q_psi_conddist(W, grid, psi, 10) - (2.5 * cu - 0.5 * cv)) <
        1e-12 * (1 + std::abs(cu) + std::abs(cv)));
  const double mu = q_psi_condmean(U, grid, psi, pu), mv = q_psi_condmean(V, grid, psi, pu);
  CHECK(std::abs(q_psi_condmean(W, grid, psi, pu) - (2.5 * mu - 0.5 * mv)) <
        1e-12 * (1 + std::abs(mu) + std::abs(mv)));

  PartitionSum detail;
  q_psi_condmean(U, grid, psi, pu, 1e-8, &detail);
  CHECK(detail.shells >= 2);
  CHECK(detail.tail < 2e-8);

  const CopulaGrid other = quantile_copula_grid(*model, 32, 40);
  try {
    q_psi_conddist(U, other, psi, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
  }
}

TEST_CASE("doubling the copula grid barely moves the limit functional")
{
  const auto model = independent_product_model(beta_model(2, 2), normal_model(0.0, 1.0));
  const auto psi = make_poly_bump(0.5, 0.3, 4);
  // default grid size and its double; the change shrinks like 1/G
  const CopulaGrid fine = make_copula_grid(*model, 512, { 0.3 });
  const CopulaGrid coarse = make_copula_grid(*model, 256, { 0.3 });
  double diff = 0.0, size = 0.0;
  for (int r = 0; r < 1000; ++r) {
    const JointBridge U = simulate_joint_bridge(fine, 17, static_cast<std::uint64_t>(r));
    // the coarse path is the fine path at every other node
    JointBridge Uc{ Matrix(257, 2), 0 };
    for (Index g = 0; g <= 256; ++g)
      Uc.u.row(g) = U.u.row(2 * g);
    const double qf = q_psi_conddist(U, fine, psi, 0);
    const double qc = q_psi_conddist(Uc, coarse, psi, 0);
    diff += (qf - qc) * (qf - qc);
    size += qf * qf;
  }
  CHECK(std::sqrt(diff / size) < 0.01);
}

TEST_CASE("limit law sample: centred, PSD, Gaussian, deterministic")
{
  const auto model = independent_product_model(uniform_model(), normal_model(0.0, 1.0));
  const std::vector<TestFunction> psis{ make_poly_bump(0.3, 0.2, 4), make_poly_bump(0.5, 0.3, 4),
                                        make_mollifier(0.6, 0.3) };
  LimitOptions o;
  o.y = 0.3;
  o.grid_size = 128;
  const LimitDraws d = limit_law_sample(*model, psis, LimitKind::conddist, 10000, 5, o);
  CHECK(d.draws.rows() == 10000);
  for (Index j = 0; j < 3; ++j) {
    const Vector col = d.draws.col(j);
    const double sd = std::sqrt(variance(col));
    CHECK(std::abs(mean(col)) < 4 * sd / 100.0);
    const double m = mean(col);
    CHECK(ks_test(col, [&](double t) { return normal_cdf((t - m) / sd); }).p_value > 0.01);
  }
  CHECK((d.covariance - d.covariance.transpose()).norm() < 1e-15);
  Eigen::SelfAdjointEigenSolver<Matrix> es(d.covariance);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);

  o.threads = 3;
  const LimitDraws again = limit_law_sample(*model, psis, LimitKind::conddist, 200, 5, o);
  CHECK(again.draws == d.draws.topRows(200));
  CHECK(draws_to_csv(again.draws).rfind("q1,q2,q3\n", 0) == 0);
}

TEST_CASE("limit variance tracks the finite-sample variance")
{
  const auto model = independent_product_model(uniform_model(), normal_model(0.0, 1.0));
  const auto psi = make_poly_bump(0.5, 0.3, 4);
  LimitOptions o;
  o.y = 0.3;
  const double limit_var =
    limit_law_sample(*model, { psi }, LimitKind::conddist, 4000, 11, o).covariance(0, 0);
  const double oracle = conddist_pair_oracle(*model, psi, 0.3).value;
  const Index n = 1 << 12;
  Vector e(600);
  for (Index r = 0; r < e.size(); ++r) {
    const Sample s = model->sample(n, 12, static_cast<std::uint64_t>(r));
    e(r) = std::sqrt(double(n)) * (conddist_estimator_pair(s, psi, 0.3).value - oracle);
  }
  // 600 replications give the variance to about 6% (one SE)
  CHECK(std::abs(variance(e) / limit_var - 1.0) < 0.2);
}

TEST_CASE("copula coordinates refuse atoms in x")
{
  const auto x = atom_mixture_model({ vec({ 0.5 }) }, { 1.0 }, uniform_model(), 0.5);
  const auto model = independent_product_model(x, normal_model(0.0, 1.0));
  try {
    make_copula_grid(*model, 16, { 0.0 });
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::assumption_violation);
  }
}
