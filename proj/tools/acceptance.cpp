//! Runs the acceptance criteria at their pinned tolerances and prints one
//! PASS/FAIL line per criterion. Exit status is non-zero if any fails.

#include "genfun/experiments.hpp"
#include "genfun/kernels.hpp"
#include "genfun/limitproc.hpp"
#include "genfun/pairing.hpp"
#include "genfun/parallel.hpp"
#include "genfun/quadrature.hpp"
#include "genfun/stats.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace genfun;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

int threads = 1;

ExperimentResult run(const std::string& text)
{
  return run_experiment(parse_config(text), threads);
}

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Outcome illposed()
{
  const ExperimentResult r = run("experiment = illposed-demo\neps_bar = 0.1, 0.01\n"
                                 "psi = bump:0.5:0.3:4, bump:0.35:0.2:4, mollifier:0.6:0.3\n");
  return { r.status == Status::pass,
           "L1 = 2, sup <= eps_bar, gap / (eps_bar int|psi'|) <= " + num(r.metric("max_gap_over_allowed")) };
}

Outcome consistency()
{
  const std::vector<TestFunction> psis{ make_poly_bump(0.5, 0.3, 4), make_poly_bump(0.3, 0.2, 6),
                                        make_mollifier(0.6, 0.25), make_plateau(0.3, 0.6, 0.15, 4),
                                        make_poly_bump(0.7, 0.25, 3) };
  double worst = 0.0;
  for (const auto& model : { uniform_model(), beta_model(2, 2) })
    for (const auto& psi : psis) {
      const double gen = pair_generalized_derivative(*model, psi).value;
      // int f psi by plain quadrature of the density
      QuadratureSpec spec;
      spec.panels_per_axis = 64;
      const Box& b = psi.support_box();
      const double direct =
        integrate_1d([&](double x) { return model->density(Vector::Constant(1, x)) * psi(x); },
                     b.lower(0), b.upper(0), spec, psi.breakpoints()[0])
          .value;
      worst = std::max(worst, std::abs(gen - direct));
    }
  return { worst < 1e-6, "max |(-1)^k (F, d^k psi) - int f psi| = " + num(worst) + " (< 1e-6)" };
}

Outcome kernels()
{
  bool ok = verify_order(epanechnikov(), 2, 1e-9).passed && verify_order(higher_order_kernel(4), 4, 1e-9).passed &&
            verify_order(higher_order_kernel(6), 6, 1e-9).passed;
  const Kernel K = epanechnikov();
  const double m0 = kernel_moment(K, { 0 }), m1 = kernel_moment(K, { 1 }), m2 = kernel_moment(K, { 2 });
  const double err = std::max({ std::abs(m0 - 1.0), std::abs(m1), std::abs(m2 - 0.2) });
  ok = ok && err < 1e-10;
  return { ok, "orders 2/4/6 verified at 1e-9; Epanechnikov moments (1, 0, 0.2) to " + num(err) };
}

Outcome density_rate()
{
  bool ok = true;
  std::string detail;
  for (const auto& [model, lo, hi] : { std::tuple{ "uniform", -0.6, -0.4 },
                                       std::tuple{ "atom-mixture", -0.65, -0.35 },
                                       std::tuple{ "cantor", -0.65, -0.35 } }) {
    const ExperimentResult r =
      run(std::string("experiment = rate\nmodel = ") + model +
          "\nkernel = epanechnikov\norder = 2\nalpha = 0.3\nn_grid = 2^10..2^16\nreps = 200\n"
          "tolerances = slope_lo:" + num(lo) + ",slope_hi:" + num(hi) + "\n");
    ok = ok && r.status == Status::pass;
    detail += std::string(detail.empty() ? "" : ", ") + model + " " + num(r.metric("slope"));
  }
  return { ok, "slopes " + detail };
}

Outcome covariance()
{
  const ExperimentResult u = run("experiment = variance\nmodel = uniform\nn = 2^14\nreps = 500\n"
                                 "tolerances = rel:0.05\n");
  const ExperimentResult c = run("experiment = variance\nmodel = cantor\nn = 2^14\nreps = 500\n"
                                 "tolerances = rel:0.10\n");
  return { u.status == Status::pass && c.status == Status::pass,
           "max relative error uniform " + num(u.metric("max_rel_pooled")) + " (< 0.05), Cantor " +
             num(c.metric("max_rel_pooled")) + " (< 0.10)" };
}

Outcome gaussianity()
{
  const ExperimentResult r = run("experiment = gaussianity\nmodel = uniform\nn = 2^14\nreps = 500\n"
                                 "tolerances = ks_level:0.01\n");
  return { r.status == Status::pass,
           "3 psi + 3 probes, smallest KS p = " + num(r.metric("min_ks_p")) + " (> 0.01)" };
}

Outcome bias()
{
  const ExperimentResult b = run("experiment = bias\nmodel = beta\nbeta_a = 2\nbeta_b = 2\norder = 2\n"
                                 "tolerances = slope_tol:0.3\n");
  const ExperimentResult u = run("experiment = bias\nmodel = uniform\norder = 2\n");
  const bool zero = u.status == Status::inconclusive && u.metric("predicted_zero") == 1.0;
  return { b.status == Status::pass && zero,
           "Beta(2,2) slope " + num(b.metric("slope")) + " (2 +- 0.3); uniform " + to_string(u.status) +
             " at noise floor " + num(u.metric("noise_floor")) };
}

Outcome lemma()
{
  double worst = 0.0;
  bool ok = true;
  for (const char* model : { "model = product\nx_model = uniform\n", "model = product\nx_model = beta\n",
                             "model = regression\nx_model = uniform\n" }) {
    const ExperimentResult r = run(std::string("experiment = lemma-check\n") + model +
                                   "psi = bump:0.5:0.3:4, bump:0.35:0.2:4, mollifier:0.6:0.3\n");
    ok = ok && r.status == Status::pass;
    worst = std::max(worst, r.metric("max_abs_diff"));
  }
  return { ok, "3 models x 3 psi, max difference " + num(worst) + " (< 1e-6)" };
}

Outcome conddist()
{
  bool ok = true;
  std::string detail;
  for (const char* model : { "product", "regression" }) {
    const ExperimentResult r =
      run(std::string("experiment = rate\npairing = conddist\nmodel = ") + model +
          "\nalpha = 0.2\nlimit_reps = 10000\ncheck_n = 2^14\n");
    ok = ok && r.status == Status::pass;
    detail += std::string(detail.empty() ? "" : "; ") + model + " slope " + num(r.metric("slope")) +
              ", limit/finite variance diff " + num(r.metric("limit_rel_diff"));
  }
  return { ok, detail };
}

Outcome condmean()
{
  const ExperimentResult r = run("experiment = rate\npairing = condmean\nmodel = regression\n"
                                 "mean_fn = linear\nmean_a = 1\nmean_b = 2\nnoise_sd = 1\nalpha = 0.2\n"
                                 "limit_reps = 10000\ncheck_n = 2^14\ntolerances = tail_max:1e-8\n");
  return { r.status == Status::pass, "slope " + num(r.metric("slope")) + ", tail " +
                                       num(r.metric("oracle_tail")) + ", limit/finite variance diff " +
                                       num(r.metric("limit_rel_diff")) };
}

Outcome cantor_rescale()
{
  const ExperimentResult r = run("experiment = cantor-rescale\npoints = 0.25, 0.75, 0.1\ngap_point = 0.5\n"
                                 "tolerances = ratio_max:10\n");
  return { r.status == Status::pass, "d = " + num(r.metric("d")) + ", max ratio " + num(r.metric("max_ratio")) +
                                       ", min " + num(r.metric("min_rescaled")) + ", gap fhat " +
                                       num(r.metric("gap_fhat_smallest_h")) };
}

Outcome bridges()
{
  const int reps = 10000;
  int bad = 0, total = 0;
  for (const auto& model : { uniform_model(), beta_model(2, 2), cantor_model() }) {
    const BridgeSampler s([&](double t) { return model->marginal_cdf(0, t); }, quantile_grid(*model, 16),
                          model->id());
    Matrix draws(reps, 16);
    for (int r = 0; r < reps; ++r)
      draws.row(r) = s.draw(2024, static_cast<std::uint64_t>(r)).values.transpose();
    const Matrix emp = sample_covariance(draws), exact = s.covariance();
    for (Index i = 0; i < 16; ++i)
      for (Index j = 0; j < 16; ++j) {
        const double se = std::sqrt((exact(i, i) * exact(j, j) + exact(i, j) * exact(i, j)) / reps);
        ++total;
        if (std::abs(emp(i, j) - exact(i, j)) > 4 * se + 1e-15)
          ++bad;
      }
  }
  return { bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " entries within 4 SE" };
}

Outcome determinism()
{
  const std::vector<std::string> configs{
    "experiment = rate\nn_grid = 2^8..2^10\nreps = 100\nseed = 7\n",
    "experiment = rate\npairing = condmean\nmodel = regression\nn_grid = 2^7..2^9\nreps = 100\n"
    "limit_reps = 200\ncheck_reps = 100\ncheck_n = 512\ngrid_size = 64\ny_bins = 64\nseed = 7\n",
    "experiment = gaussianity\nn = 512\nreps = 100\nseed = 7\n",
    "experiment = cantor-rescale\nn = 2^14\nseed = 7\n"
  };
  for (const auto& text : configs) {
    const ExperimentConfig cfg = parse_config(text);
    const std::string hash = config_hash(cfg);
    const ExperimentResult a = run_experiment(cfg, 1), b = run_experiment(cfg, 2);
    if (a.tables.size() != b.tables.size())
      return { false, cfg.experiment + " table count differs" };
    for (std::size_t i = 0; i < a.tables.size(); ++i)
      if (a.tables[i].render(hash, cfg.seed) != b.tables[i].render(hash, cfg.seed))
        return { false, cfg.experiment + " " + a.tables[i].name + " differs" };
  }
  return { true, "4 configs rerun (1 and 2 threads): CSVs byte-identical" };
}

} // namespace

int main()
{
  threads = resolve_threads(0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
    { "ill-posedness demo", illposed },
    { "generalized derivative consistency", consistency },
    { "kernel contract", kernels },
    { "density pairing root-n rate", density_rate },
    { "density pairing covariance", covariance },
    { "density pairing Gaussianity", gaussianity },
    { "bias law in h", bias },
    { "conditional distribution representations agree", lemma },
    { "conditional distribution rate and limit variance", conddist },
    { "conditional mean rate, tail and limit variance", condmean },
    { "Cantor rescaled estimate", cantor_rescale },
    { "bridge fidelity", bridges },
    { "determinism", determinism },
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = { false, std::string("error: ") + e.what() };
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), s);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
