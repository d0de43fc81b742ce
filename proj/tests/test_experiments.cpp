#include "doctest.h"

#include "genfun/experiments.hpp"

#include <string>

using namespace genfun;

namespace {

ErrorKind parse_error(const std::string& text)
{
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a parse error for: " << text);
  return ErrorKind::invalid_argument;
}

std::string parse_message(const std::string& text)
{
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

//! A rate config small enough for unit tests.
std::string small_rate(const std::string& extra = "")
{
  return "experiment = rate\nn_grid = 2^6..2^8\nreps = 100\n" + extra;
}

} // namespace

TEST_CASE("every experiment's echo re-parses to the same echo")
{
  for (const auto& e : experiment_names()) {
    CAPTURE(e);
    const ExperimentConfig cfg = parse_config("experiment = " + e + "\n");
    const std::string echo = config_echo(cfg);
    CHECK(config_echo(parse_config(echo)) == echo);
    CHECK(config_hash(parse_config(echo)) == config_hash(cfg));
  }
  const ExperimentConfig odd =
    parse_config("experiment = rate\nmodel = atom-mixture\natoms = 0.2, 0.7\natom_weights = 0.25,0.75\n"
                 "alpha = 0.3000000000000001\npsi = plateau:0.3:0.6:0.1:4, mollifier:0.5:0.2:9\n"
                 "tolerances = slope_lo:-0.7\n");
  CHECK(config_echo(parse_config(config_echo(odd))) == config_echo(odd));
  CHECK(odd.tolerance("slope_lo") == -0.7);
  CHECK(odd.tolerance("slope_hi") == -0.4);
}

TEST_CASE("config values: powers, dyadic ranges, comments")
{
  const ExperimentConfig cfg = parse_config("# header\nexperiment = rate # trailing\n"
                                            "n_grid = 2^10..2^12, 10000\n\nseed = 7\n");
  REQUIRE(cfg.n_grid.size() == 4);
  CHECK(cfg.n_grid[0] == 1024);
  CHECK(cfg.n_grid[2] == 4096);
  CHECK(cfg.n_grid[3] == 10000);
  CHECK(cfg.seed == 7);
  const ExperimentConfig c2 = parse_config("experiment = cantor-rescale\nh_grid = 2^-2..2^-4\n");
  REQUIRE(c2.h_grid.size() == 3);
  CHECK(c2.h_grid[2] == 0.0625);
}

TEST_CASE("config rejects unknown, duplicate and malformed entries")
{
  CHECK(parse_error("experiment = rate\nfoo = 1\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nseed = 1\nseed = 2\n") == ErrorKind::validation);
  CHECK(parse_error("model = uniform\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rates\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nreps = 1.5\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nalpha = abc\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nno equals sign\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\npsi = wiggle:1:2\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nmodel = gamma\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\ntolerances = z:3\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nkernel = epanechnikov\norder = 4\n") == ErrorKind::validation);
}

TEST_CASE("config invariants")
{
  CHECK(parse_error("experiment = rate\nn_grid = 1024, 1024, 2048\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nn_grid = 4096, 2048, 8192\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nreps = 99\n") == ErrorKind::validation);
  CHECK(parse_message("experiment = rate\npairing = conddist\nmodel = product\nalpha = 0.5\n")
          .find("alpha < 1/4") != std::string::npos);
  CHECK(parse_error("experiment = rate\npairing = condmean\nalpha = 0.25\n") == ErrorKind::validation);
  // bias-free density pairing needs alpha > 1/(2l)
  CHECK(parse_message("experiment = rate\nalpha = 0.25\n").find("1/(2l)") != std::string::npos);
  CHECK_NOTHROW(parse_config("experiment = rate\nalpha = 0.25\nbias_mode = corrected\n"));
  CHECK_NOTHROW(parse_config("experiment = rate\nkernel = poly\norder = 4\nalpha = 0.15\n"));
  CHECK(parse_error("experiment = cantor-rescale\npoints = 0.5\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = cantor-rescale\ngap_point = 0.25\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = cantor-rescale\nmodel = uniform\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = illposed-demo\neps_bar = 1.5\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = lemma-check\nmodel = uniform\n") == ErrorKind::validation);
  CHECK(parse_error("experiment = rate\nmodel = atom-mixture\natom_weights = 0.5, 0.6\n") ==
        ErrorKind::validation);
  // conditional pairings default to an admissible alpha
  CHECK(parse_config("experiment = rate\npairing = conddist\n").alpha < 0.25);
}

TEST_CASE("config hash follows the content")
{
  const auto a = parse_config("experiment = rate\nseed = 1\n");
  const auto b = parse_config("experiment = rate\nseed = 2\n");
  const auto c = parse_config("seed = 1\n# same content\nexperiment = rate\n");
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a) == config_hash(c));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("builders")
{
  const TestFunction b = parse_psi("bump:0.5:0.25:4");
  CHECK(b(0.5) == doctest::Approx(1.0));
  CHECK(b(0.8) == 0.0);
  CHECK(parse_psi("plateau:0.3:0.6:0.1:4")(0.45) == doctest::Approx(1.0));
  CHECK(parse_psi("mollifier:0.5:0.2")(0.5) > 0.0);
  CHECK_THROWS_AS(parse_psi("bump:0.5:0.25"), Error);
  CHECK_THROWS_AS(parse_psi("bump:0.5:0.25:0"), Error);

  auto cfg = parse_config("experiment = rate\nmodel = regression\nmean_a = 1\nmean_b = 2\n");
  const ModelPtr m = build_model(cfg);
  CHECK(m->dim() == 2);
  CHECK(m->has_conditional());
  cfg = parse_config("experiment = rate\nmodel = product\nx_model = beta\ny_model = normal\n");
  CHECK(build_model(cfg)->dim() == 2);
  CHECK(build_kernel(parse_config("experiment = rate\nkernel = poly\norder = 6\nalpha = 0.1\n")).order() == 6);
}

TEST_CASE("CSV tables carry provenance columns")
{
  CsvTable t{ "x.csv", { "a", "b" }, {} };
  t.add({ "1", fmt(0.1) });
  CHECK(t.render("00ff", 9) == "config_hash,seed,version,a,b\n00ff,9," + std::string(kVersion) + ",1,0.1\n");
  CHECK(fmt(1.0 / 3.0) == "0.3333333333333333");
}

TEST_CASE("small rate run is deterministic across thread counts")
{
  const ExperimentConfig cfg = parse_config(small_rate());
  const RateReport one = rate_experiment(cfg, 1);
  const RateReport three = rate_experiment(cfg, 3);
  REQUIRE(one.rows.size() == 3);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(one.errors[k] == three.errors[k]);
  const ExperimentResult a = run_experiment(cfg, 1), b = run_experiment(cfg, 2);
  REQUIRE(a.tables.size() == b.tables.size());
  for (std::size_t i = 0; i < a.tables.size(); ++i)
    CHECK(a.tables[i].render("h", 1) == b.tables[i].render("h", 1));
  // RMSE shrinks with n
  CHECK(one.rows[2].rmse < one.rows[0].rmse);
  // r int (1 - u^2)^4 du with r = 0.3
  CHECK(one.oracle == doctest::Approx(0.3 * 768.0 / 945.0).epsilon(1e-12));
}

TEST_CASE("rate with a conditional pairing runs the limit check")
{
  const ExperimentConfig cfg = parse_config(small_rate(
    "pairing = conddist\nmodel = product\nlimit_reps = 200\ncheck_reps = 100\ncheck_n = 256\n"
    "grid_size = 64\n"));
  const RateReport r = rate_experiment(cfg);
  REQUIRE(r.limit.has_value());
  CHECK(r.limit->limit_var > 0.0);
  CHECK(r.limit->finite_var > 0.0);
  // both estimate the same variance; with these small counts allow 50%
  CHECK(r.limit->rel_diff < 0.5);
}

TEST_CASE("conditional pairings need a conditional model")
{
  const ExperimentConfig cfg = parse_config(small_rate("pairing = conddist\nmodel = uniform\n"));
  try {
    rate_experiment(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported_combination);
  }
}

TEST_CASE("bias experiment: beta slope and uniform noise floor")
{
  const auto beta = bias_experiment(parse_config("experiment = bias\nmodel = beta\nn = 4096\nreps = 20\n"));
  REQUIRE(beta.fit.has_value());
  CHECK(beta.fit->slope == doctest::Approx(2.0).epsilon(0.05));
  for (const auto& row : beta.rows)
    CHECK(row.bias == doctest::Approx(row.predicted).epsilon(0.05));
  const auto uni = bias_experiment(parse_config("experiment = bias\nmodel = uniform\nn = 4096\nreps = 20\n"));
  CHECK(uni.predicted_zero);
  CHECK_FALSE(uni.fit.has_value());
  const ExperimentResult r = run_experiment(parse_config("experiment = bias\nmodel = uniform\nn = 4096\nreps = 20\n"));
  CHECK(r.status == Status::inconclusive);
  try {
    bias_experiment(parse_config("experiment = bias\nmodel = cantor\nn = 64\nreps = 2\n"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported_combination);
  }
}

TEST_CASE("variance experiment: pooled covariance against the covariance functional")
{
  const auto r = variance_experiment(parse_config("experiment = variance\nn = 2048\nreps = 20\n"));
  CHECK(r.gram.rows() == 3);
  CHECK(r.max_rel_pooled < 0.05);
  CHECK((r.pooled - r.pooled.transpose()).norm() < 1e-15);
  // a psi equal to 1 on the support of the law has no variance
  const auto flat = variance_experiment(parse_config(
    "experiment = variance\nn = 2048\nreps = 20\npsi = bump:0.5:0.3:4, plateau:-0.05:1.05:0.3:4\n"));
  CHECK(std::abs(flat.gram(1, 1)) < 1e-12);
  CHECK(std::abs(flat.pooled(1, 1)) < 1e-12);
  CHECK(std::abs(flat.pooled(0, 1)) < 1e-12);
}

TEST_CASE("gaussianity experiment reports every column and probe")
{
  const auto r = gaussianity_experiment(parse_config("experiment = gaussianity\nn = 1024\nreps = 200\n"));
  CHECK(r.rows.size() == 6);
  CHECK(r.sanity_rows.size() == 6);
  CHECK(r.standardized.rows() == 200);
  for (const auto& l : r.probes)
    CHECK(l.norm() == doctest::Approx(1.0));
  for (Index j = 0; j < r.standardized.cols(); ++j) {
    const Vector col = r.standardized.col(j);
    CHECK(std::abs(mean(col)) < 4.0 / std::sqrt(200.0));
  }
}

TEST_CASE("cantor rescaling: gap point has no mass at small h")
{
  const auto r = cantor_rescale_experiment(parse_config("experiment = cantor-rescale\nn = 65536\n"));
  CHECK(r.d == doctest::Approx(std::log(2.0) / std::log(3.0)));
  REQUIRE(r.gap_fhat.size() == 8);
  // the gap (1/3, 2/3) holds no mass, so windows narrower than 1/6 see nothing
  for (std::size_t k = 2; k < 8; ++k)
    CHECK(r.gap_fhat[k] == 0.0);
  for (std::size_t p = 0; p < r.min_rescaled.size(); ++p) {
    CHECK(r.min_rescaled[p] > 0.0);
    CHECK(r.max_rescaled[p] / r.min_rescaled[p] < 10.0);
  }
}

TEST_CASE("fast experiments pass end to end")
{
  for (const char* text : { "experiment = illposed-demo\n", "experiment = lemma-check\n",
                            "experiment = lemma-check\nmodel = product\nx_model = beta\n",
                            "experiment = lemma-check\nmodel = regression\n" }) {
    CAPTURE(text);
    const ExperimentConfig cfg = parse_config(text);
    const ExperimentResult r = run_experiment(cfg);
    CHECK(r.status == Status::pass);
    CHECK_FALSE(r.tables.empty());
    CHECK(r.summary_json(cfg).find("\"status\": \"pass\"") != std::string::npos);
  }
}
