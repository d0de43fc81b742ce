#pragma once

#include "genfun/core.hpp"
#include "genfun/kernels.hpp"
#include "genfun/models.hpp"
#include "genfun/stats.hpp"
#include "genfun/testspace.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace genfun {

inline constexpr const char* kVersion = "genfun 0.1.0";

//! Experiment kinds accepted by the `experiment` key.
const std::vector<std::string>& experiment_names();

//! Flat key = value configuration. Unset keys take experiment-specific
//! defaults at parse time, so the canonical echo lists every key.
struct ExperimentConfig
{
  std::string experiment = "rate";

  // model
  std::string model = "uniform";
  int beta_a = 2;
  int beta_b = 2;
  double normal_mean = 0.0;
  double normal_sd = 1.0;
  std::vector<double> atoms{ 0.35, 0.6 };
  std::vector<double> atom_weights{ 0.5, 0.5 };
  double mix = 0.3; //!< total atom mass
  std::string atom_base = "uniform";
  std::string x_model = "uniform";
  std::string y_model = "normal";
  std::string mean_fn = "linear";
  double mean_a = 1.0;
  double mean_b = 2.0;
  double mean_freq = 1.0;
  double noise_sd = 1.0;

  // test functions, kernel, bandwidth h = c n^-alpha
  std::vector<std::string> psi{ "bump:0.5:0.3:4" };
  std::string kernel = "epanechnikov";
  int order = 2;
  std::string g_kernel = "indicator";
  double alpha = 0.3;
  double c = 0.25;
  double h_y = 0.0; //!< 0: same as h

  // sampling
  std::vector<long> n_grid;
  long n = 0;
  int reps = 1;
  int limit_reps = 10000;
  int check_reps = 3000;
  long check_n = 16384;
  int sanity_n = 64;
  std::uint64_t seed = 1;

  // experiment specifics
  std::string pairing = "density"; //!< density | conddist | condmean
  std::string bias_mode = "none";  //!< none | corrected
  std::string estimator_path = "empirical"; //!< empirical | smoothed
  double y_point = 0.3;
  int grid_size = 256;
  int y_bins = 256;
  double partition_spacing = 0.5;
  //! per-shell stop of the partition sums; the reported tail adds two shells
  double tail_tol = 1e-9;
  std::vector<double> h_grid;
  std::vector<double> points;
  double gap_point = 0.5;
  std::vector<double> eps_bar{ 0.1, 0.01 };
  std::map<std::string, double> tolerances;

  double tolerance(const std::string& name) const;
};

//! Parses and validates; every problem is an Error of kind validation.
ExperimentConfig parse_config(const std::string& text);

//! Checks the invariants of a filled-in config.
void validate_config(const ExperimentConfig& cfg);

//! Canonical text: every key once, fixed order, values at full precision.
std::string config_echo(const ExperimentConfig& cfg);

//! FNV-1a of the canonical echo, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

//! Key names and value types, in echo order.
std::vector<std::pair<std::string, std::string>> config_schema();

//! Builders from the config.
ModelPtr build_model(const ExperimentConfig& cfg);
std::vector<TestFunction> build_psis(const ExperimentConfig& cfg);
TestFunction parse_psi(const std::string& spec);
Kernel build_kernel(const ExperimentConfig& cfg);

enum class Status
{
  pass,
  fail,
  inconclusive
};

const char* to_string(Status s);

struct CsvTable
{
  std::string name; //!< file name
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  //! Header and rows, each row prefixed by the provenance columns.
  std::string render(const std::string& hash, std::uint64_t seed) const;
};

//! Full-precision text of a double for CSV cells.
std::string fmt(double v);

struct ExperimentResult
{
  std::string experiment;
  Status status = Status::fail;
  std::string message;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<CsvTable> tables;
  double runtime_s = 0.0;

  double metric(const std::string& key) const;
  //! Summary as JSON text, with the config echo and provenance.
  std::string summary_json(const ExperimentConfig& cfg) const;
};

struct RateRow
{
  long n = 0;
  double h = 0.0;
  double rmse = 0.0;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double ks_p = 0.0; //!< errors vs a normal with their own mean and sd
};

struct LimitCheck
{
  long n = 0;
  int finite_reps = 0;
  double finite_var = 0.0;
  int limit_reps = 0;
  double limit_var = 0.0;
  double rel_diff = 0.0;
};

//! Least squares of log2 RMSE on log2 n over the chosen pairing error.
struct RateReport
{
  std::string pairing;
  double oracle = 0.0;
  double oracle_tail = 0.0; //!< partition tail of the conditional-mean oracle
  std::vector<RateRow> rows;
  LinearFit fit;
  std::vector<Vector> errors; //!< per n, estimator minus oracle
  std::optional<LimitCheck> limit;
  double runtime_s = 0.0;
};

RateReport rate_experiment(const ExperimentConfig& cfg, int threads = 1);

struct BiasRow
{
  double h = 0.0;
  double bias = 0.0; //!< MC mean of (K_h * psi)(x_i) - psi(x_i)
  double se = 0.0;
  double predicted = 0.0; //!< hbar^l (B(h, K), psi)
  bool significant = false;
};

struct BiasReport
{
  std::vector<BiasRow> rows;
  std::optional<LinearFit> fit; //!< log2 |bias| on log2 h over significant rows
  double noise_floor = 0.0;     //!< largest z * se
  bool predicted_zero = false;
};

BiasReport bias_experiment(const ExperimentConfig& cfg, int threads = 1);

struct VarianceReport
{
  Matrix gram;        //!< covariance functional
  Matrix pooled;      //!< within-sample covariance of the per-point terms, pooled
  Matrix replication; //!< covariance of sqrt(n) (estimate - oracle) across reps
  double max_rel_pooled = 0.0;
  double max_rel_replication = 0.0;
  double max_z_replication = 0.0; //!< largest entry error in sampling SEs
};

VarianceReport variance_experiment(const ExperimentConfig& cfg, int threads = 1);

struct NormalityRow
{
  long n = 0;
  std::string label;
  double ks_statistic = 0.0;
  double ks_p = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

struct GaussianityReport
{
  std::vector<NormalityRow> rows;        //!< at cfg.n
  std::vector<NormalityRow> sanity_rows; //!< at sanity_n, reported only
  Matrix standardized;                   //!< reps x (psis + probes) at cfg.n
  std::vector<std::string> labels;
  std::vector<Vector> probes;            //!< unit lambda vectors
};

GaussianityReport gaussianity_experiment(const ExperimentConfig& cfg, int threads = 1);

struct CantorRow
{
  double x = 0.0;
  bool in_gap = false;
  double h = 0.0;
  double fhat = 0.0;
  double rescaled = 0.0; //!< h^(1-d) fhat
};

struct CantorReport
{
  double d = 0.0;
  std::vector<CantorRow> rows;
  std::vector<double> min_rescaled; //!< per Cantor-set point
  std::vector<double> max_rescaled;
  std::vector<double> gap_fhat;     //!< at the gap point, per h
};

CantorReport cantor_rescale_experiment(const ExperimentConfig& cfg, int threads = 1);

struct IllposedRow
{
  double eps_bar = 0.0;
  double eps = 0.0;
  double l1 = 0.0;
  double sup = 0.0;
  std::string psi;
  double gap = 0.0;
  double allowed = 0.0; //!< eps_bar * int |psi'|
};

std::vector<IllposedRow> illposed_experiment(const ExperimentConfig& cfg);

struct LemmaRow
{
  std::string model;
  std::string psi;
  double y = 0.0;
  double route_a = 0.0; //!< cdf formula in x
  double route_b = 0.0; //!< copula transform
};

std::vector<LemmaRow> lemma_experiment(const ExperimentConfig& cfg);

//! Dispatches on cfg.experiment, judges against the tolerances, and lays
//! out the CSV tables. `threads` <= 0 falls back to GENFUN_THREADS.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 0);

} // namespace genfun
