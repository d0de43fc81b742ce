//! Batch front end: runs experiment configs, lists components, writes plot
//! scripts for finished runs.

#include "genfun/experiments.hpp"
#include "genfun/kernels.hpp"
#include "genfun/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace genfun;

namespace {

enum Exit
{
  ok = 0,
  validation_error = 1,
  numeric_error = 2,
  inconclusive_strict = 3,
  check_failed = 4
};

std::string utc_now()
{
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

//! Write to a temporary sibling, then rename over the target.
void write_atomic(const fs::path& path, const std::string& text)
{
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    out.flush();
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int exit_for(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::numeric_failure:
    case ErrorKind::divergence_suspected:
    case ErrorKind::integrand_error:
      return numeric_error;
    default:
      return validation_error;
  }
}

void diagnostic(const std::string& kind, const std::string& message)
{
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

struct RunOptions
{
  std::string config;
  std::optional<long> seed;
  std::string out = "runs";
  bool strict = false;
  int threads = 0;
};

int run(const RunOptions& o)
{
  const std::string started = utc_now();
  ExperimentConfig cfg;
  try {
    cfg = parse_config(read_file(o.config));
    if (o.seed) {
      if (*o.seed < 0)
        fail(ErrorKind::validation, "--seed must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(*o.seed);
    }
  } catch (const Error& e) {
    diagnostic(to_string(e.kind()), e.what());
    return validation_error;
  } catch (const std::exception& e) {
    diagnostic("io", e.what());
    return validation_error;
  }

  const std::string hash = config_hash(cfg);
  const fs::path dir = fs::path(o.out) / hash;
  fs::create_directories(dir);
  std::vector<std::string> outputs;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_atomic(dir / name, text);
    outputs.push_back(name);
  };
  emit("config.txt", config_echo(cfg));

  int code = ok;
  std::string status, message;
  try {
    const ExperimentResult r = run_experiment(cfg, resolve_threads(o.threads));
    for (const auto& t : r.tables)
      emit(t.name, t.render(hash, cfg.seed));
    emit("summary.json", r.summary_json(cfg));
    status = to_string(r.status);
    message = r.message;
    if (r.status == Status::fail)
      code = check_failed;
    else if (r.status == Status::inconclusive && o.strict)
      code = inconclusive_strict;
    std::cout << cfg.experiment << ": " << status << " - " << message << "\n";
  } catch (const Error& e) {
    diagnostic(to_string(e.kind()), e.what());
    status = "error";
    message = e.what();
    code = exit_for(e.kind());
  }

  nlohmann::ordered_json m;
  m["config_path"] = o.config;
  m["config_hash"] = hash;
  m["version"] = kVersion;
  m["seed"] = cfg.seed;
  m["started"] = started;
  m["finished"] = utc_now();
  m["status"] = status;
  m["message"] = message;
  m["outputs"] = outputs;
  m["exit_status"] = code;
  write_atomic(dir / "manifest.json", m.dump(2) + "\n");
  std::cout << "outputs in " << dir.string() << "\n";
  return code;
}

void list_components()
{
  std::cout << "models:\n"
               "  uniform        uniform on [0, 1]\n"
               "  beta           Beta(beta_a, beta_b), integer shapes\n"
               "  normal         N(normal_mean, normal_sd^2)\n"
               "  atom-mixture   mix * atoms (atoms, atom_weights) + (1 - mix) * atom_base\n"
               "  cantor         Cantor distribution, dimension ln 2 / ln 3\n"
               "  product        x_model independent of y_model\n"
               "  regression     y = m(x) + noise_sd * N(0, 1), m from mean_fn "
               "(linear a + b x, constant a, sine a + b sin(2 pi freq x))\n";
  std::cout << "kernels:\n";
  for (int l : { 2, 4, 6 }) {
    const Kernel K = l == 2 ? epanechnikov() : higher_order_kernel(l);
    std::cout << "  order " << l << ": " << (l == 2 ? "epanechnikov (or poly)" : "poly")
              << "  moment check " << (verify_order(K, l, 1e-9).passed ? "ok" : "FAILED") << "\n";
  }
  std::cout << "  indicator (empirical-cdf path, g_kernel only)\n";
  std::cout << "psi families:\n"
               "  bump:c:r:p                (1 - u^2)^p on |x - c| <= r\n"
               "  mollifier:c:r[:s]         exp(-1/(1 - u^2)) on |x - c| <= r\n"
               "  plateau:lo:hi:ramp:p      1 on [lo, hi] with polynomial ramps\n";
  std::cout << "experiments:\n";
  for (const auto& e : experiment_names())
    std::cout << "  " << e << "\n";
  std::cout << "config keys:\n";
  for (const auto& [k, t] : config_schema())
    std::cout << "  " << k << " : " << t << "\n";
}

struct Csv
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    throw std::runtime_error("missing column " + name);
  }
};

Csv read_csv(const fs::path& path)
{
  Csv c;
  std::istringstream in(read_file(path));
  std::string line;
  auto cells = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream s(l);
    while (std::getline(s, cell, ','))
      out.push_back(cell);
    return out;
  };
  if (std::getline(in, line))
    c.header = cells(line);
  while (std::getline(in, line))
    if (!line.empty())
      c.rows.push_back(cells(line));
  return c;
}

std::string rate_script(const Csv& rate, const Csv& fit)
{
  const std::size_t n = rate.col("n"), e = rate.col("rmse");
  std::string s = "# log-log RMSE against n with the least-squares slope\n$rate << EOD\n";
  for (const auto& r : rate.rows)
    s += r[n] + " " + r[e] + "\n";
  const auto& f = fit.rows.at(0);
  const std::string slope = f[fit.col("slope")], icpt = f[fit.col("intercept")];
  s += "EOD\nset logscale xy 2\nset xlabel 'n'\nset ylabel 'RMSE'\n"
       "set title sprintf('slope %.3f (95%% CI %.3f .. %.3f)', " +
       slope + ", " + f[fit.col("ci_lower")] + ", " + f[fit.col("ci_upper")] +
       ")\n"
       "fit_line(x) = 2**(" +
       icpt + " + " + slope +
       " * log(x) / log(2))\n"
       "plot $rate using 1:2 with linespoints title 'RMSE', fit_line(x) title 'fit', "
       "fit_line(1024) * sqrt(1024 / x) dashtype 2 title 'n^{-1/2}'\n";
  return s;
}

std::string qq_script(const Csv& d, std::size_t col, const std::string& label)
{
  std::vector<double> v;
  for (const auto& r : d.rows)
    v.push_back(std::stod(r[col]));
  std::sort(v.begin(), v.end());
  const double m = double(v.size());
  // Blom plotting positions, mapped through invnorm by gnuplot
  std::string out = "# normal QQ plot of the standardized draws for " + label + "\n$qq << EOD\n";
  for (std::size_t i = 0; i < v.size(); ++i)
    out += fmt((double(i) + 1.0 - 0.375) / (m + 0.25)) + " " + fmt(v[i]) + "\n";
  out += "EOD\nset xlabel 'standard normal quantile'\nset ylabel 'sample quantile'\n"
         "set title 'QQ: " +
         label +
         "'\nplot $qq using (invnorm($1)):2 with points pt 7 ps 0.4 title '" + label +
         "', x title 'y = x'\n";
  return out;
}

std::string cantor_script(const Csv& c)
{
  const std::size_t x = c.col("x"), g = c.col("in_gap"), h = c.col("h"), r = c.col("rescaled");
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_point;
  for (const auto& row : c.rows)
    if (row[g] == "0")
      by_point[row[x]].emplace_back(row[h], row[r]);
  std::string s = "# h^(1-d) fhat(x) against h at points of the Cantor set\n";
  std::string plot = "plot ";
  int k = 0;
  for (const auto& [pt, vals] : by_point) {
    s += "$p" + std::to_string(k) + " << EOD\n";
    for (const auto& [hh, rr] : vals)
      s += hh + " " + rr + "\n";
    s += "EOD\n";
    plot += std::string(k ? ", " : "") + "$p" + std::to_string(k) +
            " using 1:2 with linespoints title 'x = " + pt + "'";
    ++k;
  }
  s += "set logscale x 2\nset xlabel 'h'\nset ylabel 'h^{1-d} fhat(x)'\n" + plot + "\n";
  return s;
}

std::string bias_script(const Csv& b)
{
  const std::size_t h = b.col("h"), v = b.col("bias"), p = b.col("predicted");
  std::string s = "# |Monte Carlo bias| and the predicted leading term against h\n$bias << EOD\n";
  for (const auto& r : b.rows)
    s += r[h] + " " + r[v] + " " + r[p] + "\n";
  s += "EOD\nset logscale xy 2\nset xlabel 'h'\nset ylabel '|bias|'\n"
       "plot $bias using 1:(abs($2)) with linespoints title 'Monte Carlo', "
       "$bias using 1:(abs($3)) with lines dashtype 2 title 'predicted'\n";
  return s;
}

int plots(const std::string& run_dir)
{
  const fs::path dir(run_dir);
  const std::vector<std::string> expected{ "rate.csv (with rate_fit.csv)", "standardized.csv",
                                           "cantor.csv", "bias.csv" };
  std::vector<std::string> written;
  try {
    if (fs::exists(dir / "rate.csv") && fs::exists(dir / "rate_fit.csv")) {
      write_atomic(dir / "rate.gp", rate_script(read_csv(dir / "rate.csv"), read_csv(dir / "rate_fit.csv")));
      written.push_back("rate.gp");
    }
    if (fs::exists(dir / "standardized.csv")) {
      const Csv d = read_csv(dir / "standardized.csv");
      const std::size_t first = d.col("rep") + 1;
      for (std::size_t j = first; j < d.header.size(); ++j) {
        const std::string name = "qq_" + std::to_string(j - first + 1) + ".gp";
        write_atomic(dir / name, qq_script(d, j, d.header[j]));
        written.push_back(name);
      }
    }
    if (fs::exists(dir / "cantor.csv")) {
      write_atomic(dir / "cantor.gp", cantor_script(read_csv(dir / "cantor.csv")));
      written.push_back("cantor.gp");
    }
    if (fs::exists(dir / "bias.csv")) {
      write_atomic(dir / "bias.gp", bias_script(read_csv(dir / "bias.csv")));
      written.push_back("bias.gp");
    }
  } catch (const std::exception& e) {
    diagnostic("io", e.what());
    return validation_error;
  }
  if (written.empty()) {
    std::string list;
    for (const auto& f : expected)
      list += (list.empty() ? "" : ", ") + f;
    diagnostic("missing-input", "no plottable CSVs in " + run_dir + "; expected one of: " + list);
    return validation_error;
  }
  for (const auto& w : written)
    std::cout << (dir / w).string() << "\n";
  return ok;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Generalized-function estimators: experiment runner" };
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunOptions ro;
  long seed = 0;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("--config", ro.config, "config file (key = value lines)")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the config seed");
  run_cmd->add_option("--out", ro.out, "output root; runs go to <out>/<config hash>");
  run_cmd->add_flag("--strict", ro.strict, "exit 3 when the outcome is inconclusive");
  run_cmd->add_option("--threads", ro.threads, "worker threads (default GENFUN_THREADS, else 1)")
    ->check(CLI::NonNegativeNumber);

  app.add_subcommand("list", "list models, kernels, test functions and experiments");

  std::string run_dir;
  auto* plots_cmd = app.add_subcommand("plots", "write gnuplot scripts for a finished run");
  plots_cmd->add_option("run_dir", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : validation_error;
  }

  if (run_cmd->parsed()) {
    if (*seed_opt)
      ro.seed = seed;
    return run(ro);
  }
  if (plots_cmd->parsed())
    return plots(run_dir);
  list_components();
  return ok;
}
