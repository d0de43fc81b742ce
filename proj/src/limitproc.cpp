#include "genfun/limitproc.hpp"

#include "genfun/parallel.hpp"
#include "genfun/stats.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace genfun {

namespace {

constexpr double kPinTol = 1e-14;

Matrix bridge_covariance(const Vector& F, const std::vector<Index>& idx)
{
  const auto m = static_cast<Index>(idx.size());
  Matrix S(m, m);
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b) {
      const double fa = F(idx[static_cast<std::size_t>(a)]);
      const double fb = F(idx[static_cast<std::size_t>(b)]);
      S(a, b) = std::min(fa, fb) - fa * fb;
    }
  return S;
}

struct PsiNodes
{
  Vector d1, d2;
};

PsiNodes psi_nodes(const TestFunction& psi, const Vector& z)
{
  if (psi.dim() != 1)
    fail(ErrorKind::invalid_argument, "limit functionals are implemented for d_x = 1");
  if (psi.smoothness_order() < 2)
    fail(ErrorKind::unsupported_order, "limit functional needs the second derivative of psi");
  PsiNodes p{ Vector(z.size()), Vector(z.size()) };
  for (Index g = 0; g < z.size(); ++g) {
    p.d1(g) = psi.derivative(1, z(g));
    p.d2(g) = psi.derivative(2, z(g));
  }
  return p;
}

void check_grid(const JointBridge& U, const CopulaGrid& grid)
{
  if (U.u.rows() != grid.C.rows() || U.u.cols() != grid.C.cols())
    fail(ErrorKind::invalid_argument, "bridge and copula grid sizes differ");
}

//! T1 + T2 + T3 at level b for precomputed psi derivatives.
double bracket(const JointBridge& U, const CopulaGrid& grid, const PsiNodes& p, Index b)
{
  const Index n = grid.z.size();
  const Index last = grid.C.cols() - 1;
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  for (Index g = 0; g < n; ++g) {
    const double w = (g == 0 || g == n - 1) ? 0.5 : 1.0;
    const double ux = U.u(g, last);
    t1 += w * grid.C(g, b) * p.d2(g) * ux;
    t3 += w * p.d1(g) * U.u(g, b);
    if (g + 1 < n) {
      const double phi0 = grid.C(g, b) * p.d1(g);
      const double phi1 = grid.C(g + 1, b) * p.d1(g + 1);
      t2 -= 0.5 * (ux + U.u(g + 1, last)) * (phi1 - phi0);
    }
  }
  const double dz = 1.0 / double(n - 1);
  return (t1 + t3) * dz + t2;
}

} // namespace

BridgeSampler::BridgeSampler(const std::function<double(double)>& cdf, Vector grid,
                             std::string cdf_id)
  : grid_(std::move(grid))
  , F_(grid_.size())
  , id_(std::move(cdf_id))
{
  if (grid_.size() < 2)
    fail(ErrorKind::invalid_argument, "bridge grid needs at least 2 points");
  for (Index i = 0; i < grid_.size(); ++i) {
    if (i > 0 && !(grid_(i) >= grid_(i - 1)))
      fail(ErrorKind::invalid_argument, "bridge grid must be nondecreasing");
    F_(i) = cdf(grid_(i));
    if (F_(i) > kPinTol && F_(i) < 1.0 - kPinTol)
      free_.push_back(i);
  }
  if (free_.empty())
    return;
  Matrix S = bridge_covariance(F_, free_);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    // repeated cdf values (flat stretches) make S singular
    S.diagonal().array() += 1e-12;
    llt.compute(S);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(bridge_covariance(F_, free_));
      char buf[96];
      std::snprintf(buf, sizeof buf, "bridge covariance not positive definite (min eigenvalue %.3g)",
                    es.eigenvalues().minCoeff());
      fail(ErrorKind::numeric_failure, buf);
    }
  }
  L_ = llt.matrixL();
}

BridgePath BridgeSampler::draw(std::uint64_t seed, std::uint64_t stream) const
{
  BridgePath path{ grid_, Vector::Zero(grid_.size()), id_, seed };
  if (free_.empty())
    return path;
  Rng rng(seed, stream);
  Vector e(L_.rows());
  for (Index i = 0; i < e.size(); ++i)
    e(i) = rng.normal();
  const Vector v = L_ * e;
  for (std::size_t i = 0; i < free_.size(); ++i)
    path.values(free_[i]) = v(static_cast<Index>(i));
  return path;
}

Matrix BridgeSampler::covariance() const
{
  const Index n = grid_.size();
  Matrix S = Matrix::Zero(n, n);
  const Matrix inner = bridge_covariance(F_, free_);
  for (std::size_t a = 0; a < free_.size(); ++a)
    for (std::size_t b = 0; b < free_.size(); ++b)
      S(free_[a], free_[b]) = inner(static_cast<Index>(a), static_cast<Index>(b));
  return S;
}

Vector quantile_grid(const DistributionModel& model, int grid_size)
{
  if (model.dim() != 1)
    fail(ErrorKind::invalid_argument, "quantile grid needs a univariate model");
  if (grid_size < 2)
    fail(ErrorKind::invalid_argument, "grid_size must be at least 2");
  Vector x(grid_size);
  for (int i = 0; i < grid_size; ++i)
    x(i) = model.marginal_quantile(0, double(i) / double(grid_size - 1));
  return x;
}

BridgePath simulate_bridge(const DistributionModel& model, int grid_size, std::uint64_t seed)
{
  const BridgeSampler s([&](double t) { return model.marginal_cdf(0, t); },
                        quantile_grid(model, grid_size), model.id());
  return s.draw(seed);
}

CopulaGrid make_copula_grid(const DistributionModel& model, int grid_size,
                            const std::vector<double>& y_levels, const std::vector<double>& y_mid)
{
  if (!model.has_conditional())
    fail(ErrorKind::unsupported_combination, "model " + model.id() + " has no conditional structure");
  if (model.x_dim() != 1)
    fail(ErrorKind::unsupported_combination, "limit processes are implemented for d_x = 1");
  const DistributionModel& xm = conditioning_model(model);
  if (!xm.continuous_marginals())
    fail(ErrorKind::assumption_violation, "copula coordinates need a continuous x marginal");
  if (grid_size < 2 || y_levels.empty())
    fail(ErrorKind::invalid_argument, "copula grid needs grid_size >= 2 and at least one y level");
  for (std::size_t b = 1; b < y_levels.size(); ++b)
    if (!(y_levels[b] > y_levels[b - 1]))
      fail(ErrorKind::invalid_argument, "y levels must be strictly increasing");
  const auto L = static_cast<Index>(y_levels.size());
  if (!y_mid.empty() && static_cast<Index>(y_mid.size()) != L + 1)
    fail(ErrorKind::invalid_argument, "need one bin point per bin (levels + 1)");

  CopulaGrid grid;
  grid.model_id = model.id();
  grid.z = Vector::LinSpaced(grid_size + 1, 0.0, 1.0);
  grid.y = Eigen::Map<const Vector>(y_levels.data(), L);
  grid.y_mid.resize(L + 1);
  if (y_mid.empty()) {
    grid.y_mid(0) = y_levels.front();
    grid.y_mid(L) = y_levels.back();
    for (Index b = 1; b < L; ++b)
      grid.y_mid(b) = 0.5 * (grid.y(b - 1) + grid.y(b));
  } else {
    grid.y_mid = Eigen::Map<const Vector>(y_mid.data(), L + 1);
  }

  const Index G = grid_size;
  grid.C.resize(G + 1, L + 1);
  const Index dy = model.dim() - 1;
  Vector xy(2);
  for (Index g = 0; g <= G; ++g) {
    const double z = grid.z(g);
    grid.C(g, L) = z;
    const double xq = (g > 0 && g < G) ? xm.marginal_quantile(0, z) : 0.0;
    for (Index b = 0; b < L; ++b) {
      if (g == 0) {
        grid.C(g, b) = 0.0;
      } else if (g == G) {
        grid.C(g, b) = model.marginal_cdf(dy, grid.y(b));
      } else {
        xy << xq, grid.y(b);
        grid.C(g, b) = model.cdf(xy);
      }
    }
  }
  grid.cell_sd.resize(G, L + 1);
  for (Index g = 0; g < G; ++g)
    for (Index b = 0; b <= L; ++b) {
      double p = grid.C(g + 1, b) - grid.C(g, b);
      if (b > 0)
        p -= grid.C(g + 1, b - 1) - grid.C(g, b - 1);
      grid.cell_sd(g, b) = std::sqrt(std::max(0.0, p));
    }
  return grid;
}

CopulaGrid quantile_copula_grid(const DistributionModel& model, int grid_size, int bins)
{
  if (bins < 1)
    fail(ErrorKind::invalid_argument, "need at least one y bin");
  const Index dy = model.dim() - 1;
  const double lo = 1e-9, span = 1.0 - 2e-9;
  std::vector<double> levels, mids;
  mids.push_back(model.marginal_quantile(dy, 0.5 * lo));
  for (int b = 0; b <= bins; ++b) {
    levels.push_back(model.marginal_quantile(dy, lo + span * b / bins));
    if (b < bins)
      mids.push_back(model.marginal_quantile(dy, lo + span * (b + 0.5) / bins));
  }
  mids.push_back(model.marginal_quantile(dy, 1.0 - 0.5 * lo));
  // quantiles of a law with atoms can repeat
  std::vector<double> ul, um{ mids.front() };
  for (std::size_t b = 0; b < levels.size(); ++b)
    if (ul.empty() || levels[b] > ul.back()) {
      ul.push_back(levels[b]);
      if (b > 0)
        um.push_back(mids[b]);
    }
  um.push_back(mids.back());
  return make_copula_grid(model, grid_size, ul, um);
}

JointBridge simulate_joint_bridge(const CopulaGrid& grid, std::uint64_t seed, std::uint64_t stream)
{
  const Index G = grid.cell_sd.rows(), B = grid.cell_sd.cols();
  Rng rng(seed, stream);
  JointBridge U{ Matrix::Zero(G + 1, B), seed };
  // cumulative noise over cells below and to the left
  Vector row = Vector::Zero(B);
  for (Index g = 0; g < G; ++g) {
    double run = 0.0;
    for (Index b = 0; b < B; ++b) {
      run += grid.cell_sd(g, b) * rng.normal();
      row(b) += run;
    }
    U.u.row(g + 1) = row.transpose();
  }
  const double total = U.u(G, B - 1);
  U.u -= total * grid.C;
  return U;
}

double q_psi_conddist(const JointBridge& U, const CopulaGrid& grid, const TestFunction& psi,
                      Index level)
{
  check_grid(U, grid);
  if (level < 0 || level >= grid.levels())
    fail(ErrorKind::invalid_argument, "y level out of range");
  return -bracket(U, grid, psi_nodes(psi, grid.z), level);
}

Vector q_conddist_profile(const JointBridge& U, const CopulaGrid& grid, const TestFunction& psi)
{
  check_grid(U, grid);
  const PsiNodes p = psi_nodes(psi, grid.z);
  Vector J(grid.levels());
  for (Index b = 0; b < grid.levels(); ++b)
    J(b) = bracket(U, grid, p, b);
  return J;
}

namespace {

struct BinWeight
{
  Index bin;
  long member;
  double coef; //!< y_b psi_v(y_b)
};

std::vector<BinWeight> bin_weights(const CopulaGrid& grid, const PartitionOfUnity& pu)
{
  std::vector<BinWeight> out;
  std::map<long, TestFunction> members;
  for (Index b = 0; b < grid.y_mid.size(); ++b) {
    const double y = grid.y_mid(b);
    for (const auto& v : pu.covering(Vector::Constant(1, y))) {
      auto it = members.find(v[0]);
      if (it == members.end())
        it = members.emplace(v[0], pu.member(v)).first;
      const double w = it->second(y);
      if (w != 0.0)
        out.push_back({ b, v[0], y * w });
    }
  }
  return out;
}

double condmean_from_profile(const Vector& J, const CopulaGrid& grid, const PartitionOfUnity& pu,
                             const std::vector<BinWeight>& weights, double tail_tol,
                             PartitionSum* detail)
{
  const Index L = grid.levels();
  // bin b runs from level b-1 to level b, with J = 0 beyond both ends
  Vector dJ(L + 1);
  for (Index b = 0; b <= L; ++b)
    dJ(b) = (b < L ? J(b) : 0.0) - (b > 0 ? J(b - 1) : 0.0);
  std::map<long, double> terms;
  for (const auto& w : weights)
    terms[w.member] -= w.coef * dJ(w.bin);
  const Box core = Box::interval(grid.y_mid.minCoeff(), grid.y_mid.maxCoeff());
  PartitionSum s = sum_over_shells(
    pu, core,
    [&](const LatticeIndex& v) {
      const auto it = terms.find(v[0]);
      return it == terms.end() ? 0.0 : it->second;
    },
    tail_tol, 100000);
  const double value = s.value;
  if (detail)
    *detail = std::move(s);
  return value;
}

} // namespace

double q_psi_condmean(const JointBridge& U, const CopulaGrid& grid, const TestFunction& psi,
                      const PartitionOfUnity& pu, double tail_tol, PartitionSum* detail)
{
  if (pu.dim() != 1)
    fail(ErrorKind::invalid_argument, "conditional mean limit needs d_y = 1");
  return condmean_from_profile(q_conddist_profile(U, grid, psi), grid, pu, bin_weights(grid, pu),
                               tail_tol, detail);
}

LimitDraws limit_law_sample(const DistributionModel& model, const std::vector<TestFunction>& psis,
                            LimitKind which, int reps, std::uint64_t seed,
                            const LimitOptions& options)
{
  if (reps < 2 || psis.empty())
    fail(ErrorKind::invalid_argument, "limit sampling needs reps >= 2 and at least one psi");
  const CopulaGrid grid = which == LimitKind::conddist
                            ? make_copula_grid(model, options.grid_size, { options.y })
                            : quantile_copula_grid(model, options.grid_size, options.y_bins);
  std::vector<PsiNodes> nodes;
  for (const auto& psi : psis)
    nodes.push_back(psi_nodes(psi, grid.z));
  const Box core = Box::interval(grid.y_mid.minCoeff(), grid.y_mid.maxCoeff());
  const PartitionOfUnity pu(core, options.partition_spacing);
  const auto weights = which == LimitKind::condmean ? bin_weights(grid, pu) : std::vector<BinWeight>{};

  LimitDraws out;
  const auto p = static_cast<Index>(psis.size());
  out.draws.resize(reps, p);
  parallel_for(static_cast<std::size_t>(reps), options.threads, [&](std::size_t r) {
    const JointBridge U = simulate_joint_bridge(grid, seed, r);
    for (Index j = 0; j < p; ++j) {
      const PsiNodes& pn = nodes[static_cast<std::size_t>(j)];
      double q;
      if (which == LimitKind::conddist) {
        q = -bracket(U, grid, pn, 0);
      } else {
        Vector J(grid.levels());
        for (Index b = 0; b < grid.levels(); ++b)
          J(b) = bracket(U, grid, pn, b);
        q = condmean_from_profile(J, grid, pu, weights, options.tail_tol, nullptr);
      }
      out.draws(static_cast<Index>(r), j) = q;
    }
  });
  out.covariance = sample_covariance(out.draws);
  return out;
}

std::string draws_to_csv(const Matrix& draws)
{
  std::string out;
  for (Index j = 0; j < draws.cols(); ++j)
    out += (j ? ",q" : "q") + std::to_string(j + 1);
  out += "\n";
  char buf[32];
  for (Index i = 0; i < draws.rows(); ++i) {
    for (Index j = 0; j < draws.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", draws(i, j));
      out += (j ? "," : "") + std::string(buf);
    }
    out += "\n";
  }
  return out;
}

} // namespace genfun
