#pragma once

#include "genfun/core.hpp"
#include "genfun/models.hpp"
#include "genfun/pairing.hpp"
#include "genfun/rng.hpp"
#include "genfun/testspace.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace genfun {

//! One draw of an F-Brownian bridge at the grid points.
struct BridgePath
{
  Vector grid;
  Vector values;
  std::string target_cdf_id;
  std::uint64_t seed = 0;
};

//! Exact Gaussian sampler on a fixed grid: covariance F(z_i ^ z_j) - F_i F_j
//! factored once. Points with F in {0, 1} are pinned to zero.
class BridgeSampler
{
public:
  BridgeSampler(const std::function<double(double)>& cdf, Vector grid, std::string cdf_id);

  BridgePath draw(std::uint64_t seed, std::uint64_t stream = 0) const;

  const Vector& grid() const { return grid_; }
  const Vector& cdf_values() const { return F_; }
  //! Covariance on the full grid (pinned rows zero).
  Matrix covariance() const;

private:
  Vector grid_;
  Vector F_;
  std::string id_;
  std::vector<Index> free_;
  Matrix L_;
};

//! grid_size points x_i = F^{-1}(i / (grid_size - 1)) of a univariate model.
Vector quantile_grid(const DistributionModel& model, int grid_size);

//! One bridge path on the quantile grid of the model.
BridgePath simulate_bridge(const DistributionModel& model, int grid_size, std::uint64_t seed);

//! Discretized copula C(z, y) = F_xy(F_x^{-1}(z), y) on z_g = g/G and finite
//! y levels, with a last column for y = +inf (C = z). Supports d_x = 1.
struct CopulaGrid
{
  std::string model_id;
  Vector z;     //!< G + 1 nodes on [0, 1]
  Vector y;     //!< finite y levels, increasing
  //! Representative points of the levels + 1 bins: below the first level,
  //! between consecutive levels, above the last.
  Vector y_mid;
  Matrix C;     //!< (G + 1) x (levels + 1)
  Matrix cell_sd; //!< sqrt of the cell masses, G x (levels + 1)

  Index levels() const { return y.size(); }
};

//! Bin points default to the arithmetic midpoints of the levels and the end
//! levels for the two outer bins.
CopulaGrid make_copula_grid(const DistributionModel& model, int grid_size,
                            const std::vector<double>& y_levels,
                            const std::vector<double>& y_mid = {});

//! Grid whose y levels sit at the marginal quantiles 1e-9 .. 1 - 1e-9 of y in
//! `bins` steps of equal probability, bin points at the mid-probability
//! quantiles.
CopulaGrid quantile_copula_grid(const DistributionModel& model, int grid_size, int bins);

//! Joint bridge U(z, y) of the empirical process in copula coordinates, from
//! independent cell noise: U = W(cells below) - C * W(all). The x-bridge is
//! the last column.
struct JointBridge
{
  Matrix u; //!< (G + 1) x (levels + 1)
  std::uint64_t seed = 0;

  Vector u_x() const { return u.col(u.cols() - 1); }
};

JointBridge simulate_joint_bridge(const CopulaGrid& grid, std::uint64_t seed,
                                  std::uint64_t stream = 0);

//! (Q_{y|x}, psi) at y = y[level] for psi on (0, 1):
//! -[int C psi'' U_x dz + int C psi' dU_x + int psi' U_xy dz], the dU_x term
//! by summation by parts.
double q_psi_conddist(const JointBridge& U, const CopulaGrid& grid, const TestFunction& psi,
                      Index level);

//! The bracket above at every level, with 0 at y = +inf.
Vector q_conddist_profile(const JointBridge& U, const CopulaGrid& grid, const TestFunction& psi);

//! (Q_m, psi) = sum_v -sum_b y_b psi_v(y_b) dJ_b with J the profile and y_b
//! bin midpoints; members summed shell by shell from the y range.
double q_psi_condmean(const JointBridge& U, const CopulaGrid& grid, const TestFunction& psi,
                      const PartitionOfUnity& pu, double tail_tol = 1e-8,
                      PartitionSum* detail = nullptr);

enum class LimitKind
{
  conddist,
  condmean
};

struct LimitOptions
{
  int grid_size = 256;
  int y_bins = 256;
  double y = 0.0;             //!< evaluation point for conddist
  double partition_spacing = 0.5;
  double tail_tol = 1e-8;
  int threads = 1;
};

struct LimitDraws
{
  Matrix draws;      //!< reps x |psis|
  Matrix covariance; //!< sample covariance of the columns
};

//! Seeded replications of the limit functional; replication r uses the
//! stream stream_key(seed, r).
LimitDraws limit_law_sample(const DistributionModel& model, const std::vector<TestFunction>& psis,
                            LimitKind which, int reps, std::uint64_t seed,
                            const LimitOptions& options = {});

//! Rows of a draw matrix as CSV with header q1..qp.
std::string draws_to_csv(const Matrix& draws);

} // namespace genfun
