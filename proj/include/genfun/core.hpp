#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace genfun {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

//! Multi-index of derivative orders, one entry per coordinate.
using MultiIndex = std::vector<int>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorKind
{
  invalid_argument,
  unsupported_order,
  integrand_error,
  assumption_violation,
  not_in_phi_c,
  divergence_suspected,
  numeric_failure,
  unsupported_combination,
  validation
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(what)
    , kind_(kind)
  {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

//! Closed axis-aligned box.
struct Box
{
  Vector lower;
  Vector upper;

  Index dim() const { return lower.size(); }
  bool contains(const Vector& x) const;
  bool empty() const { return (upper.array() < lower.array()).any(); }

  static Box unit(Index k);
  static Box interval(double lo, double hi);
};

Box bounding_box(const Box& a, const Box& b);
Box intersection(const Box& a, const Box& b);

int total_order(const MultiIndex& alpha);

//! The multi-index (1, ..., 1): the mixed first partial in each coordinate.
MultiIndex mixed_first(int k);

//! All multi-indices of dimension k with total order exactly `order`,
//! in lexicographic order.
std::vector<MultiIndex> multi_indices(int k, int order);

} // namespace genfun
