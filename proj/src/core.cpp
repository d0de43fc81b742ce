#include "genfun/core.hpp"

#include <numeric>

namespace genfun {

const char* to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::invalid_argument:
      return "invalid-argument";
    case ErrorKind::unsupported_order:
      return "unsupported-order";
    case ErrorKind::integrand_error:
      return "integrand-error";
    case ErrorKind::assumption_violation:
      return "assumption-violation";
    case ErrorKind::not_in_phi_c:
      return "not-in-Phi-c";
    case ErrorKind::divergence_suspected:
      return "divergence-suspected";
    case ErrorKind::numeric_failure:
      return "numeric-failure";
    case ErrorKind::unsupported_combination:
      return "unsupported-combination";
    case ErrorKind::validation:
      return "validation";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what)
{
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

bool Box::contains(const Vector& x) const
{
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Box Box::unit(Index k)
{
  return { Vector::Zero(k), Vector::Ones(k) };
}

Box Box::interval(double lo, double hi)
{
  return { Vector::Constant(1, lo), Vector::Constant(1, hi) };
}

Box bounding_box(const Box& a, const Box& b)
{
  return { a.lower.cwiseMin(b.lower), a.upper.cwiseMax(b.upper) };
}

Box intersection(const Box& a, const Box& b)
{
  return { a.lower.cwiseMax(b.lower), a.upper.cwiseMin(b.upper) };
}

int total_order(const MultiIndex& alpha)
{
  return std::accumulate(alpha.begin(), alpha.end(), 0);
}

MultiIndex mixed_first(int k)
{
  return MultiIndex(static_cast<std::size_t>(k), 1);
}

namespace {

void enumerate(int k, int order, MultiIndex& current, int pos,
               std::vector<MultiIndex>& out)
{
  if (pos == k - 1) {
    current[pos] = order;
    out.push_back(current);
    return;
  }
  for (int j = order; j >= 0; --j) {
    current[pos] = j;
    enumerate(k, order - j, current, pos + 1, out);
  }
}

} // namespace

std::vector<MultiIndex> multi_indices(int k, int order)
{
  std::vector<MultiIndex> out;
  if (k <= 0 || order < 0)
    return out;
  MultiIndex current(static_cast<std::size_t>(k), 0);
  enumerate(k, order, current, 0, out);
  return out;
}

} // namespace genfun
