#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace genfun {

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Stream key for (seed, stream index); distinct streams are decorrelated by
//! two rounds of splitmix64.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream)
{
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

//! Seeded generator. The engine is std::mt19937_64; uniform and normal
//! variates are produced here rather than by std distributions so that draws
//! are identical across standard library implementations.
class Rng
{
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
    : engine_(stream_key(seed, stream))
  {}

  std::uint64_t bits() { return engine_(); }

  //! Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  //! Uniform on (0, 1).
  double uniform_open()
  {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  //! Standard normal by the Marsaglia polar method.
  double normal()
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace genfun
