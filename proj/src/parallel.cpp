#include "genfun/parallel.hpp"

#include <cstdlib>
#include <string>

namespace genfun {

int resolve_threads(int requested)
{
  if (requested > 0)
    return requested;
  if (const char* env = std::getenv("GENFUN_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0)
        return v;
    } catch (const std::exception&) {
      // unparsable values fall back to a single worker
    }
  }
  return 1;
}

} // namespace genfun
