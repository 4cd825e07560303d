#include "mapselect/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace mapselect {
namespace {

int g_override = 0;

int from_environment() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("MAPSELECT_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap > 0) n = std::min(n, cap);
    } catch (...) {
      // unparsable value: ignore the cap
    }
  }
  return std::max(n, 1);
}

}  // namespace

int worker_count() {
  if (g_override > 0) return g_override;
  static const int n = from_environment();
  return n;
}

void set_worker_count(int n) { g_override = std::max(n, 0); }

}  // namespace mapselect
