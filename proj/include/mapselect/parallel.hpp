#pragma once

#include <cstddef>

namespace mapselect {

/// Selects between the OpenMP kernels and their serial reference versions.
/// Both produce bitwise-identical results; the serial path exists for testing
/// and benchmarking.
enum class Exec { serial, parallel };

/// Worker count used by parallel kernels. Honours MAPSELECT_THREADS (a cap, not
/// a request) on first use.
int worker_count();

/// Overrides the worker count for the rest of the process (0 restores default).
void set_worker_count(int n);

}  // namespace mapselect
