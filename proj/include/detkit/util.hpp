#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace detkit {

/// Worker count for batch operations: the DETKIT_THREADS environment
/// variable when set, else the hardware concurrency (at least 1).
unsigned thread_count();

/// Runs fn(0..n-1), splitting the range over thread_count() workers.
/// Results must be written to per-index slots; the call preserves
/// determinism because no two workers touch the same index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Fixed-decimal rendering ("0.790" at 3 decimals). Relies on the C
/// library's correctly rounded %.Nf, which resolves exact decimal midpoints
/// half-to-even.
std::string format_fixed(double value, int decimals);

}  // namespace detkit
