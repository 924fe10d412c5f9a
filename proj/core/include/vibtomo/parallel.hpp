#pragma once

#include <cstddef>
#include <functional>

namespace vibtomo {

/// Worker count: VIBTOMO_THREADS if set and positive, otherwise hardware
/// concurrency (at least 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, count). Iterations must be independent; each
/// writes only its own outputs, so results do not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace vibtomo
