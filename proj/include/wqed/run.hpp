#pragma once
#include "wqed/config.hpp"
#include "wqed/protocol.hpp"

namespace wqed {

// Execute the configured task and return its tables (plus any matrix dumps).
// Pure apart from reading config.input; writing is the caller's job.
OutputSet run_task(const RunConfig& config);

// run_task + write_outputs into config.output_dir.
void run_and_write(const RunConfig& config);

// Deterministic worker pool: executes fn(i) for i in [0, n) and guarantees
// results are keyed by index, so the outcome is independent of thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace wqed
