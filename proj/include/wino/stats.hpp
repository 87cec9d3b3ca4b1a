#pragma once

#include <atomic>
#include <cstdint>

namespace wino {

// Instrumentation counters. Hot paths take a nullable pointer; passing
// nullptr keeps the increments out of the loop.
struct RunStats {
  std::atomic<uint64_t> gemm_mults{0};        // scalar multiplies inside micro-kernels
  std::atomic<uint64_t> input_positions{0};   // tile positions gathered by the m=2 path
  std::atomic<uint64_t> input_tiles_full{0};
  std::atomic<uint64_t> input_tiles_reused{0};
  std::atomic<uint64_t> tasks_claimed{0};     // successful queue claims (task-queue mode)
  std::atomic<uint64_t> workspace_elems{0};   // scratch floats allocated for the run
  std::atomic<uint64_t> workspace_workers{0};

  void reset() {
    gemm_mults = 0;
    input_positions = 0;
    input_tiles_full = 0;
    input_tiles_reused = 0;
    tasks_claimed = 0;
    workspace_elems = 0;
    workspace_workers = 0;
  }
};

}  // namespace wino
