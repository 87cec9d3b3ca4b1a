#pragma once

#include <cstdint>

#include "wino/gemm.hpp"
#include "wino/shape.hpp"

namespace wino {

// Capacities in FP32 elements; bandwidths are relative rates, only the
// ratios matter. Defaults model a 64 KB / 512 KB per-core hierarchy with a
// 4:2:1 L1:L2:memory bandwidth split.
struct CacheModel {
  int64_t l1_elems = 16384;
  int64_t l2_elems = 131072;
  double bw_l1 = 4.0;
  double bw_l2 = 2.0;
  double bw_mem = 1.0;
  double fill_factor = 1.0;  // usable fraction of each capacity
};

// Predicted data movement per level, in weighted element transfers.
struct OverheadEstimate {
  double input = 0.0;
  double filter = 0.0;
  double output = 0.0;
  double total() const { return input + filter + output; }
};

struct BlockPlan {
  int64_t tile_blk = 0;
  int64_t c_blk = 0;
  int64_t k_blk = 0;
  MicroKernelShape kernel;
  OverheadEstimate overhead;
  bool feasible = true;  // false: no blocking fits the caches, minimal fallback
  bool wide_transform = false;  // double-staged input transform (see executor)
  int64_t tile_total = 0;  // padded problem dims the plan covers
  int64_t c_total = 0;
  int64_t k_total = 0;
};

// Weighted traffic for one candidate blocking, summed over the three
// operand streams at L1, L2 and memory.
OverheadEstimate overhead(int64_t tiles, int64_t k, int64_t l, int64_t c,
                          int64_t tile_blk, int64_t c_blk, int64_t k_blk,
                          const MicroKernelShape& mk, const CacheModel& cache);

// L2 must hold the output block plus double-buffered input and filter
// blocks; L1 the output block plus the panels the kernel streams.
bool blocks_fit_cache(int64_t tile_blk, int64_t c_blk, int64_t k_blk,
                      const MicroKernelShape& mk, const CacheModel& cache);

// Exhaustive search over tile_blk in multiples of the kernel rows and
// channel blocks in multiples of 16, minimising predicted traffic.
// Ties break toward larger tile_blk, then k_blk, then c_blk. c and k are
// taken already padded to multiples of 16.
BlockPlan plan_blocks(int64_t tiles, int64_t c, int64_t k, int tile_area,
                      const MicroKernelShape& mk, const CacheModel& cache);

BlockPlan plan(const ConvShape& shape, const WinogradConfig& cfg,
               const CacheModel& cache);

}  // namespace wino
