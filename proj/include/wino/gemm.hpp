#pragma once

#include <cstdint>
#include <vector>

#include "wino/stats.hpp"
#include "wino/transform.hpp"

namespace wino {

// Register-tile shape of the element-wise GEMM: rows output tiles by cols
// output channels, built from theta-wide vectors. acc_pair_depth and
// acc_wide pick the accumulation scheme (see micro_kernel); they do not
// enter the register or ranking arithmetic.
struct MicroKernelShape {
  int rows = 7;
  int cols = 8;
  int lanes = 4;
  int acc_pair_depth = 1;
  bool acc_wide = false;

  // vector registers consumed: double-buffered input and filter operands
  // plus the accumulator tile
  int register_use() const { return 2 * rows + cols / 2 + rows * cols / 4; }
  double cmr() const {
    return 2.0 * rows * cols / static_cast<double>(rows + cols);
  }
};

// Every (rows, cols) pair that fits a 32-register budget with cols a
// multiple of the vector width, best compute-to-memory ratio first.
// Ties break toward more rows, then more cols.
std::vector<MicroKernelShape> feasible_kernels();

// 7x8 for tile-heavy layers; 4x16 once both channel counts pass the tile
// count, where the wider accumulator amortises filter loads better.
MicroKernelShape select_kernel(int64_t tiles, int64_t c, int64_t k);

// Test hook: element offsets each operand load touches, in load order.
struct PanelTrace {
  std::vector<int64_t> v_reads, u_reads;
};

// One register-tile pass over a c_len-deep panel pair. v is a
// [c_len/theta][rows][theta] input panel, u a [c_len][cols] filter panel,
// acc a [cols/theta][rows][theta] output panel. overwrite stores on the
// first channel block and accumulates afterwards. Partial sums merge
// pairwise up to acc_pair_depth levels before joining the running sum;
// the grouping is a pure function of the channel index, so results do
// not depend on how work is split across blocks or threads. acc_wide
// keeps the running sums in double.
void micro_kernel(const MicroKernelShape& mk, const float* v, const float* u,
                  int64_t c_len, float* acc, bool overwrite, RunStats* stats,
                  PanelTrace* trace);

// Same pass writing a double panel: partials stay double across channel
// blocks instead of rounding through the float buffer on every writeback.
void micro_kernel(const MicroKernelShape& mk, const float* v, const float* u,
                  int64_t c_len, double* acc, bool overwrite, RunStats* stats,
                  PanelTrace* trace);

// All register-tile passes for one (l, c block, k block) triple.
void block_gemm(const float* packed_in, const PackedInputLayout& in_layout,
                const float* packed_filter, const PackedFilterLayout& filter_layout,
                int l, int64_t cb, int64_t kb, const MicroKernelShape& mk,
                float* gemm_out, const PackedGemmOutLayout& out_layout,
                bool first_c_block, RunStats* stats, PanelTrace* trace);

void block_gemm(const float* packed_in, const PackedInputLayout& in_layout,
                const float* packed_filter, const PackedFilterLayout& filter_layout,
                int l, int64_t cb, int64_t kb, const MicroKernelShape& mk,
                double* gemm_out, const PackedGemmOutLayout& out_layout,
                bool first_c_block, RunStats* stats, PanelTrace* trace);

}  // namespace wino
