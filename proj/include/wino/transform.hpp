#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "wino/shape.hpp"
#include "wino/stats.hpp"
#include "wino/tensor.hpp"

namespace wino {

// Transform matrices for one tile variant, row-major FP32. All entries are
// exact in binary floating point. bt is edge x edge, g_mat edge x 3,
// at m x edge.
struct TransformSet {
  int m = 0;
  int edge = 0;
  std::vector<float> bt, g_mat, at;

  float bt_at(int i, int j) const { return bt[i * edge + j]; }
  float g_at(int i, int j) const { return g_mat[i * 3 + j]; }
  float at_at(int i, int j) const { return at[i * edge + j]; }
};

const TransformSet& transform_set(int m);

// Scalar form of the factored 8-point row transform used by the m=6 input
// stage; out = bt(6) * in.
void f63_row_transform(const float* in8, float* out8);

// One tile block split into micro-kernel row groups. Groups have `rows`
// tiles each except a shorter tail, so no slot in the packed buffers is
// ever padding.
struct TileGroup {
  int64_t tile0;  // collapsed tile index of the group's first tile
  int rows;
  int64_t slot0;  // tile-slot offset of the group inside the block
};

struct TileBlockShape {
  int64_t tile0 = 0;
  int64_t tiles = 0;
  int rows = 0;  // full-group height (micro-kernel alpha)
  std::vector<TileGroup> groups;
};

TileBlockShape make_tile_block(int64_t tile0, int64_t tiles, int rows);

// Transformed input for one tile block:
// [L][c block][tile group][theta channel group][group rows][theta].
// Channel blocks may have different lengths (all multiples of theta);
// each (L, c block, group) panel is contiguous.
struct PackedInputLayout {
  int tile_area = 0;
  int64_t c_total = 0;
  int64_t c_blk = 0;
  int theta = 4;
  TileBlockShape block;

  int64_t n_cblocks() const { return ceil_div(c_total, c_blk); }
  int64_t c_len(int64_t cb) const { return std::min(c_blk, c_total - cb * c_blk); }
  int64_t size() const { return int64_t(tile_area) * block.tiles * c_total; }
  int64_t l_stride() const { return block.tiles * c_total; }

  int64_t panel(int l, int64_t cb, size_t g) const {
    return l * l_stride() + block.tiles * (cb * c_blk) +
           c_len(cb) * block.groups[g].slot0;
  }
  // element offset for (l, channel, tile slot within block)
  int64_t at(int l, int64_t c, int64_t slot) const {
    const int64_t cb = c / c_blk, ci = c % c_blk;
    const size_t g = static_cast<size_t>(slot / block.rows);
    const int64_t ti = slot - block.groups[g].slot0;
    return panel(l, cb, g) + ((ci / theta) * block.groups[g].rows + ti) * theta +
           ci % theta;
  }
};

// Transformed filter: [k block][L][c block][eta group][block channel][eta].
struct PackedFilterLayout {
  int tile_area = 0;
  int64_t c_total = 0, k_total = 0;
  int64_t c_blk = 0, k_blk = 0;
  int eta = 8;

  int64_t n_cblocks() const { return ceil_div(c_total, c_blk); }
  int64_t n_kblocks() const { return ceil_div(k_total, k_blk); }
  int64_t c_len(int64_t cb) const { return std::min(c_blk, c_total - cb * c_blk); }
  int64_t k_len(int64_t kb) const { return std::min(k_blk, k_total - kb * k_blk); }
  int64_t size() const { return k_total * tile_area * c_total; }

  int64_t panel(int64_t kb, int l, int64_t cb, int64_t kg) const {
    return (kb * k_blk) * (int64_t(tile_area) * c_total) + l * (c_total * k_len(kb)) +
           (cb * c_blk) * k_len(kb) + kg * (c_len(cb) * eta);
  }
  int64_t at(int l, int64_t c, int64_t k) const {
    const int64_t kb = k / k_blk, kj = k % k_blk;
    const int64_t cb = c / c_blk, ci = c % c_blk;
    return panel(kb, l, cb, kj / eta) + ci * eta + kj % eta;
  }
};

// Element-wise stage output for one (tile block, k block) pair:
// [L][eta group][tile group][eta/theta][group rows][theta].
struct PackedGemmOutLayout {
  int tile_area = 0;
  int64_t k_len = 0;
  int eta = 8;
  int theta = 4;
  TileBlockShape block;

  int64_t size() const { return int64_t(tile_area) * k_len * block.tiles; }
  int64_t l_stride() const { return k_len * block.tiles; }

  int64_t panel(int l, int64_t kg, size_t g) const {
    return l * l_stride() + kg * (block.tiles * eta) + block.groups[g].slot0 * eta;
  }
  // element offset for (l, channel offset within the k block, tile slot)
  int64_t at(int l, int64_t kj, int64_t slot) const {
    const int64_t kg = kj / eta, kr = kj % eta;
    const size_t g = static_cast<size_t>(slot / block.rows);
    const int64_t ti = slot - block.groups[g].slot0;
    return panel(l, kg, g) + ((kr / theta) * block.groups[g].rows + ti) * theta +
           kr % theta;
  }
};

// Transforms every tile of the block for channel block cb and scatters the
// results into `out` (laid out per `layout`). Channels >= shape.in_channels
// are written as zeros. The m=2 path walks tiles width-first and keeps the
// two overlap columns of the previous window, so interior tiles gather only
// the fresh half of their positions. wide_stage stages the m=6 passes in
// double, rounding once on store; m=2 ignores it.
void transform_input_block(const Tensor& input, const ConvShape& shape,
                           const WinogradConfig& cfg, const PackedInputLayout& layout,
                           int64_t cb, bool wide_stage, float* out, RunStats* stats);

// Transforms filters for one (k block, c block) pair into `out`.
void transform_filter_block(const Tensor& filter, const ConvShape& shape,
                            const WinogradConfig& cfg, const PackedFilterLayout& layout,
                            int64_t kb, int64_t cb, float* out);

// Applies the inverse transform to one (tile block, k block) result and
// writes the valid output pixels. k0 is the first output channel of the
// block; channels >= shape.out_channels and pixels outside P x Q are dropped.
// wide_stage stages the m=6 inverse transform in double (its weights reach
// 32, so this is where packed-operand rounding gets amplified); m=2 ignores it.
void transform_output_block(const float* gemm_out, const PackedGemmOutLayout& layout,
                            const ConvShape& shape, const WinogradConfig& cfg,
                            int64_t k0, bool wide_stage, Tensor& output);

// Double-panel variant for the wide accumulation path; the inverse transform
// always stages in double here since the panel already is.
void transform_output_block(const double* gemm_out, const PackedGemmOutLayout& layout,
                            const ConvShape& shape, const WinogradConfig& cfg,
                            int64_t k0, Tensor& output);

}  // namespace wino
