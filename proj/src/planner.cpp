#include "wino/planner.hpp"

#include <stdexcept>

#include "wino/tensor.hpp"

namespace wino {

namespace {
constexpr int64_t kChanStep = 16;
}

OverheadEstimate overhead(int64_t tiles, int64_t k, int64_t l, int64_t c,
                          int64_t tile_blk, int64_t c_blk, int64_t k_blk,
                          const MicroKernelShape& mk, const CacheModel& cache) {
  const double base = double(tiles) * double(k) * double(l) * double(c);
  const double e = mk.cols;
  OverheadEstimate o;
  o.input = base * ((1.0 / e) * (1.0 / cache.bw_l1 + 1.0 / cache.bw_l2) +
                    1.0 / (e * double(k_blk)) / cache.bw_mem);
  o.filter = base * (1.0 / double(tile_blk)) *
             (1.0 / cache.bw_l1 + 1.0 / cache.bw_l2 + 1.0 / cache.bw_mem);
  o.output = base * ((1.0 / double(c_blk)) / cache.bw_l1 +
                     (1.0 / double(c)) * (1.0 / cache.bw_l2 + 1.0 / cache.bw_mem));
  return o;
}

bool blocks_fit_cache(int64_t tile_blk, int64_t c_blk, int64_t k_blk,
                      const MicroKernelShape& mk, const CacheModel& cache) {
  const double l2_need =
      double(tile_blk) * k_blk + 2.0 * (double(tile_blk) * c_blk + double(c_blk) * k_blk);
  const double l1_need =
      double(tile_blk) * k_blk + 2.0 * mk.rows * c_blk + double(c_blk) * mk.cols;
  return l2_need < cache.l2_elems * cache.fill_factor &&
         l1_need < cache.l1_elems * cache.fill_factor;
}

BlockPlan plan_blocks(int64_t tiles, int64_t c, int64_t k, int tile_area,
                      const MicroKernelShape& mk, const CacheModel& cache) {
  if (c % kChanStep != 0 || k % kChanStep != 0)
    throw std::invalid_argument("channel dims must be padded to 16");
  BlockPlan best;
  best.kernel = mk;
  best.tile_total = tiles;
  best.c_total = c;
  best.k_total = k;
  bool found = false;

  const int64_t tb_max = ceil_div(tiles, mk.rows);
  for (int64_t tb = 1; tb <= tb_max; ++tb) {
    const int64_t tile_blk = tb * mk.rows;
    for (int64_t k_blk = kChanStep; k_blk <= k; k_blk += kChanStep) {
      for (int64_t c_blk = kChanStep; c_blk <= c; c_blk += kChanStep) {
        if (!blocks_fit_cache(tile_blk, c_blk, k_blk, mk, cache)) continue;
        const OverheadEstimate ov =
            overhead(tiles, k, tile_area, c, tile_blk, c_blk, k_blk, mk, cache);
        const bool better =
            !found || ov.total() < best.overhead.total() ||
            (ov.total() == best.overhead.total() &&
             (tile_blk > best.tile_blk ||
              (tile_blk == best.tile_blk &&
               (k_blk > best.k_blk ||
                (k_blk == best.k_blk && c_blk > best.c_blk)))));
        if (better) {
          best.tile_blk = tile_blk;
          best.c_blk = c_blk;
          best.k_blk = k_blk;
          best.overhead = ov;
          found = true;
        }
      }
    }
  }
  if (!found) {
    best.tile_blk = mk.rows;
    best.c_blk = kChanStep;
    best.k_blk = kChanStep;
    best.overhead = overhead(tiles, k, tile_area, c, best.tile_blk, best.c_blk,
                             best.k_blk, mk, cache);
    best.feasible = false;
  }
  return best;
}

BlockPlan plan(const ConvShape& shape, const WinogradConfig& cfg,
               const CacheModel& cache) {
  const int64_t c = round_up(shape.in_channels, kChanStep);
  const int64_t k = round_up(shape.out_channels, kChanStep);
  const MicroKernelShape mk = select_kernel(cfg.tile_count, c, k);
  return plan_blocks(cfg.tile_count, c, k, cfg.tile_area, mk, cache);
}

}  // namespace wino
