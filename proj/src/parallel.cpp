#include "wino/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <chrono>
#include <exception>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "wino/gemm.hpp"

namespace wino {

const char* mode_name(ParallelMode m) {
  switch (m) {
    case ParallelMode::OnlyT: return "only-t";
    case ParallelMode::MultiDim: return "multi";
    case ParallelMode::OnlyCK: return "only-ck";
  }
  return "?";
}

std::optional<ParallelMode> parse_mode(const std::string& name) {
  if (name == "only-t") return ParallelMode::OnlyT;
  if (name == "multi") return ParallelMode::MultiDim;
  if (name == "only-ck") return ParallelMode::OnlyCK;
  return std::nullopt;
}

std::vector<TraceEvent> TraceLog::merged() const {
  std::vector<TraceEvent> all;
  for (const auto& w : per_worker) all.insert(all.end(), w.begin(), w.end());
  return all;
}

ParallelPlan make_parallel_plan(const WinogradConfig& cfg, const BlockPlan& bp,
                                int threads, ParallelMode mode,
                                const ModePolicy& policy) {
  (void)cfg;
  (void)policy;
  const int64_t full_tb = bp.tile_total / bp.tile_blk;
  const int64_t n_tb = ceil_div(bp.tile_total, bp.tile_blk);
  const int64_t n_cb = ceil_div(bp.c_total, bp.c_blk);
  const int64_t n_kb = ceil_div(bp.k_total, bp.k_blk);

  ParallelPlan pp;
  pp.mode = mode;
  pp.requested_threads = threads;
  switch (mode) {
    case ParallelMode::OnlyT:
      pp.max_threads = std::max<int64_t>(1, full_tb);
      pp.subtask_count = n_tb;
      break;
    case ParallelMode::MultiDim:
      pp.subtask_count = n_tb * (n_cb + n_kb);
      pp.max_threads = ceil_div(pp.subtask_count, 2);
      break;
    case ParallelMode::OnlyCK:
      pp.subtask_count = n_cb + n_kb;
      pp.max_threads = std::max<int64_t>(1, std::min(n_cb, n_kb));
      break;
  }
  return pp;
}

ParallelPlan choose_mode(const WinogradConfig& cfg, const BlockPlan& bp, int threads,
                         const ModePolicy& policy) {
  const int64_t full_tb = bp.tile_total / bp.tile_blk;
  ParallelMode mode;
  if (full_tb < policy.min_tile_blocks)
    mode = ParallelMode::OnlyCK;
  else if (full_tb >= threads &&
           std::min(bp.c_total, bp.k_total) <= policy.shallow_channel_max)
    mode = ParallelMode::OnlyT;
  else
    mode = ParallelMode::MultiDim;
  return make_parallel_plan(cfg, bp, threads, mode, policy);
}

namespace {

inline int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct BlockCtx {
  TileBlockShape block;
  PackedInputLayout in_ly;
};

BlockCtx make_block(const FusedCall& c, int64_t bt) {
  const int64_t t0 = bt * c.bp->tile_blk;
  const int64_t tiles = std::min(c.bp->tile_blk, c.bp->tile_total - t0);
  BlockCtx x;
  x.block = make_tile_block(t0, tiles, c.bp->kernel.rows);
  x.in_ly.tile_area = c.cfg->tile_area;
  x.in_ly.c_total = c.bp->c_total;
  x.in_ly.c_blk = c.bp->c_blk;
  x.in_ly.theta = c.cfg->theta;
  x.in_ly.block = x.block;
  return x;
}

void do_input_slice(const FusedCall& c, const BlockCtx& x, int64_t cb, float* trans_in) {
  transform_input_block(*c.input, *c.shape, *c.cfg, x.in_ly, cb,
                        c.bp->wide_transform, trans_in, c.stats);
}

// The gemm scratch is sized in floats; the wide path reinterprets it as
// doubles (allocation sites reserve twice the elements), so partials never
// round through float between channel blocks.
void do_k_pipeline(const FusedCall& c, const BlockCtx& x, int64_t kb,
                   const float* trans_in, float* gemm_out, Tensor& out) {
  PackedGemmOutLayout oly;
  oly.tile_area = c.cfg->tile_area;
  oly.k_len = c.fil_layout->k_len(kb);
  oly.eta = c.bp->kernel.cols;
  oly.theta = c.cfg->theta;
  oly.block = x.block;
  const int64_t ncb = x.in_ly.n_cblocks();
  if (c.bp->kernel.acc_wide) {
    double* wide = reinterpret_cast<double*>(gemm_out);
    for (int l = 0; l < c.cfg->tile_area; ++l)
      for (int64_t cb = 0; cb < ncb; ++cb)
        block_gemm(trans_in, x.in_ly, c.packed_filter, *c.fil_layout, l, cb, kb,
                   c.bp->kernel, wide, oly, cb == 0, c.stats, nullptr);
    transform_output_block(wide, oly, *c.shape, *c.cfg, kb * c.bp->k_blk, out);
    return;
  }
  for (int l = 0; l < c.cfg->tile_area; ++l)
    for (int64_t cb = 0; cb < ncb; ++cb)
      block_gemm(trans_in, x.in_ly, c.packed_filter, *c.fil_layout, l, cb, kb,
                 c.bp->kernel, gemm_out, oly, cb == 0, c.stats, nullptr);
  transform_output_block(gemm_out, oly, *c.shape, *c.cfg, kb * c.bp->k_blk,
                         c.bp->wide_transform, out);
}

inline void record(TraceLog* trace, int worker, TaskKind kind, int64_t id,
                   int64_t t0, int64_t t1) {
  if (trace) trace->per_worker[static_cast<size_t>(worker)].push_back({id, kind, worker, t0, t1});
}

inline int64_t gout_floats(const FusedCall& c, int64_t tiles) {
  const int64_t elems = int64_t(c.cfg->tile_area) * tiles * c.bp->k_blk;
  return c.bp->kernel.acc_wide ? 2 * elems : elems;
}

void run_only_t(const FusedCall& c, int eff, Tensor& out) {
  const int64_t nblocks = ceil_div(c.bp->tile_total, c.bp->tile_blk);
  const int64_t tin_elems = int64_t(c.cfg->tile_area) * c.bp->tile_blk * c.bp->c_total;
  const int64_t gout_elems = gout_floats(c, c.bp->tile_blk);

#pragma omp parallel num_threads(eff)
  {
    const int w = omp_get_thread_num();
    AlignedBuf tin(tin_elems), gout(gout_elems);
    if (c.stats) {
      c.stats->workspace_elems += static_cast<uint64_t>(tin_elems + gout_elems);
      c.stats->workspace_workers += 1;
    }
#pragma omp for schedule(static)
    for (int64_t bt = 0; bt < nblocks; ++bt) {
      const int64_t t0 = now_ns();
      const BlockCtx x = make_block(c, bt);
      for (int64_t cb = 0; cb < x.in_ly.n_cblocks(); ++cb)
        do_input_slice(c, x, cb, tin.ptr);
      for (int64_t kb = 0; kb < c.fil_layout->n_kblocks(); ++kb)
        do_k_pipeline(c, x, kb, tin.ptr, gout.ptr, out);
      record(c.trace, w, TaskKind::TileBlock, bt, t0, now_ns());
    }
  }
}

void run_only_ck(const FusedCall& c, int eff, Tensor& out) {
  const BlockCtx x = make_block(c, 0);  // tile_blk == tile_total here
  const int64_t tin_elems = int64_t(c.cfg->tile_area) * x.block.tiles * c.bp->c_total;
  const int64_t gout_elems = gout_floats(c, x.block.tiles);
  AlignedBuf tin(tin_elems);
  if (c.stats) {
    c.stats->workspace_elems += static_cast<uint64_t>(tin_elems);
    c.stats->workspace_workers += 1;
  }
  const int64_t ncb = x.in_ly.n_cblocks();
  const int64_t nkb = c.fil_layout->n_kblocks();

#pragma omp parallel for num_threads(eff) schedule(static)
  for (int64_t cb = 0; cb < ncb; ++cb) {
    const int64_t t0 = now_ns();
    do_input_slice(c, x, cb, tin.ptr);
    record(c.trace, omp_get_thread_num(), TaskKind::InputSlice, cb, t0, now_ns());
  }

#pragma omp parallel num_threads(eff)
  {
    const int w = omp_get_thread_num();
    AlignedBuf gout(gout_elems);
    if (c.stats) c.stats->workspace_elems += static_cast<uint64_t>(gout_elems);
#pragma omp for schedule(static)
    for (int64_t kb = 0; kb < nkb; ++kb) {
      const int64_t t0 = now_ns();
      do_k_pipeline(c, x, kb, tin.ptr, gout.ptr, out);
      record(c.trace, w, TaskKind::GemmPipeline, kb, t0, now_ns());
    }
  }
}

// Array-backed MPMC queue: publishers reserve a slot with one fetch_add on
// tail and flip its ready flag; consumers reserve with one fetch_add on
// head and spin until their slot is published.
struct TaskQueue {
  std::unique_ptr<std::atomic<int>[]> ready;
  std::unique_ptr<int64_t[]> payload;
  std::atomic<int64_t> head{0}, tail{0};
  int64_t total;

  explicit TaskQueue(int64_t n) : total(n) {
    ready = std::make_unique<std::atomic<int>[]>(static_cast<size_t>(n));
    payload = std::make_unique<int64_t[]>(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) ready[i].store(0, std::memory_order_relaxed);
  }
  void push(int64_t p) {
    const int64_t i = tail.fetch_add(1, std::memory_order_relaxed);
    payload[i] = p;
    ready[i].store(1, std::memory_order_release);
  }
};

struct BlockSlot {
  AlignedBuf tin;
  BlockCtx ctx;
  std::atomic<int64_t> pending_c{0}, pending_k{0};
  int64_t bt = -1;
};

void run_multi_dim(const FusedCall& c, int eff, Tensor& out) {
  const int64_t nblocks = ceil_div(c.bp->tile_total, c.bp->tile_blk);
  const int64_t ncb = ceil_div(c.bp->c_total, c.bp->c_blk);
  const int64_t nkb = c.fil_layout->n_kblocks();
  const int64_t per_block = ncb + nkb;
  const int64_t total = nblocks * per_block;
  const int64_t window = std::min<int64_t>(eff, nblocks);
  const int64_t tin_elems = int64_t(c.cfg->tile_area) * c.bp->tile_blk * c.bp->c_total;
  const int64_t gout_elems = gout_floats(c, c.bp->tile_blk);

  TaskQueue q(total);
  std::vector<BlockSlot> slots(static_cast<size_t>(window));
  for (auto& s : slots) {
    s.tin = AlignedBuf(tin_elems);
    if (c.stats) {
      c.stats->workspace_elems += static_cast<uint64_t>(tin_elems);
    }
  }
  if (c.stats) c.stats->workspace_workers += static_cast<uint64_t>(eff);

  std::atomic<bool> failed{false};
  std::exception_ptr eptr;
  std::mutex emtx;

  auto activate = [&](int64_t bt) {
    BlockSlot& s = slots[static_cast<size_t>(bt % window)];
    s.bt = bt;
    s.ctx = make_block(c, bt);
    s.pending_c.store(ncb, std::memory_order_relaxed);
    s.pending_k.store(nkb, std::memory_order_relaxed);
    for (int64_t cb = 0; cb < ncb; ++cb) q.push(bt * per_block + cb);
  };
  for (int64_t bt = 0; bt < window; ++bt) activate(bt);

  auto body = [&](int w) {
    AlignedBuf gout(gout_elems);
    if (c.stats) c.stats->workspace_elems += static_cast<uint64_t>(gout_elems);
    for (;;) {
      const int64_t i = q.head.fetch_add(1, std::memory_order_relaxed);
      if (i >= total) return;
      if (c.stats) c.stats->tasks_claimed.fetch_add(1, std::memory_order_relaxed);
      int spins = 0;
      while (!q.ready[i].load(std::memory_order_acquire)) {
        if (failed.load(std::memory_order_relaxed)) return;
        if (++spins > 64) std::this_thread::yield();
      }
      const int64_t p = q.payload[i];
      try {
        if (p == c.fail_task_for_testing)
          throw std::runtime_error("injected task failure");
        const int64_t bt = p / per_block;
        const int64_t idx = p % per_block;
        BlockSlot& s = slots[static_cast<size_t>(bt % window)];
        const int64_t t0 = now_ns();
        if (idx < ncb) {
          do_input_slice(c, s.ctx, idx, s.tin.ptr);
          record(c.trace, w, TaskKind::InputSlice, p, t0, now_ns());
          if (s.pending_c.fetch_sub(1, std::memory_order_acq_rel) == 1)
            for (int64_t kb = 0; kb < nkb; ++kb) q.push(bt * per_block + ncb + kb);
        } else {
          do_k_pipeline(c, s.ctx, idx - ncb, s.tin.ptr, gout.ptr, out);
          record(c.trace, w, TaskKind::GemmPipeline, p, t0, now_ns());
          if (s.pending_k.fetch_sub(1, std::memory_order_acq_rel) == 1) {
            const int64_t nb = bt + window;
            if (nb < nblocks) activate(nb);
          }
        }
      } catch (...) {
        {
          std::lock_guard<std::mutex> lk(emtx);
          if (!eptr) eptr = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(eff - 1));
  for (int w = 1; w < eff; ++w) pool.emplace_back(body, w);
  body(0);
  for (auto& t : pool) t.join();
  if (eptr) std::rethrow_exception(eptr);
}

}  // namespace

void run_fused(const FusedCall& call, const ParallelPlan& pp, Tensor& out) {
  const int eff = pp.effective_threads();
  if (call.trace && call.trace->per_worker.size() < static_cast<size_t>(eff))
    call.trace->reset(eff);
  switch (pp.mode) {
    case ParallelMode::OnlyT: run_only_t(call, eff, out); break;
    case ParallelMode::MultiDim: run_multi_dim(call, eff, out); break;
    case ParallelMode::OnlyCK: run_only_ck(call, eff, out); break;
  }
}

AlignedBuf parallel_filter_transform(const Tensor& filter, const ConvShape& shape,
                                     const WinogradConfig& cfg,
                                     const PackedFilterLayout& layout, int workers,
                                     TraceLog* trace) {
  AlignedBuf buf(layout.size());
  const int64_t nkb = layout.n_kblocks(), ncb = layout.n_cblocks();
  const int w = std::max(1, workers);
  if (trace && trace->per_worker.size() < static_cast<size_t>(w)) trace->reset(w);

#pragma omp parallel for collapse(2) num_threads(w) schedule(static)
  for (int64_t kb = 0; kb < nkb; ++kb)
    for (int64_t cb = 0; cb < ncb; ++cb) {
      const int64_t t0 = now_ns();
      transform_filter_block(filter, shape, cfg, layout, kb, cb, buf.ptr);
      record(trace, omp_get_thread_num(), TaskKind::FilterBlock, kb * ncb + cb, t0,
             now_ns());
    }
  return buf;
}

}  // namespace wino
