#include "wino/gemm.hpp"

#include <algorithm>
#include <stdexcept>
#include <type_traits>

namespace wino {

namespace {

constexpr int kTheta = 4;
constexpr int kRegisterBudget = 32;
constexpr int kMaxPairDepth = 6;

inline void load_span(float* dst, const float* src, int64_t off, int n,
                      std::vector<int64_t>* reads) {
  if (reads)
    for (int i = 0; i < n; ++i) reads->push_back(off + i);
  for (int i = 0; i < n; ++i) dst[i] = src[off + i];
}

// R tile rows by E channels, double-buffered operand staging: the next
// theta-group of v and of u is loaded before the current one is consumed.
// Each theta-group contributes through a 4-term product tree; group
// contributions merge pairwise up to `depth` levels (a binary counter of
// pending partials) before joining the running sum, so the accumulator
// chain grows with c_len / (4 * 2^depth). The grouping depends only on the
// channel index, keeping results bit-identical however the panels are split
// across tasks.
template <int R, int E, typename A, typename BufT>
void kernel_impl(const float* v, const float* u, int64_t c_len, int depth,
                 BufT* acc, bool overwrite, RunStats* stats, PanelTrace* trace) {
  A sum[R][E] = {};
  A pending[kMaxPairDepth][R][E];
  float vg[2][R * kTheta];
  float ug[2][kTheta * E];
  std::vector<int64_t>* vr = trace ? &trace->v_reads : nullptr;
  std::vector<int64_t>* urd = trace ? &trace->u_reads : nullptr;

  const int64_t groups = c_len / kTheta;
  load_span(vg[0], v, 0, R * kTheta, vr);
  load_span(ug[0], u, 0, kTheta * E, urd);

  A t[R][E];
  for (int64_t g = 0; g < groups; ++g) {
    if (g + 1 < groups) {
      load_span(vg[(g + 1) & 1], v, (g + 1) * R * kTheta, R * kTheta, vr);
      load_span(ug[(g + 1) & 1], u, (g + 1) * kTheta * E, kTheta * E, urd);
    }
    const float* vc = vg[g & 1];
    const float* uc = ug[g & 1];
    for (int r = 0; r < R; ++r) {
      const A x0 = vc[r * kTheta + 0], x1 = vc[r * kTheta + 1];
      const A x2 = vc[r * kTheta + 2], x3 = vc[r * kTheta + 3];
      for (int e = 0; e < E; ++e)
        t[r][e] = (x0 * A(uc[0 * E + e]) + x1 * A(uc[1 * E + e])) +
                  (x2 * A(uc[2 * E + e]) + x3 * A(uc[3 * E + e]));
    }
    int lvl = 0;
    for (; lvl < depth && (g >> lvl) & 1; ++lvl)
      for (int r = 0; r < R; ++r)
        for (int e = 0; e < E; ++e) t[r][e] += pending[lvl][r][e];
    if (lvl == depth) {
      for (int r = 0; r < R; ++r)
        for (int e = 0; e < E; ++e) sum[r][e] += t[r][e];
    } else {
      for (int r = 0; r < R; ++r)
        for (int e = 0; e < E; ++e) pending[lvl][r][e] = t[r][e];
    }
  }
  for (int lvl = 0; lvl < depth; ++lvl)
    if ((groups >> lvl) & 1)
      for (int r = 0; r < R; ++r)
        for (int e = 0; e < E; ++e) sum[r][e] += pending[lvl][r][e];
  if (stats)
    stats->gemm_mults.fetch_add(static_cast<uint64_t>(R) * E * c_len,
                                std::memory_order_relaxed);

  for (int jg = 0; jg < E / kTheta; ++jg)
    for (int r = 0; r < R; ++r)
      for (int q = 0; q < kTheta; ++q) {
        const int64_t o = (int64_t(jg) * R + r) * kTheta + q;
        const BufT val = static_cast<BufT>(sum[r][jg * kTheta + q]);
        acc[o] = overwrite ? val : acc[o] + val;
      }
}

template <typename BufT>
using KernelFn = void (*)(const float*, const float*, int64_t, int, BufT*, bool,
                          RunStats*, PanelTrace*);

template <int E, typename A, typename BufT>
constexpr KernelFn<BufT> pick_rows(int rows) {
  switch (rows) {
    case 1: return kernel_impl<1, E, A, BufT>;
    case 2: return kernel_impl<2, E, A, BufT>;
    case 3: return kernel_impl<3, E, A, BufT>;
    case 4: return kernel_impl<4, E, A, BufT>;
    case 5: return kernel_impl<5, E, A, BufT>;
    case 6: return kernel_impl<6, E, A, BufT>;
    case 7: return kernel_impl<7, E, A, BufT>;
    default: return nullptr;
  }
}

}  // namespace

std::vector<MicroKernelShape> feasible_kernels() {
  std::vector<MicroKernelShape> out;
  for (int rows = 1; rows <= kRegisterBudget; ++rows)
    for (int cols = kTheta; ; cols += kTheta) {
      MicroKernelShape mk{rows, cols, kTheta};
      if (mk.register_use() > kRegisterBudget) break;
      out.push_back(mk);
    }
  std::sort(out.begin(), out.end(), [](const MicroKernelShape& a, const MicroKernelShape& b) {
    if (a.cmr() != b.cmr()) return a.cmr() > b.cmr();
    if (a.rows != b.rows) return a.rows > b.rows;
    return a.cols > b.cols;
  });
  return out;
}

MicroKernelShape select_kernel(int64_t tiles, int64_t c, int64_t k) {
  if (std::min(c, k) > tiles) return {4, 16, kTheta};
  return {7, 8, kTheta};
}

namespace {

template <typename BufT>
void micro_kernel_impl(const MicroKernelShape& mk, const float* v, const float* u,
                       int64_t c_len, BufT* acc, bool overwrite, RunStats* stats,
                       PanelTrace* trace) {
  if (c_len % kTheta != 0) throw std::invalid_argument("c_len must be a multiple of theta");
  if (mk.acc_pair_depth < 0 || mk.acc_pair_depth > kMaxPairDepth)
    throw std::invalid_argument("accumulator pair depth out of range");
  constexpr bool kWideBuf = std::is_same_v<BufT, double>;
  KernelFn<BufT> fn = nullptr;
  if (mk.cols == 8)
    fn = (mk.acc_wide || kWideBuf) ? pick_rows<8, double, BufT>(mk.rows)
                                   : pick_rows<8, float, BufT>(mk.rows);
  else if (mk.cols == 16)
    fn = (mk.acc_wide || kWideBuf) ? pick_rows<16, double, BufT>(mk.rows)
                                   : pick_rows<16, float, BufT>(mk.rows);
  if (!fn) throw std::invalid_argument("unsupported micro-kernel shape");
  fn(v, u, c_len, mk.acc_pair_depth, acc, overwrite, stats, trace);
}

template <typename BufT>
void block_gemm_impl(const float* packed_in, const PackedInputLayout& in_layout,
                     const float* packed_filter, const PackedFilterLayout& filter_layout,
                     int l, int64_t cb, int64_t kb, const MicroKernelShape& mk,
                     BufT* gemm_out, const PackedGemmOutLayout& out_layout,
                     bool first_c_block, RunStats* stats, PanelTrace* trace) {
  const int64_t c_len = in_layout.c_len(cb);
  const int64_t k_len = filter_layout.k_len(kb);
  const int E = mk.cols;
  for (int64_t kg = 0; kg < k_len / E; ++kg) {
    const float* u = packed_filter + filter_layout.panel(kb, l, cb, kg);
    for (size_t gi = 0; gi < in_layout.block.groups.size(); ++gi) {
      const float* v = packed_in + in_layout.panel(l, cb, gi);
      BufT* acc = gemm_out + out_layout.panel(l, kg, gi);
      MicroKernelShape g = mk;
      g.rows = in_layout.block.groups[gi].rows;
      micro_kernel_impl(g, v, u, c_len, acc, first_c_block, stats, trace);
    }
  }
}

}  // namespace

void micro_kernel(const MicroKernelShape& mk, const float* v, const float* u,
                  int64_t c_len, float* acc, bool overwrite, RunStats* stats,
                  PanelTrace* trace) {
  micro_kernel_impl(mk, v, u, c_len, acc, overwrite, stats, trace);
}

void micro_kernel(const MicroKernelShape& mk, const float* v, const float* u,
                  int64_t c_len, double* acc, bool overwrite, RunStats* stats,
                  PanelTrace* trace) {
  micro_kernel_impl(mk, v, u, c_len, acc, overwrite, stats, trace);
}

void block_gemm(const float* packed_in, const PackedInputLayout& in_layout,
                const float* packed_filter, const PackedFilterLayout& filter_layout,
                int l, int64_t cb, int64_t kb, const MicroKernelShape& mk,
                float* gemm_out, const PackedGemmOutLayout& out_layout,
                bool first_c_block, RunStats* stats, PanelTrace* trace) {
  block_gemm_impl(packed_in, in_layout, packed_filter, filter_layout, l, cb, kb, mk,
                  gemm_out, out_layout, first_c_block, stats, trace);
}

void block_gemm(const float* packed_in, const PackedInputLayout& in_layout,
                const float* packed_filter, const PackedFilterLayout& filter_layout,
                int l, int64_t cb, int64_t kb, const MicroKernelShape& mk,
                double* gemm_out, const PackedGemmOutLayout& out_layout,
                bool first_c_block, RunStats* stats, PanelTrace* trace) {
  block_gemm_impl(packed_in, in_layout, packed_filter, filter_layout, l, cb, kb, mk,
                  gemm_out, out_layout, first_c_block, stats, trace);
}

}  // namespace wino
