#include "wino/transform.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace wino {

namespace {

constexpr int kTheta = 4;

constexpr float kBt2[4 * 4] = {
    1, 0, -1, 0,
    0, 1, 1,  0,
    0, -1, 1, 0,
    0, -1, 0, 1,
};
constexpr float kG2[4 * 3] = {
    1,    0,    0,
    0.5f, 0.5f, 0.5f,
    0.5f, -0.5f, 0.5f,
    0,    0,    -1,
};
constexpr float kAt2[2 * 4] = {
    1, 1, 1,  0,
    0, 1, -1, -1,
};

constexpr float kBt6[8 * 8] = {
    1, 0,    -5.25f, 0,     5.25f,  0,     -1, 0,
    0, 1,    1,      -4.25f, -4.25f, 1,     1,  0,
    0, -1,   1,      4.25f,  -4.25f, -1,    1,  0,
    0, 0.5f, 0.25f,  -2.5f,  -1.25f, 2,     1,  0,
    0, -0.5f, 0.25f, 2.5f,   -1.25f, -2,    1,  0,
    0, 2,    4,      -2.5f,  -5,     0.5f,  1,  0,
    0, -2,   4,      2.5f,   -5,     -0.5f, 1,  0,
    0, -1,   0,      5.25f,  0,      -5.25f, 0, 1,
};
constexpr float kG6[8 * 3] = {
    1,            0,             0,
    -2.f / 9.f,   -2.f / 9.f,    -2.f / 9.f,
    -2.f / 9.f,   2.f / 9.f,     -2.f / 9.f,
    1.f / 90.f,   1.f / 45.f,    2.f / 45.f,
    1.f / 90.f,   -1.f / 45.f,   2.f / 45.f,
    1.f / 45.f,   1.f / 90.f,    1.f / 180.f,
    1.f / 45.f,   -1.f / 90.f,   1.f / 180.f,
    0,            0,             1,
};
constexpr float kAt6[6 * 8] = {
    1, 1, 1,  1, 1,  32, 32,  0,
    0, 1, -1, 2, -2, 16, -16, 0,
    0, 1, 1,  4, 4,  8,  8,   0,
    0, 1, -1, 8, -8, 4,  -4,  0,
    0, 1, 1,  16, 16, 2, 2,   0,
    0, 1, -1, 32, -32, 1, -1, 1,
};

// Factored 8-point transform; the five scaled terms f2..f7 are shared
// between the +/- output pairs. All coefficients are exact binary
// fractions, so the float and double instantiations share them.
template <int LANES, typename T>
inline void row_transform63(const T* in, T* out) {
  for (int q = 0; q < LANES; ++q) {
    const T d0 = in[0 * LANES + q], d1 = in[1 * LANES + q];
    const T d2 = in[2 * LANES + q], d3 = in[3 * LANES + q];
    const T d4 = in[4 * LANES + q], d5 = in[5 * LANES + q];
    const T d6 = in[6 * LANES + q], d7 = in[7 * LANES + q];
    const T f0 = d2 + d6 - T(4.25) * d4;
    const T f1 = d1 + d5 - T(4.25) * d3;
    const T f2 = T(1.25) * d4;
    const T f3 = T(2.5) * d3;
    const T f4 = T(0.25) * d2 - f2 + d6;
    const T f5 = T(0.5) * d1 - f3 + T(2) * d5;
    const T f6 = T(4) * (d2 - f2) + d6;
    const T f7 = T(2) * d1 - f3 + T(0.5) * d5;
    out[0 * LANES + q] = d0 + T(5.25) * (d4 - d2) - d6;
    out[1 * LANES + q] = f0 + f1;
    out[2 * LANES + q] = f0 - f1;
    out[3 * LANES + q] = f4 + f5;
    out[4 * LANES + q] = f4 - f5;
    out[5 * LANES + q] = f6 + f7;
    out[6 * LANES + q] = f6 - f7;
    out[7 * LANES + q] = T(5.25) * (d3 - d5) - d1 + d7;
  }
}

// Gathers one 4-row tile column for kTheta channel lanes, zero-filling
// outside the image and beyond the last real channel.
inline void gather_col4(const float* base, int64_t H, int64_t W, int64_t cstride,
                        int cv, int64_t r0, int64_t col, float* dst) {
  const bool col_in = col >= 0 && col < W;
  for (int i = 0; i < 4; ++i) {
    const int64_t r = r0 + i;
    float* d = dst + i * kTheta;
    if (col_in && r >= 0 && r < H) {
      const float* s = base + r * W + col;
      int q = 0;
      for (; q < cv; ++q) d[q] = s[q * cstride];
      for (; q < kTheta; ++q) d[q] = 0.0f;
    } else {
      for (int q = 0; q < kTheta; ++q) d[q] = 0.0f;
    }
  }
}

// d holds physical columns; pb maps logical column 0 onto a physical slot so
// a window shifted by 2 keeps its overlap columns in place.
inline void tile_transform_m2(const float d[4][4][kTheta], int pb,
                              float out[16][kTheta]) {
  float w[4][4][kTheta];
  for (int j = 0; j < 4; ++j) {
    const float* c = d[(pb + j) & 3][0];
    for (int q = 0; q < kTheta; ++q) {
      const float r0 = c[0 * kTheta + q], r1 = c[1 * kTheta + q];
      const float r2 = c[2 * kTheta + q], r3 = c[3 * kTheta + q];
      w[0][j][q] = r0 - r2;
      w[1][j][q] = r1 + r2;
      w[2][j][q] = r2 - r1;
      w[3][j][q] = r3 - r1;
    }
  }
  for (int i = 0; i < 4; ++i) {
    for (int q = 0; q < kTheta; ++q) {
      const float c0 = w[i][0][q], c1 = w[i][1][q];
      const float c2 = w[i][2][q], c3 = w[i][3][q];
      out[i * 4 + 0][q] = c0 - c2;
      out[i * 4 + 1][q] = c1 + c2;
      out[i * 4 + 2][q] = c2 - c1;
      out[i * 4 + 3][q] = c3 - c1;
    }
  }
}

void input_block_m2(const Tensor& input, const ConvShape& shape,
                    const WinogradConfig& cfg, const PackedInputLayout& layout,
                    int64_t cb, float* out, RunStats* stats) {
  const int64_t C = shape.in_channels, H = shape.height, W = shape.width;
  const int64_t c_first = cb * layout.c_blk;
  const int64_t c_len = layout.c_len(cb);
  const int64_t cstride = H * W;
  const int64_t ls = layout.l_stride();
  uint64_t pos = 0, full = 0, reused = 0;

  for (int64_t cg = 0; cg < c_len / kTheta; ++cg) {
    const int64_t c0 = c_first + cg * kTheta;
    const int cv = static_cast<int>(std::clamp<int64_t>(C - c0, 0, kTheta));
    float d[4][4][kTheta];
    int pb = 0;
    int64_t prev_b = -1, prev_row = 0, prev_col = 0;
    bool have = false;

    for (size_t gi = 0; gi < layout.block.groups.size(); ++gi) {
      const TileGroup& g = layout.block.groups[gi];
      const int64_t pbase = layout.panel(0, cb, gi);
      for (int ti = 0; ti < g.rows; ++ti) {
        float* dst = out + pbase + (cg * g.rows + ti) * kTheta;
        if (cv == 0) {
          for (int l = 0; l < 16; ++l)
            std::memset(dst + l * ls, 0, kTheta * sizeof(float));
          continue;
        }
        const TileOrigin o = tile_origin(cfg, g.tile0 + ti);
        const float* base = input.data.data() + (o.batch * C + c0) * cstride;
        if (have && o.batch == prev_b && o.row == prev_row && o.col == prev_col + 2) {
          pb = (pb + 2) & 3;
          gather_col4(base, H, W, cstride, cv, o.row, o.col + 2, d[(pb + 2) & 3][0]);
          gather_col4(base, H, W, cstride, cv, o.row, o.col + 3, d[(pb + 3) & 3][0]);
          pos += 8;
          ++reused;
        } else {
          pb = 0;
          for (int j = 0; j < 4; ++j)
            gather_col4(base, H, W, cstride, cv, o.row, o.col + j, d[j][0]);
          pos += 16;
          ++full;
        }
        prev_b = o.batch;
        prev_row = o.row;
        prev_col = o.col;
        have = true;

        float v[16][kTheta];
        tile_transform_m2(d, pb, v);
        for (int l = 0; l < 16; ++l) {
          float* p = dst + l * ls;
          for (int q = 0; q < kTheta; ++q) p[q] = v[l][q];
        }
      }
    }
  }
  if (stats) {
    stats->input_positions += pos;
    stats->input_tiles_full += full;
    stats->input_tiles_reused += reused;
  }
}

// T=double stages the two passes in double and rounds once on store, for
// configurations whose accumulation depth would otherwise surface the
// transform rounding in the result.
template <typename T>
void input_block_m6(const Tensor& input, const ConvShape& shape,
                    const WinogradConfig& cfg, const PackedInputLayout& layout,
                    int64_t cb, float* out) {
  constexpr int kChunk = 8;  // channels carried through one two-pass transform
  const int64_t C = shape.in_channels, H = shape.height, W = shape.width;
  const int64_t c_first = cb * layout.c_blk;
  const int64_t c_len = layout.c_len(cb);
  const int64_t cstride = H * W;
  const int64_t ls = layout.l_stride();

  for (size_t gi = 0; gi < layout.block.groups.size(); ++gi) {
    const TileGroup& g = layout.block.groups[gi];
    const int64_t pbase = layout.panel(0, cb, gi);
    for (int ti = 0; ti < g.rows; ++ti) {
      const TileOrigin o = tile_origin(cfg, g.tile0 + ti);
      for (int64_t ch0 = 0; ch0 < c_len; ch0 += kChunk) {
        const int cw = static_cast<int>(std::min<int64_t>(kChunk, c_len - ch0));
        const int64_t c0 = c_first + ch0;
        const int cv = static_cast<int>(std::clamp<int64_t>(C - c0, 0, cw));

        T dbuf[8][8][kChunk];
        if (cv > 0) {
          const float* base = input.data.data() + (o.batch * C + c0) * cstride;
          for (int i = 0; i < 8; ++i) {
            const int64_t r = o.row + i;
            const bool rin = r >= 0 && r < H;
            for (int j = 0; j < 8; ++j) {
              const int64_t w = o.col + j;
              T* dp = dbuf[i][j];
              if (rin && w >= 0 && w < W) {
                const float* s = base + r * W + w;
                int q = 0;
                for (; q < cv; ++q) dp[q] = s[q * cstride];
                for (; q < kChunk; ++q) dp[q] = T(0);
              } else {
                for (int q = 0; q < kChunk; ++q) dp[q] = T(0);
              }
            }
          }
        } else {
          std::memset(dbuf, 0, sizeof(dbuf));
        }

        T t1[8][8][kChunk], v2[8][kChunk];
        row_transform63<8 * kChunk>(&dbuf[0][0][0], &t1[0][0][0]);
        for (int f = 0; f < 8; ++f) {
          row_transform63<kChunk>(&t1[f][0][0], &v2[0][0]);
          for (int e = 0; e < 8; ++e) {
            float* p = out + pbase + ls * (f * 8 + e);
            for (int q = 0; q < cw; ++q) {
              const int64_t ci = ch0 + q;
              p[((ci / kTheta) * g.rows + ti) * kTheta + ci % kTheta] =
                  static_cast<float>(v2[e][q]);
            }
          }
        }
      }
    }
  }
}

}  // namespace

const TransformSet& transform_set(int m) {
  static const TransformSet t2 = [] {
    TransformSet t;
    t.m = 2;
    t.edge = 4;
    t.bt.assign(kBt2, kBt2 + 16);
    t.g_mat.assign(kG2, kG2 + 12);
    t.at.assign(kAt2, kAt2 + 8);
    return t;
  }();
  static const TransformSet t6 = [] {
    TransformSet t;
    t.m = 6;
    t.edge = 8;
    t.bt.assign(kBt6, kBt6 + 64);
    t.g_mat.assign(kG6, kG6 + 24);
    t.at.assign(kAt6, kAt6 + 48);
    return t;
  }();
  if (m == 2) return t2;
  if (m == 6) return t6;
  throw std::invalid_argument("tile size m must be 2 or 6");
}

void f63_row_transform(const float* in8, float* out8) {
  row_transform63<1>(in8, out8);
}

TileBlockShape make_tile_block(int64_t tile0, int64_t tiles, int rows) {
  if (tiles < 1 || rows < 1) throw std::invalid_argument("empty tile block");
  TileBlockShape b;
  b.tile0 = tile0;
  b.tiles = tiles;
  b.rows = rows;
  int64_t slot = 0;
  while (slot < tiles) {
    const int r = static_cast<int>(std::min<int64_t>(rows, tiles - slot));
    b.groups.push_back({tile0 + slot, r, slot});
    slot += r;
  }
  return b;
}

void transform_input_block(const Tensor& input, const ConvShape& shape,
                           const WinogradConfig& cfg, const PackedInputLayout& layout,
                           int64_t cb, bool wide_stage, float* out, RunStats* stats) {
  if (cfg.m == 2)
    input_block_m2(input, shape, cfg, layout, cb, out, stats);
  else if (wide_stage)
    input_block_m6<double>(input, shape, cfg, layout, cb, out);
  else
    input_block_m6<float>(input, shape, cfg, layout, cb, out);
}

void transform_filter_block(const Tensor& filter, const ConvShape& shape,
                            const WinogradConfig& cfg, const PackedFilterLayout& layout,
                            int64_t kb, int64_t cb, float* out) {
  const float* G = cfg.m == 2 ? kG2 : kG6;
  const int edge = cfg.tile_edge;
  const int64_t K = shape.out_channels, C = shape.in_channels;
  const int64_t k_first = kb * layout.k_blk, k_len = layout.k_len(kb);
  const int64_t c_first = cb * layout.c_blk, c_len = layout.c_len(cb);
  const int eta = layout.eta;

  for (int64_t kg4 = 0; kg4 < k_len; kg4 += kTheta) {
    const int64_t kg = kg4 / eta;
    for (int64_t ci = 0; ci < c_len; ++ci) {
      const int64_t c = c_first + ci;
      const int lanes = static_cast<int>(std::min<int64_t>(kTheta, k_len - kg4));
      for (int lane = 0; lane < lanes; ++lane) {
        const int64_t k = k_first + kg4 + lane;
        const int64_t base0 =
            layout.panel(kb, 0, cb, kg) + ci * eta + (kg4 + lane) % eta;
        const int64_t lstride = layout.c_total * k_len;
        if (k >= K || c >= C) {
          for (int l = 0; l < edge * edge; ++l) out[base0 + l * lstride] = 0.0f;
          continue;
        }
        // staged in double so the stored coefficients round once
        double g3[3][3];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) g3[i][j] = filter.at4(k, c, i, j);
        double tmp[8][3];
        for (int a = 0; a < edge; ++a)
          for (int j = 0; j < 3; ++j)
            tmp[a][j] = G[a * 3 + 0] * g3[0][j] + G[a * 3 + 1] * g3[1][j] +
                        G[a * 3 + 2] * g3[2][j];
        for (int a = 0; a < edge; ++a)
          for (int b = 0; b < edge; ++b) {
            const double u = tmp[a][0] * G[b * 3 + 0] + tmp[a][1] * G[b * 3 + 1] +
                             tmp[a][2] * G[b * 3 + 2];
            out[base0 + (a * edge + b) * lstride] = static_cast<float>(u);
          }
      }
    }
  }
}

namespace {

template <int M, int E, typename T, typename SrcT>
void output_block_impl(const SrcT* gemm_out, const PackedGemmOutLayout& layout,
                       const ConvShape& shape, const WinogradConfig& cfg,
                       const float* at, int64_t k0, Tensor& output) {
  const int64_t P = shape.out_h(), Q = shape.out_w(), K = shape.out_channels;
  const int64_t ls = layout.l_stride();

  for (size_t gi = 0; gi < layout.block.groups.size(); ++gi) {
    const TileGroup& g = layout.block.groups[gi];
    for (int ti = 0; ti < g.rows; ++ti) {
      const TileOrigin o = tile_origin(cfg, g.tile0 + ti);
      const int64_t py0 = o.row + cfg.pad, px0 = o.col + cfg.pad;
      for (int64_t kj = 0; kj < layout.k_len; kj += kTheta) {
        const int kv = static_cast<int>(
            std::clamp<int64_t>(K - (k0 + kj), 0, kTheta));
        if (kv == 0) break;
        const int64_t base = layout.panel(0, kj / layout.eta, gi) +
                             (((kj % layout.eta) / kTheta) * g.rows + ti) * kTheta;
        T ob[E][E][kTheta];
        for (int f = 0; f < E; ++f)
          for (int e = 0; e < E; ++e) {
            const SrcT* p = gemm_out + base + (f * E + e) * ls;
            for (int q = 0; q < kTheta; ++q) ob[f][e][q] = T(p[q]);
          }
        T tmp[M][E][kTheta];
        for (int a = 0; a < M; ++a)
          for (int e = 0; e < E; ++e)
            for (int q = 0; q < kTheta; ++q) {
              T acc = 0;
              for (int f = 0; f < E; ++f) acc += T(at[a * E + f]) * ob[f][e][q];
              tmp[a][e][q] = acc;
            }
        for (int a = 0; a < M; ++a) {
          const int64_t py = py0 + a;
          if (py < 0 || py >= P) continue;
          for (int b = 0; b < M; ++b) {
            const int64_t px = px0 + b;
            if (px < 0 || px >= Q) continue;
            float y[kTheta];
            for (int q = 0; q < kTheta; ++q) {
              T acc = 0;
              for (int e = 0; e < E; ++e) acc += T(at[b * E + e]) * tmp[a][e][q];
              y[q] = static_cast<float>(acc);
            }
            for (int q = 0; q < kv; ++q)
              output.at4(o.batch, k0 + kj + q, py, px) = y[q];
          }
        }
      }
    }
  }
}

}  // namespace

void transform_output_block(const float* gemm_out, const PackedGemmOutLayout& layout,
                            const ConvShape& shape, const WinogradConfig& cfg,
                            int64_t k0, bool wide_stage, Tensor& output) {
  if (cfg.m == 2)
    output_block_impl<2, 4, float>(gemm_out, layout, shape, cfg, kAt2, k0, output);
  else if (wide_stage)
    output_block_impl<6, 8, double>(gemm_out, layout, shape, cfg, kAt6, k0, output);
  else
    output_block_impl<6, 8, float>(gemm_out, layout, shape, cfg, kAt6, k0, output);
}

void transform_output_block(const double* gemm_out, const PackedGemmOutLayout& layout,
                            const ConvShape& shape, const WinogradConfig& cfg,
                            int64_t k0, Tensor& output) {
  if (cfg.m == 2)
    output_block_impl<2, 4, double>(gemm_out, layout, shape, cfg, kAt2, k0, output);
  else
    output_block_impl<6, 8, double>(gemm_out, layout, shape, cfg, kAt6, k0, output);
}

}  // namespace wino
