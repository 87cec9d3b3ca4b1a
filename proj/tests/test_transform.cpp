#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "wino/shape.hpp"
#include "wino/stats.hpp"
#include "wino/tensor.hpp"
#include "wino/transform.hpp"

using namespace wino;

namespace {

// dense double-precision tile transforms, the oracle everything here is
// checked against
std::vector<double> mat_mul(const std::vector<double>& a, int ra, int ca,
                            const std::vector<double>& b, int cb) {
  std::vector<double> r(size_t(ra) * cb, 0.0);
  for (int i = 0; i < ra; ++i)
    for (int j = 0; j < cb; ++j) {
      double s = 0.0;
      for (int t = 0; t < ca; ++t) s += a[size_t(i) * ca + t] * b[size_t(t) * cb + j];
      r[size_t(i) * cb + j] = s;
    }
  return r;
}

std::vector<double> to_double(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

std::vector<double> transpose(const std::vector<double>& a, int rows, int cols) {
  std::vector<double> r(a.size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r[size_t(j) * rows + i] = a[size_t(i) * cols + j];
  return r;
}

// V = bt * d * bt^T for one tile
std::vector<double> dense_input_tform(const TransformSet& ts,
                                      const std::vector<double>& d) {
  const int e = ts.edge;
  const auto bt = to_double(ts.bt);
  return mat_mul(mat_mul(bt, e, e, d, e), e, e, transpose(bt, e, e), e);
}

std::vector<double> dense_filter_tform(const TransformSet& ts,
                                       const std::vector<double>& g) {
  const int e = ts.edge;
  const auto gm = to_double(ts.g_mat);
  return mat_mul(mat_mul(gm, e, 3, g, 3), e, 3, transpose(gm, e, 3), e);
}

std::vector<double> dense_output_tform(const TransformSet& ts,
                                       const std::vector<double>& mhat) {
  const int e = ts.edge;
  const auto at = to_double(ts.at);
  return mat_mul(mat_mul(at, ts.m, e, mhat, e), ts.m, e, transpose(at, ts.m, e), ts.m);
}

std::vector<float> random_vec(size_t n, uint32_t seed) {
  std::vector<float> v(n);
  fill_uniform(v.data(), int64_t(n), seed);
  return v;
}

}  // namespace

TEST_CASE("transform matrix entries") {
  const TransformSet& t2 = transform_set(2);
  CHECK(t2.edge == 4);
  const float bt2_row0[] = {1, 0, -1, 0};
  const float bt2_row3[] = {0, -1, 0, 1};
  for (int j = 0; j < 4; ++j) {
    CHECK(t2.bt_at(0, j) == bt2_row0[j]);
    CHECK(t2.bt_at(3, j) == bt2_row3[j]);
  }
  CHECK(t2.g_at(1, 0) == 0.5f);
  CHECK(t2.g_at(1, 1) == 0.5f);
  CHECK(t2.g_at(3, 2) == -1.0f);
  CHECK(t2.at_at(0, 3) == 0.0f);
  CHECK(t2.at_at(1, 3) == -1.0f);

  const TransformSet& t6 = transform_set(6);
  CHECK(t6.edge == 8);
  const float bt6_row0[] = {1, 0, -5.25f, 0, 5.25f, 0, -1, 0};
  const float bt6_row7[] = {0, -1, 0, 5.25f, 0, -5.25f, 0, 1};
  for (int j = 0; j < 8; ++j) {
    CHECK(t6.bt_at(0, j) == bt6_row0[j]);
    CHECK(t6.bt_at(7, j) == bt6_row7[j]);
  }
  CHECK(t6.g_at(0, 0) == 1.0f);
  CHECK(t6.g_at(1, 0) == doctest::Approx(-2.0 / 9).epsilon(1e-7));
  CHECK(t6.g_at(7, 2) == 1.0f);
  const float at6_row5[] = {0, 1, -1, 32, -32, 1, -1, 1};
  for (int j = 0; j < 8; ++j) CHECK(t6.at_at(5, j) == at6_row5[j]);

  CHECK_THROWS(transform_set(4));
  CHECK_THROWS(transform_set(0));
}

TEST_CASE("matrix triple reproduces the 3x3 convolution") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int m : {2, 6}) {
    const TransformSet& ts = transform_set(m);
    const int e = ts.edge;
    for (int iter = 0; iter < 20; ++iter) {
      std::vector<double> d(size_t(e) * e), g(9);
      for (auto& x : d) x = dist(gen);
      for (auto& x : g) x = dist(gen);

      const auto v = dense_input_tform(ts, d);
      const auto u = dense_filter_tform(ts, g);
      std::vector<double> mhat(v.size());
      for (size_t i = 0; i < v.size(); ++i) mhat[i] = v[i] * u[i];
      const auto y = dense_output_tform(ts, mhat);

      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
          double ref = 0.0;
          for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s)
              ref += d[size_t(p + r) * e + q + s] * g[size_t(r) * 3 + s];
          REQUIRE(std::abs(y[size_t(p) * m + q] - ref) <= 1e-6 * (1.0 + std::abs(ref)));
        }
    }
  }
}

TEST_CASE("factored 8-point row transform matches the dense row product") {
  float in[8], out[8], want[8];
  const TransformSet& t6 = transform_set(6);

  std::memset(in, 0, sizeof in);
  f63_row_transform(in, out);
  for (float v : out) CHECK(v == 0.0f);

  in[0] = 1.0f;
  f63_row_transform(in, out);
  CHECK(out[0] == 1.0f);
  for (int i = 1; i < 8; ++i) CHECK(out[i] == 0.0f);

  std::mt19937 gen(3);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (int iter = 0; iter < 50; ++iter) {
    for (float& v : in) v = dist(gen);
    f63_row_transform(in, out);
    for (int i = 0; i < 8; ++i) {
      double s = 0.0;
      for (int j = 0; j < 8; ++j) s += double(t6.bt_at(i, j)) * in[j];
      want[i] = float(s);
      CHECK(std::abs(out[i] - want[i]) <= 1e-5f * (1.0f + std::abs(want[i])));
    }
  }
}

TEST_CASE("tile blocks split into row groups without padding slots") {
  const TileBlockShape b = make_tile_block(10, 18, 7);
  CHECK(b.tile0 == 10);
  CHECK(b.tiles == 18);
  CHECK(b.rows == 7);
  REQUIRE(b.groups.size() == 3);
  CHECK(b.groups[0].rows == 7);
  CHECK(b.groups[1].rows == 7);
  CHECK(b.groups[2].rows == 4);
  CHECK(b.groups[1].tile0 == 17);
  CHECK(b.groups[2].slot0 == 14);

  const TileBlockShape s = make_tile_block(0, 4, 7);
  REQUIRE(s.groups.size() == 1);
  CHECK(s.groups[0].rows == 4);

  CHECK_THROWS(make_tile_block(0, 0, 7));
}

TEST_CASE("all-ones tile lands on a single transformed position") {
  const ConvShape shape = make_conv_shape(1, 1, 4, 4, 1, 0);
  const WinogradConfig cfg = make_winograd_config(shape, 2);
  Tensor input({1, 1, 4, 4});
  for (auto& v : input.data) v = 1.0f;

  PackedInputLayout layout;
  layout.tile_area = 16;
  layout.c_total = 4;
  layout.c_blk = 4;
  layout.block = make_tile_block(0, 1, 4);

  std::vector<float> out(size_t(layout.size()), -7.0f);
  transform_input_block(input, shape, cfg, layout, 0, false, out.data(), nullptr);

  for (int l = 0; l < 16; ++l)
    for (int64_t c = 0; c < 4; ++c) {
      const float got = out[size_t(layout.at(l, c, 0))];
      if (l == 5 && c == 0)
        CHECK(got == 4.0f);
      else
        CHECK(got == 0.0f);  // includes the padded channels
    }
}

TEST_CASE("packed input matches the dense transform, tile by tile") {
  std::mt19937 gen(17);
  for (int m : {2, 6}) {
    const TransformSet& ts = transform_set(m);
    const int e = ts.edge;
    const ConvShape shape = make_conv_shape(1, 5, 13, 11, 1, 1);
    const WinogradConfig cfg = make_winograd_config(shape, m);
    Tensor input({1, 5, 13, 11});
    fill_uniform(input, 91);

    PackedInputLayout layout;
    layout.tile_area = cfg.tile_area;
    layout.c_total = 8;
    layout.c_blk = 8;
    layout.block = make_tile_block(0, cfg.tile_count, 7);

    std::vector<float> out(size_t(layout.size()), 0.0f);
    transform_input_block(input, shape, cfg, layout, 0, false, out.data(), nullptr);

    const float tol = m == 2 ? 1e-5f : 5e-4f;
    for (int64_t xi = 0; xi < cfg.tile_count; ++xi) {
      const TileOrigin o = tile_origin(cfg, xi);
      for (int64_t c = 0; c < 8; ++c) {
        std::vector<double> d(size_t(e) * e, 0.0);
        if (c < 5) {
          for (int r = 0; r < e; ++r)
            for (int s = 0; s < e; ++s) {
              const int64_t row = o.row + r, col = o.col + s;
              if (row < 0 || col < 0 || row >= 13 || col >= 11) continue;
              d[size_t(r) * e + s] = input.at4(0, c, row, col);
            }
        }
        const auto v = dense_input_tform(ts, d);
        for (int l = 0; l < cfg.tile_area; ++l) {
          const float got = out[size_t(layout.at(l, c, xi))];
          REQUIRE(std::abs(got - v[size_t(l)]) <= tol);
        }
      }
    }
  }
}

TEST_CASE("wide input staging agrees with the float path") {
  const ConvShape shape = make_conv_shape(1, 8, 16, 16, 1, 0);
  const WinogradConfig cfg = make_winograd_config(shape, 6);
  Tensor input({1, 8, 16, 16});
  fill_uniform(input, 5);

  PackedInputLayout layout;
  layout.tile_area = 64;
  layout.c_total = 8;
  layout.c_blk = 8;
  layout.block = make_tile_block(0, cfg.tile_count, 7);

  std::vector<float> narrow(size_t(layout.size())), wide(size_t(layout.size()));
  transform_input_block(input, shape, cfg, layout, 0, false, narrow.data(), nullptr);
  transform_input_block(input, shape, cfg, layout, 0, true, wide.data(), nullptr);
  for (size_t i = 0; i < narrow.size(); ++i)
    REQUIRE(std::abs(narrow[i] - wide[i]) <= 1e-4f);
}

TEST_CASE("width-first walk reuses the shared window columns") {
  const ConvShape shape = make_conv_shape(1, 4, 8, 8, 1, 0);
  const WinogradConfig cfg = make_winograd_config(shape, 2);
  CHECK(cfg.tile_count == 9);
  Tensor input({1, 4, 8, 8});
  fill_uniform(input, 23);

  PackedInputLayout layout;
  layout.tile_area = 16;
  layout.c_total = 4;
  layout.c_blk = 4;
  layout.block = make_tile_block(0, 9, 7);

  RunStats stats;
  std::vector<float> out(size_t(layout.size()));
  transform_input_block(input, shape, cfg, layout, 0, false, out.data(), &stats);

  // 3 row starts gather all 16 positions, the 6 interior tiles only 8
  CHECK(stats.input_tiles_full.load() == 3);
  CHECK(stats.input_tiles_reused.load() == 6);
  CHECK(stats.input_positions.load() == 3 * 16 + 6 * 8);

  // reuse must not change values
  const TransformSet& ts = transform_set(2);
  for (int64_t xi = 0; xi < 9; ++xi) {
    const TileOrigin o = tile_origin(cfg, xi);
    for (int64_t c = 0; c < 4; ++c) {
      std::vector<double> d(16);
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) d[size_t(r) * 4 + s] = input.at4(0, c, o.row + r, o.col + s);
      const auto v = dense_input_tform(ts, d);
      for (int l = 0; l < 16; ++l)
        REQUIRE(std::abs(out[size_t(layout.at(l, c, xi))] - v[size_t(l)]) <= 1e-5);
    }
  }
}

TEST_CASE("filter transform packs the dense result and zeroes padding") {
  std::mt19937 gen(29);
  for (int m : {2, 6}) {
    const ConvShape shape = make_conv_shape(1, 3, 8, 8, 5, 0);
    const WinogradConfig cfg = make_winograd_config(shape, m);
    const TransformSet& ts = transform_set(m);
    Tensor filter({5, 3, 3, 3});
    fill_uniform(filter, 37);

    PackedFilterLayout layout;
    layout.tile_area = cfg.tile_area;
    layout.c_total = 16;
    layout.k_total = 16;
    layout.c_blk = 16;
    layout.k_blk = 16;

    std::vector<float> out(size_t(layout.size()), -3.0f);
    transform_filter_block(filter, shape, cfg, layout, 0, 0, out.data());

    for (int64_t k = 0; k < 16; ++k)
      for (int64_t c = 0; c < 16; ++c) {
        std::vector<double> g(9, 0.0);
        if (k < 5 && c < 3)
          for (int i = 0; i < 9; ++i)
            g[size_t(i)] = filter.data[size_t(((k * 3 + c) * 3 + i / 3) * 3 + i % 3)];
        const auto u = dense_filter_tform(ts, g);
        for (int l = 0; l < cfg.tile_area; ++l) {
          const float got = out[size_t(layout.at(l, c, k))];
          REQUIRE(std::abs(got - u[size_t(l)]) <= 1e-6);
        }
      }
  }
}

TEST_CASE("inverse transform of the all-ones product is flat nines") {
  const ConvShape shape = make_conv_shape(1, 1, 4, 4, 3, 0);
  const WinogradConfig cfg = make_winograd_config(shape, 2);

  PackedGemmOutLayout layout;
  layout.tile_area = 16;
  layout.k_len = 8;
  layout.block = make_tile_block(0, 1, 4);

  // product of all-ones input and all-ones filter: one hot position
  std::vector<float> mhat(size_t(layout.size()), 0.0f);
  for (int64_t kj = 0; kj < 8; ++kj) mhat[size_t(layout.at(5, kj, 0))] = 9.0f;

  Tensor out({1, 3, 2, 2});
  for (auto& v : out.data) v = -1.0f;
  transform_output_block(mhat.data(), layout, shape, cfg, 0, false, out);
  for (float v : out.data) CHECK(v == 9.0f);
}

TEST_CASE("inverse transform matches the dense product and drops channel padding") {
  std::mt19937 gen(41);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (int m : {2, 6}) {
    const int e = m + 2;
    const ConvShape shape = make_conv_shape(1, 1, e + m, e, 5, 0);  // ragged: 2x1 tiles
    const WinogradConfig cfg = make_winograd_config(shape, m);
    const TransformSet& ts = transform_set(m);

    PackedGemmOutLayout layout;
    layout.tile_area = cfg.tile_area;
    layout.k_len = 8;
    layout.block = make_tile_block(0, cfg.tile_count, 7);

    std::vector<float> mhat(size_t(layout.size()));
    for (float& v : mhat) v = dist(gen);

    Tensor out({1, 5, shape.out_h(), shape.out_w()});
    for (auto& v : out.data) v = 1e30f;
    transform_output_block(mhat.data(), layout, shape, cfg, 0, false, out);

    const float tol = m == 2 ? 1e-5f : 2e-3f;
    for (int64_t xi = 0; xi < cfg.tile_count; ++xi) {
      const TileOrigin o = tile_origin(cfg, xi);
      for (int64_t k = 0; k < 5; ++k) {
        std::vector<double> mh(size_t(e) * e);
        for (int l = 0; l < cfg.tile_area; ++l)
          mh[size_t(l)] = mhat[size_t(layout.at(l, k, xi))];
        const auto y = dense_output_tform(ts, mh);
        for (int p = 0; p < m; ++p)
          for (int q = 0; q < m; ++q) {
            if (o.row + p >= shape.out_h() || o.col + q >= shape.out_w()) continue;
            REQUIRE(std::abs(out.at4(0, k, o.row + p, o.col + q) - y[size_t(p) * m + q]) <=
                    tol);
          }
      }
    }
  }
}

TEST_CASE("double panel and wide staging agree bit for bit") {
  const ConvShape shape = make_conv_shape(1, 1, 12, 12, 8, 0);
  const WinogradConfig cfg = make_winograd_config(shape, 6);

  PackedGemmOutLayout layout;
  layout.tile_area = 64;
  layout.k_len = 8;
  layout.block = make_tile_block(0, cfg.tile_count, 7);

  std::vector<float> mhat(size_t(layout.size()));
  fill_uniform(mhat.data(), layout.size(), 53);
  std::vector<double> wide(mhat.begin(), mhat.end());

  Tensor a({1, 8, 10, 10}), b({1, 8, 10, 10});
  transform_output_block(mhat.data(), layout, shape, cfg, 0, true, a);
  transform_output_block(wide.data(), layout, shape, cfg, 0, b);
  REQUIRE(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
}

TEST_CASE("packed layouts are bijections onto their buffers") {
  std::mt19937 gen(67);
  for (int iter = 0; iter < 34; ++iter) {
    const int tile_area = (gen() % 2) ? 16 : 64;
    const int rows = 4 + int(gen() % 4);
    const int64_t tiles = 1 + gen() % 40;
    const int64_t c_total = 16 * (1 + gen() % 4);
    const int64_t c_blk = 16 * (1 + gen() % 4);

    PackedInputLayout in;
    in.tile_area = tile_area;
    in.c_total = c_total;
    in.c_blk = std::min(c_blk, c_total);
    in.block = make_tile_block(0, tiles, rows);
    std::vector<uint8_t> seen(size_t(in.size()), 0);
    for (int l = 0; l < tile_area; ++l)
      for (int64_t c = 0; c < c_total; ++c)
        for (int64_t t = 0; t < tiles; ++t) {
          const int64_t off = in.at(l, c, t);
          REQUIRE(off >= 0);
          REQUIRE(off < in.size());
          REQUIRE(seen[size_t(off)] == 0);
          seen[size_t(off)] = 1;
        }

    PackedFilterLayout fil;
    fil.tile_area = tile_area;
    fil.c_total = c_total;
    fil.k_total = 16 * (1 + gen() % 4);
    fil.c_blk = in.c_blk;
    fil.k_blk = std::min<int64_t>(16 * (1 + gen() % 4), fil.k_total);
    seen.assign(size_t(fil.size()), 0);
    for (int l = 0; l < tile_area; ++l)
      for (int64_t c = 0; c < fil.c_total; ++c)
        for (int64_t k = 0; k < fil.k_total; ++k) {
          const int64_t off = fil.at(l, c, k);
          REQUIRE(off >= 0);
          REQUIRE(off < fil.size());
          REQUIRE(seen[size_t(off)] == 0);
          seen[size_t(off)] = 1;
        }

    PackedGemmOutLayout go;
    go.tile_area = tile_area;
    go.k_len = 8 * (1 + gen() % 8);
    go.block = in.block;
    seen.assign(size_t(go.size()), 0);
    for (int l = 0; l < tile_area; ++l)
      for (int64_t kj = 0; kj < go.k_len; ++kj)
        for (int64_t t = 0; t < tiles; ++t) {
          const int64_t off = go.at(l, kj, t);
          REQUIRE(off >= 0);
          REQUIRE(off < go.size());
          REQUIRE(seen[size_t(off)] == 0);
          seen[size_t(off)] = 1;
        }
  }
}

TEST_CASE("input panels are contiguous per channel block and group") {
  PackedInputLayout in;
  in.tile_area = 16;
  in.c_total = 32;
  in.c_blk = 16;
  in.block = make_tile_block(0, 10, 7);
  // panel(l, cb, g) must cover exactly c_len * rows consecutive elements
  for (int l = 0; l < 16; ++l)
    for (int64_t cb = 0; cb < in.n_cblocks(); ++cb)
      for (size_t g = 0; g < in.block.groups.size(); ++g) {
        const int64_t base = in.panel(l, cb, g);
        const int64_t len = in.c_len(cb) * in.block.groups[g].rows;
        int64_t lo = INT64_MAX, hi = INT64_MIN;
        for (int64_t ci = 0; ci < in.c_len(cb); ++ci)
          for (int64_t ti = 0; ti < in.block.groups[g].rows; ++ti) {
            const int64_t off =
                in.at(l, cb * in.c_blk + ci, in.block.groups[g].slot0 + ti);
            lo = std::min(lo, off);
            hi = std::max(hi, off);
          }
        CHECK(lo == base);
        CHECK(hi == base + len - 1);
      }
}
