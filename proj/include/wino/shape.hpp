#pragma once

#include <cstdint>

namespace wino {

// Problem dimensions for a 3x3 stride-1 convolution.
// input [N][C][H][W], filter [K][C][3][3], output [N][K][P][Q].
struct ConvShape {
  int64_t batch = 1;
  int64_t in_channels = 1;
  int64_t height = 3;
  int64_t width = 3;
  int64_t out_channels = 1;
  int filter_size = 3;
  int pad = 0;  // 0 = valid, 1 = same

  int64_t out_h() const { return height + 2 * pad - filter_size + 1; }
  int64_t out_w() const { return width + 2 * pad - filter_size + 1; }
};

ConvShape make_conv_shape(int64_t n, int64_t c, int64_t h, int64_t w, int64_t k,
                          int pad = 0);

// Tiling parameters for one output-tile size m. The input is cut into
// overlapping (m+2)^2 windows that step by m; L = (m+2)^2 is the number of
// independent GEMMs the element-wise stage turns into.
struct WinogradConfig {
  int m = 6;
  int r = 3;
  int theta = 4;       // FP32 lanes per 128-bit vector
  int tile_edge = 8;   // m + r - 1
  int tile_area = 64;  // L
  int pad = 0;
  int64_t tiles_h = 0;
  int64_t tiles_w = 0;
  int64_t tile_count = 0;  // T = batch * tiles_h * tiles_w
};

WinogradConfig make_winograd_config(const ConvShape& shape, int m);

struct TileOrigin {
  int64_t batch;
  int64_t row;  // top-left input coordinate of the window; -pad at the border
  int64_t col;
};

// Collapsed tile index walks row-major over (batch, tile row, tile col).
TileOrigin tile_origin(const WinogradConfig& cfg, int64_t xi);

}  // namespace wino
