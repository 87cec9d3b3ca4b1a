#include "wino/shape.hpp"

#include <stdexcept>

#include "wino/tensor.hpp"

namespace wino {

ConvShape make_conv_shape(int64_t n, int64_t c, int64_t h, int64_t w, int64_t k,
                          int pad) {
  if (n < 1 || c < 1 || k < 1) throw std::invalid_argument("batch/channels must be >= 1");
  if (pad != 0 && pad != 1) throw std::invalid_argument("pad must be 0 or 1");
  ConvShape s;
  s.batch = n;
  s.in_channels = c;
  s.height = h;
  s.width = w;
  s.out_channels = k;
  s.pad = pad;
  if (s.out_h() < 1 || s.out_w() < 1)
    throw std::invalid_argument("input too small for a 3x3 window");
  return s;
}

WinogradConfig make_winograd_config(const ConvShape& shape, int m) {
  if (m != 2 && m != 6) throw std::invalid_argument("tile size m must be 2 or 6");
  WinogradConfig c;
  c.m = m;
  c.r = shape.filter_size;
  c.tile_edge = m + c.r - 1;
  c.tile_area = c.tile_edge * c.tile_edge;
  c.pad = shape.pad;
  c.tiles_h = ceil_div(shape.out_h(), m);
  c.tiles_w = ceil_div(shape.out_w(), m);
  c.tile_count = shape.batch * c.tiles_h * c.tiles_w;
  return c;
}

TileOrigin tile_origin(const WinogradConfig& cfg, int64_t xi) {
  const int64_t per_image = cfg.tiles_h * cfg.tiles_w;
  TileOrigin o;
  o.batch = xi / per_image;
  const int64_t rem = xi % per_image;
  o.row = (rem / cfg.tiles_w) * cfg.m - cfg.pad;
  o.col = (rem % cfg.tiles_w) * cfg.m - cfg.pad;
  return o;
}

}  // namespace wino
