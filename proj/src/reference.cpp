#include "wino/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wino/transform.hpp"

namespace wino {

namespace {

ConvShape shape_of(const Tensor& input, const Tensor& filter, int pad) {
  if (input.dims.size() != 4 || filter.dims.size() != 4)
    throw std::invalid_argument("expected 4-d input and filter");
  if (input.dims[1] != filter.dims[1])
    throw std::invalid_argument("channel mismatch between input and filter");
  if (filter.dims[2] != 3 || filter.dims[3] != 3)
    throw std::invalid_argument("expected a 3x3 filter");
  return make_conv_shape(input.dims[0], input.dims[1], input.dims[2], input.dims[3],
                         filter.dims[0], pad);
}

template <typename A>
Tensor direct_impl(const Tensor& input, const Tensor& filter, int pad) {
  const ConvShape s = shape_of(input, filter, pad);
  const int64_t P = s.out_h(), Q = s.out_w();
  Tensor out({s.batch, s.out_channels, P, Q});
  for (int64_t n = 0; n < s.batch; ++n)
    for (int64_t k = 0; k < s.out_channels; ++k)
      for (int64_t p = 0; p < P; ++p)
        for (int64_t q = 0; q < Q; ++q) {
          A acc = 0;
          for (int64_t c = 0; c < s.in_channels; ++c)
            for (int u = 0; u < 3; ++u) {
              const int64_t h = p + u - pad;
              if (h < 0 || h >= s.height) continue;
              for (int v = 0; v < 3; ++v) {
                const int64_t w = q + v - pad;
                if (w < 0 || w >= s.width) continue;
                acc += A(input.at4(n, c, h, w)) * A(filter.at4(k, c, u, v));
              }
            }
          out.at4(n, k, p, q) = static_cast<float>(acc);
        }
  return out;
}

}  // namespace

Tensor direct_conv(const Tensor& input, const Tensor& filter, int pad) {
  return direct_impl<double>(input, filter, pad);
}

Tensor direct_conv_f32(const Tensor& input, const Tensor& filter, int pad) {
  return direct_impl<float>(input, filter, pad);
}

Tensor dense_winograd_ref(const Tensor& input, const Tensor& filter, int m, int pad) {
  const ConvShape s = shape_of(input, filter, pad);
  const WinogradConfig cfg = make_winograd_config(s, m);
  const TransformSet& ts = transform_set(m);
  const int e = cfg.tile_edge;
  const int64_t C = s.in_channels, K = s.out_channels;
  const int64_t P = s.out_h(), Q = s.out_w();
  Tensor out({s.batch, K, P, Q});

  // U[k][c] = G g G^T
  std::vector<float> U(static_cast<size_t>(K * C * e * e));
  std::vector<float> tmp(static_cast<size_t>(e * 3));
  for (int64_t k = 0; k < K; ++k)
    for (int64_t c = 0; c < C; ++c) {
      for (int a = 0; a < e; ++a)
        for (int j = 0; j < 3; ++j) {
          float acc = 0.0f;
          for (int i = 0; i < 3; ++i) acc += ts.g_at(a, i) * filter.at4(k, c, i, j);
          tmp[a * 3 + j] = acc;
        }
      float* u = U.data() + (k * C + c) * e * e;
      for (int a = 0; a < e; ++a)
        for (int b = 0; b < e; ++b) {
          float acc = 0.0f;
          for (int j = 0; j < 3; ++j) acc += tmp[a * 3 + j] * ts.g_at(b, j);
          u[a * e + b] = acc;
        }
    }

  std::vector<float> V(static_cast<size_t>(C * e * e));
  std::vector<float> d(static_cast<size_t>(e * e)), w1(static_cast<size_t>(e * e));
  std::vector<float> M(static_cast<size_t>(e * e)), y1(static_cast<size_t>(size_t(m) * e));
  for (int64_t xi = 0; xi < cfg.tile_count; ++xi) {
    const TileOrigin o = tile_origin(cfg, xi);
    for (int64_t c = 0; c < C; ++c) {
      for (int i = 0; i < e; ++i)
        for (int j = 0; j < e; ++j) {
          const int64_t h = o.row + i, w = o.col + j;
          d[i * e + j] = (h >= 0 && h < s.height && w >= 0 && w < s.width)
                             ? input.at4(o.batch, c, h, w)
                             : 0.0f;
        }
      // V = B^T d B
      for (int a = 0; a < e; ++a)
        for (int j = 0; j < e; ++j) {
          float acc = 0.0f;
          for (int i = 0; i < e; ++i) acc += ts.bt_at(a, i) * d[i * e + j];
          w1[a * e + j] = acc;
        }
      float* v = V.data() + c * e * e;
      for (int a = 0; a < e; ++a)
        for (int b = 0; b < e; ++b) {
          float acc = 0.0f;
          for (int j = 0; j < e; ++j) acc += w1[a * e + j] * ts.bt_at(b, j);
          v[a * e + b] = acc;
        }
    }
    for (int64_t k = 0; k < K; ++k) {
      for (int i = 0; i < e * e; ++i) M[i] = 0.0f;
      for (int64_t c = 0; c < C; ++c) {
        const float* u = U.data() + (k * C + c) * e * e;
        const float* v = V.data() + c * e * e;
        for (int i = 0; i < e * e; ++i) M[i] += u[i] * v[i];
      }
      // Y = A^T M A
      for (int a = 0; a < m; ++a)
        for (int j = 0; j < e; ++j) {
          float acc = 0.0f;
          for (int f = 0; f < e; ++f) acc += ts.at_at(a, f) * M[f * e + j];
          y1[a * e + j] = acc;
        }
      const int64_t py0 = o.row + pad, px0 = o.col + pad;
      for (int a = 0; a < m; ++a) {
        const int64_t py = py0 + a;
        if (py < 0 || py >= P) continue;
        for (int b = 0; b < m; ++b) {
          const int64_t px = px0 + b;
          if (px < 0 || px >= Q) continue;
          float acc = 0.0f;
          for (int f = 0; f < e; ++f) acc += y1[a * e + f] * ts.at_at(b, f);
          out.at4(o.batch, k, py, px) = acc;
        }
      }
    }
  }
  return out;
}

ErrorReport error_stats(const Tensor& test, const Tensor& reference) {
  if (test.dims != reference.dims)
    throw std::invalid_argument("error_stats: shape mismatch");
  ErrorReport r;
  r.n_elements = test.size();
  double sum = 0.0;
  for (int64_t i = 0; i < test.size(); ++i) {
    const double d = std::abs(double(test.data[i]) - double(reference.data[i]));
    sum += d;
    if (d > r.max_abs_err) r.max_abs_err = d;
  }
  r.avg_abs_err = r.n_elements ? sum / double(r.n_elements) : 0.0;
  return r;
}

}  // namespace wino
