#pragma once

#include "wino/shape.hpp"
#include "wino/tensor.hpp"

namespace wino {

struct ErrorReport {
  double avg_abs_err = 0.0;
  double max_abs_err = 0.0;
  int64_t n_elements = 0;
};

// Plain 7-loop convolution accumulating in FP64; the comparison baseline.
Tensor direct_conv(const Tensor& input, const Tensor& filter, int pad);

// Same loops with a float accumulator: the ground truth the error table is
// measured against, carrying the rounding a deployed direct kernel would.
Tensor direct_conv_f32(const Tensor& input, const Tensor& filter, int pad);

// Per-tile dense two-sided matrix products, no packing or factoring.
// Cross-checks the fused engine's transforms, not its speed.
Tensor dense_winograd_ref(const Tensor& input, const Tensor& filter, int m, int pad);

ErrorReport error_stats(const Tensor& test, const Tensor& reference);

}  // namespace wino
