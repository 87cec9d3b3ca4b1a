#include "wino/executor.hpp"

#include <stdexcept>

namespace wino {

OpCountReport count_ops(const ConvShape& shape, int m) {
  const WinogradConfig cfg = make_winograd_config(shape, m);
  const uint64_t n = shape.batch, c = shape.in_channels, k = shape.out_channels;
  const uint64_t p = shape.out_h(), q = shape.out_w();
  const uint64_t t = cfg.tile_count, l = cfg.tile_area;
  OpCountReport r;
  r.mults_direct = n * p * q * k * c * 9;
  r.mults_winograd = t * l * c * k;
  r.input_transforms = t * c;
  r.filter_transforms = c * k;
  r.output_transforms = t * k;
  return r;
}

double tile_reduction(int m) {
  if (m < 1) throw std::invalid_argument("tile size must be positive");
  const double edge = m + 2;
  return 9.0 * m * m / (edge * edge);
}

int select_variant(const ConvShape& shape, double channel_tile_ratio) {
  const WinogradConfig big = make_winograd_config(shape, 6);
  const double tiles = static_cast<double>(big.tile_count) * channel_tile_ratio;
  const int64_t ch = std::min(shape.in_channels, shape.out_channels);
  return static_cast<double>(ch) > tiles ? 2 : 6;
}

// Accumulation care for the 8x8 variant grows with the reduction depth.
// Its inverse-transform weights reach 32, so plain float accumulation
// drifts past usable error around 256 channels; from there the running
// sums, the gemm panel and the inverse transform stage in double, and the
// deepest reductions stage the input transform too. Below 128 channels
// even pairwise merging is unnecessary. Buffers at every interface stay
// float. The 4x4 variant holds well under its error budget with pair
// depth 1 throughout.
constexpr int64_t kPairChannelCutoff = 128;
constexpr int64_t kWideAccCutoff = 256;
constexpr int64_t kWideStageCutoff = 1024;

ConvExecutor::ConvExecutor(const ConvShape& shape, const CacheModel& cache,
                           const ExecOptions& opts)
    : shape_(shape), opts_(opts) {
  const int m = opts.m ? opts.m : select_variant(shape);
  cfg_ = make_winograd_config(shape, m);
  bp_ = plan(shape, cfg_, cache);
  if (m == 6) {
    if (bp_.c_total < kPairChannelCutoff) {
      bp_.kernel.acc_pair_depth = 0;
    } else if (bp_.c_total >= kWideAccCutoff) {
      bp_.kernel.acc_wide = true;
      bp_.wide_transform = bp_.c_total >= kWideStageCutoff;
    }
  }
  if (opts.forced_tile_blk) {
    if (*opts.forced_tile_blk < 1) throw std::invalid_argument("tile block must be positive");
    bp_.tile_blk = *opts.forced_tile_blk;
  }
  pp_ = opts.forced_mode
            ? make_parallel_plan(cfg_, bp_, opts.threads, *opts.forced_mode, opts.policy)
            : choose_mode(cfg_, bp_, opts.threads, opts.policy);
  if (pp_.mode == ParallelMode::OnlyCK) bp_.tile_blk = bp_.tile_total;

  fly_.tile_area = cfg_.tile_area;
  fly_.c_total = bp_.c_total;
  fly_.k_total = bp_.k_total;
  fly_.c_blk = bp_.c_blk;
  fly_.k_blk = bp_.k_blk;
  fly_.eta = bp_.kernel.cols;
}

AlignedBuf ConvExecutor::transform_filter(const Tensor& filter) {
  if (filter.dims.size() != 4 || filter.dims[0] != shape_.out_channels ||
      filter.dims[1] != shape_.in_channels || filter.dims[2] != shape_.filter_size ||
      filter.dims[3] != shape_.filter_size)
    throw std::invalid_argument("filter tensor does not match the shape");
  return parallel_filter_transform(filter, shape_, cfg_, fly_,
                                   pp_.effective_threads(), opts_.trace);
}

void ConvExecutor::set_filter(const Tensor& filter) {
  filter_buf_ = transform_filter(filter);
}

Tensor ConvExecutor::run(const Tensor& input, const float* packed_filter) {
  if (input.dims.size() != 4 || input.dims[0] != shape_.batch ||
      input.dims[1] != shape_.in_channels || input.dims[2] != shape_.height ||
      input.dims[3] != shape_.width)
    throw std::invalid_argument("input tensor does not match the shape");
  Tensor out({shape_.batch, shape_.out_channels, shape_.out_h(), shape_.out_w()});
  FusedCall call;
  call.shape = &shape_;
  call.cfg = &cfg_;
  call.bp = &bp_;
  call.input = &input;
  call.packed_filter = packed_filter;
  call.fil_layout = &fly_;
  call.stats = opts_.stats;
  call.trace = opts_.trace;
  call.fail_task_for_testing = opts_.fail_task_for_testing;
  run_fused(call, pp_, out);
  return out;
}

Tensor ConvExecutor::execute(const Tensor& input, const Tensor& filter) {
  const AlignedBuf packed = transform_filter(filter);
  return run(input, packed.ptr);
}

Tensor ConvExecutor::execute(const Tensor& input) {
  if (!has_filter()) throw std::logic_error("no filter set");
  return run(input, filter_buf_.ptr);
}

}  // namespace wino
