#pragma once

#include <cstdint>
#include <optional>

#include "wino/parallel.hpp"

namespace wino {

struct ExecOptions {
  int m = 0;  // 0 picks the variant per layer shape
  int threads = 1;
  std::optional<ParallelMode> forced_mode;
  std::optional<int64_t> forced_tile_blk;  // test hook, bypasses the planner
  ModePolicy policy;
  int64_t fail_task_for_testing = -1;
  RunStats* stats = nullptr;
  TraceLog* trace = nullptr;
};

struct OpCountReport {
  uint64_t mults_direct = 0;
  uint64_t mults_winograd = 0;
  uint64_t input_transforms = 0;   // tile transforms: T * C
  uint64_t filter_transforms = 0;  // C * K
  uint64_t output_transforms = 0;  // T * K
};

// Multiply counts in logical (unpadded) dimensions.
OpCountReport count_ops(const ConvShape& shape, int m);

// Direct multiplies per winograd multiply for one full tile:
// 9 m^2 / (m+2)^2. Exact in binary floating point for m in {1, 2, 6}.
double tile_reduction(int m);

// m=2 once both channel dims exceed the m=6 tile count; the bigger tile
// wins whenever there are enough tiles to keep its GEMMs deep.
int select_variant(const ConvShape& shape, double channel_tile_ratio = 1.0);

class ConvExecutor {
 public:
  ConvExecutor(const ConvShape& shape, const CacheModel& cache = {},
               const ExecOptions& opts = {});

  const ConvShape& shape() const { return shape_; }
  const WinogradConfig& config() const { return cfg_; }
  const BlockPlan& block_plan() const { return bp_; }
  const ParallelPlan& parallel_plan() const { return pp_; }
  const PackedFilterLayout& filter_layout() const { return fly_; }

  // Transforms and keeps the filter for repeated execute(input) calls.
  void set_filter(const Tensor& filter);
  bool has_filter() const { return filter_buf_.ptr != nullptr; }

  Tensor execute(const Tensor& input, const Tensor& filter);
  Tensor execute(const Tensor& input);

 private:
  Tensor run(const Tensor& input, const float* packed_filter);
  AlignedBuf transform_filter(const Tensor& filter);

  ConvShape shape_;
  ExecOptions opts_;
  WinogradConfig cfg_;
  BlockPlan bp_;
  ParallelPlan pp_;
  PackedFilterLayout fly_;
  AlignedBuf filter_buf_;
};

}  // namespace wino
