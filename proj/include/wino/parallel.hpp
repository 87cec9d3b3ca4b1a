#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wino/planner.hpp"
#include "wino/stats.hpp"
#include "wino/tensor.hpp"

namespace wino {

// OnlyT: tile blocks fan out across threads, each owning its whole pipeline.
// MultiDim: a lock-free task queue pipelines input slices and k-block GEMMs
// through a window of in-flight tile blocks.
// OnlyCK: one tile block spanning all tiles; threads split channel blocks.
enum class ParallelMode { OnlyT, MultiDim, OnlyCK };

const char* mode_name(ParallelMode m);
std::optional<ParallelMode> parse_mode(const std::string& name);

struct ModePolicy {
  int min_tile_blocks = 2;      // fewer full tile blocks than this: OnlyCK
  int shallow_channel_max = 128;  // OnlyT only while min(C, K) stays this small
};

struct ParallelPlan {
  ParallelMode mode = ParallelMode::OnlyT;
  int64_t max_threads = 1;    // useful parallelism cap for the mode
  int64_t subtask_count = 0;  // schedulable units the mode will issue
  int requested_threads = 1;

  int effective_threads() const {
    const int64_t t = std::min<int64_t>(requested_threads, max_threads);
    return static_cast<int>(std::max<int64_t>(1, t));
  }
};

ParallelPlan make_parallel_plan(const WinogradConfig& cfg, const BlockPlan& bp,
                                int threads, ParallelMode mode,
                                const ModePolicy& policy = {});

// Tile-starved shapes pipeline channels; shallow layers with enough tile
// blocks stay embarrassingly parallel; everything else takes the task queue.
ParallelPlan choose_mode(const WinogradConfig& cfg, const BlockPlan& bp, int threads,
                         const ModePolicy& policy = {});

enum class TaskKind { TileBlock, InputSlice, GemmPipeline, FilterBlock };

struct TraceEvent {
  int64_t task_id;
  TaskKind kind;
  int worker;
  int64_t begin_ns, end_ns;
};

struct TraceLog {
  std::vector<std::vector<TraceEvent>> per_worker;
  void reset(int workers) {
    per_worker.assign(static_cast<size_t>(workers), {});
  }
  std::vector<TraceEvent> merged() const;
};

// Everything run_fused needs; assembled by the executor. packed_filter is
// laid out per fil_layout and already transformed.
struct FusedCall {
  const ConvShape* shape = nullptr;
  const WinogradConfig* cfg = nullptr;
  const BlockPlan* bp = nullptr;
  const Tensor* input = nullptr;
  const float* packed_filter = nullptr;
  const PackedFilterLayout* fil_layout = nullptr;
  RunStats* stats = nullptr;
  TraceLog* trace = nullptr;
  int64_t fail_task_for_testing = -1;  // queue index that throws, for failure-path tests
};

void run_fused(const FusedCall& call, const ParallelPlan& pp, Tensor& out);

AlignedBuf parallel_filter_transform(const Tensor& filter, const ConvShape& shape,
                                     const WinogradConfig& cfg,
                                     const PackedFilterLayout& layout, int workers,
                                     TraceLog* trace);

}  // namespace wino
