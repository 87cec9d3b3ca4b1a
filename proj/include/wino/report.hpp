#pragma once

#include <string>
#include <vector>

namespace wino {

// One benchmark row. plan holds "tile_blk/c_blk/k_blk/rows/cols".
struct BenchRecord {
  std::string layer;
  int m = 0;  // 0 for the direct baseline
  int threads = 1;
  std::string mode;
  int64_t tile_blk = 0, c_blk = 0, k_blk = 0;
  int rows = 0, cols = 0;
  double wall_time_ms = 0.0;
  double gflops = 0.0;
  double err_avg = 0.0;
  double err_max = 0.0;
  double mult_reduction = 0.0;
};

std::string plan_field(const BenchRecord& r);

std::string to_csv(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> from_csv(const std::string& text);

std::string to_json(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> from_json(const std::string& text);

}  // namespace wino
