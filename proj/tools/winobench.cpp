#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "wino/cache_spec.hpp"
#include "wino/executor.hpp"
#include "wino/layers.hpp"
#include "wino/reference.hpp"
#include "wino/report.hpp"

namespace {

using namespace wino;

constexpr int64_t kVerifyCap = 64;  // spatial cap for direct-reference runs

struct CommonOpts {
  std::string network, layer;
  int m = 0;
  int threads = 0;
  std::string mode = "auto";
  int64_t batch = 1;
  std::string cache_spec;
  uint32_t seed = 1;
};

struct BenchOpts {
  int repeat = 10;
  int warmup = 3;
  std::string format = "csv";
  bool baseline = false;
  bool trace = false;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--network", o.network, "filter layers by network name");
  sub->add_option("--layer", o.layer, "layer name or its suffix, e.g. 3.2");
  sub->add_option("--m", o.m, "output tile size, 2 or 6; 0 picks per layer")
      ->check(CLI::IsMember({0, 2, 6}));
  sub->add_option("--threads", o.threads, "worker threads; 0 = WINO_THREADS or hardware");
  sub->add_option("--mode", o.mode, "parallel mode")
      ->check(CLI::IsMember({"auto", "only-t", "multi", "only-ck"}));
  sub->add_option("--batch", o.batch, "input batch size")->check(CLI::PositiveNumber);
  sub->add_option("--cache-spec", o.cache_spec, "cache description file");
  sub->add_option("--seed", o.seed, "rng seed for generated tensors");
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("WINO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

CacheModel resolve_cache(const std::string& path) {
  return path.empty() ? CacheModel{} : load_cache_spec(path);
}

std::vector<LayerSpec> resolve_layers(const CommonOpts& o) {
  auto layers = find_layers(o.network, o.layer);
  if (layers.empty()) throw std::runtime_error("no layer matches the given filters");
  return layers;
}

ExecOptions exec_options(const CommonOpts& o, int threads) {
  ExecOptions eo;
  eo.m = o.m;
  eo.threads = threads;
  if (o.mode != "auto") eo.forced_mode = parse_mode(o.mode);
  return eo;
}

double gflops_direct_equiv(const ConvShape& s, double ms) {
  const double flops = 2.0 * double(s.batch) * double(s.out_h()) * double(s.out_w()) *
                       double(s.out_channels) * double(s.in_channels) * 9.0;
  return flops / (ms * 1e6);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int run_plan(const CommonOpts& o) {
  const CacheModel cache = resolve_cache(o.cache_spec);
  const int threads = resolve_threads(o.threads);
  for (const LayerSpec& ls : resolve_layers(o)) {
    const ConvShape shape = layer_shape(ls, o.batch);
    const int m = o.m ? o.m : select_variant(shape);
    const WinogradConfig cfg = make_winograd_config(shape, m);
    const BlockPlan bp = plan(shape, cfg, cache);
    const ParallelPlan pp = o.mode != "auto"
                                ? make_parallel_plan(cfg, bp, threads, *parse_mode(o.mode))
                                : choose_mode(cfg, bp, threads);
    std::printf(
        "layer=%s m=%d T=%lld kernel=%dx%d tile_blk=%lld c_blk=%lld k_blk=%lld "
        "feasible=%d mode=%s threads=%d overhead_in=%.6g overhead_fil=%.6g "
        "overhead_out=%.6g overhead_total=%.6g\n",
        ls.name.c_str(), m, static_cast<long long>(cfg.tile_count), bp.kernel.rows,
        bp.kernel.cols, static_cast<long long>(bp.tile_blk),
        static_cast<long long>(bp.c_blk), static_cast<long long>(bp.k_blk),
        bp.feasible ? 1 : 0, mode_name(pp.mode), pp.effective_threads(),
        bp.overhead.input, bp.overhead.filter, bp.overhead.output,
        bp.overhead.total());
  }
  return 0;
}

int run_verify(const CommonOpts& o) {
  const CacheModel cache = resolve_cache(o.cache_spec);
  const int threads = resolve_threads(o.threads);
  bool all_ok = true;
  for (const LayerSpec& ls : resolve_layers(o)) {
    const int64_t cap = ls.network == "FusionNet" ? kVerifyCap : 0;
    const ConvShape shape = layer_shape(ls, o.batch, 0, cap);
    Tensor input({shape.batch, shape.in_channels, shape.height, shape.width});
    Tensor filter({shape.out_channels, shape.in_channels, 3, 3});
    fill_uniform(input, o.seed);
    fill_uniform(filter, o.seed + 1);
    const Tensor ref = direct_conv(input, filter, 0);
    for (int m : o.m ? std::vector<int>{o.m} : std::vector<int>{2, 6}) {
      CommonOpts mo = o;
      mo.m = m;
      ConvExecutor exec(shape, cache, exec_options(mo, threads));
      const Tensor got = exec.execute(input, filter);
      const ErrorReport err = error_stats(got, ref);
      const double tol = m == 2 ? 5e-5 : 5e-4;
      const bool ok = err.max_abs_err < tol;
      all_ok = all_ok && ok;
      std::printf("%s layer=%s m=%d err_max=%.6e err_avg=%.6e tol=%.0e\n",
                  ok ? "ok" : "FAIL", ls.name.c_str(), m, err.max_abs_err,
                  err.avg_abs_err, tol);
    }
  }
  return all_ok ? 0 : 1;
}

BenchRecord bench_one(const LayerSpec& ls, int m, const CommonOpts& o,
                      const BenchOpts& b, const CacheModel& cache, int threads) {
  const ConvShape shape = layer_shape(ls, o.batch);
  ExecOptions eo = exec_options(o, threads);
  eo.m = m;
  TraceLog trace;
  if (b.trace) eo.trace = &trace;
  ConvExecutor exec(shape, cache, eo);

  Tensor input({shape.batch, shape.in_channels, shape.height, shape.width});
  Tensor filter({shape.out_channels, shape.in_channels, 3, 3});
  fill_uniform(input, o.seed);
  fill_uniform(filter, o.seed + 1);

  std::vector<double> ms;
  for (int i = 0; i < b.warmup + b.repeat; ++i) {
    const int64_t t0 = now_us();
    const Tensor out = exec.execute(input, filter);
    const int64_t t1 = now_us();
    if (i >= b.warmup) ms.push_back(double(t1 - t0) / 1000.0);
  }

  // error against the direct reference on a capped replica of the layer
  const ConvShape small = layer_shape(ls, 1, 0, kVerifyCap);
  ExecOptions seo;
  seo.m = exec.config().m;
  seo.threads = 1;
  ConvExecutor sexec(small, cache, seo);
  Tensor sin({small.batch, small.in_channels, small.height, small.width});
  Tensor sfil({small.out_channels, small.in_channels, 3, 3});
  fill_uniform(sin, o.seed);
  fill_uniform(sfil, o.seed + 1);
  const ErrorReport err = error_stats(sexec.execute(sin, sfil), direct_conv(sin, sfil, 0));

  const OpCountReport ops = count_ops(shape, exec.config().m);

  BenchRecord r;
  r.layer = ls.name;
  r.m = exec.config().m;
  r.threads = exec.parallel_plan().effective_threads();
  r.mode = mode_name(exec.parallel_plan().mode);
  r.tile_blk = exec.block_plan().tile_blk;
  r.c_blk = exec.block_plan().c_blk;
  r.k_blk = exec.block_plan().k_blk;
  r.rows = exec.block_plan().kernel.rows;
  r.cols = exec.block_plan().kernel.cols;
  r.wall_time_ms = median(ms);
  r.gflops = gflops_direct_equiv(shape, r.wall_time_ms);
  r.err_avg = err.avg_abs_err;
  r.err_max = err.max_abs_err;
  r.mult_reduction = double(ops.mults_direct) / double(ops.mults_winograd);

  if (b.trace) {
    std::fprintf(stderr, "# trace %s m=%d: task_id,kind,worker,begin_ns,end_ns\n",
                 ls.name.c_str(), r.m);
    for (const TraceEvent& e : trace.merged())
      std::fprintf(stderr, "%lld,%d,%d,%lld,%lld\n", static_cast<long long>(e.task_id),
                   static_cast<int>(e.kind), e.worker,
                   static_cast<long long>(e.begin_ns),
                   static_cast<long long>(e.end_ns));
  }
  return r;
}

BenchRecord bench_direct(const LayerSpec& ls, const CommonOpts& o, const BenchOpts& b) {
  const ConvShape shape = layer_shape(ls, o.batch);
  Tensor input({shape.batch, shape.in_channels, shape.height, shape.width});
  Tensor filter({shape.out_channels, shape.in_channels, 3, 3});
  fill_uniform(input, o.seed);
  fill_uniform(filter, o.seed + 1);
  std::vector<double> ms;
  for (int i = 0; i < b.repeat; ++i) {
    const int64_t t0 = now_us();
    const Tensor out = direct_conv(input, filter, 0);
    const int64_t t1 = now_us();
    ms.push_back(double(t1 - t0) / 1000.0);
  }
  BenchRecord r;
  r.layer = ls.name;
  r.mode = "direct";
  r.threads = 1;
  r.wall_time_ms = median(ms);
  r.gflops = gflops_direct_equiv(shape, r.wall_time_ms);
  r.mult_reduction = 1.0;
  return r;
}

int emit(const std::vector<BenchRecord>& records, const std::string& format) {
  std::cout << (format == "json" ? to_json(records) : to_csv(records));
  return 0;
}

int run_bench(const CommonOpts& o, const BenchOpts& b, bool all_m) {
  const CacheModel cache = resolve_cache(o.cache_spec);
  const int threads = resolve_threads(o.threads);
  std::vector<BenchRecord> records;
  for (const LayerSpec& ls : resolve_layers(o)) {
    std::vector<int> ms;
    if (o.m)
      ms = {o.m};
    else if (all_m)
      ms = {2, 6};
    else
      ms = {select_variant(layer_shape(ls, o.batch))};
    for (int m : ms) records.push_back(bench_one(ls, m, o, b, cache, threads));
    if (b.baseline) records.push_back(bench_direct(ls, o, b));
  }
  return emit(records, b.format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fused winograd convolution engine for 3x3 stride-1 layers"};
  app.require_subcommand(1);

  CommonOpts plan_o, verify_o, bench_o, suite_o;
  BenchOpts bench_b, suite_b;

  CLI::App* plan_cmd = app.add_subcommand("plan", "print blocking and mode decisions");
  add_common(plan_cmd, plan_o);

  CLI::App* verify_cmd =
      app.add_subcommand("verify", "check fused results against the direct reference");
  add_common(verify_cmd, verify_o);

  CLI::App* bench_cmd = app.add_subcommand("bench", "time selected layers");
  add_common(bench_cmd, bench_o);
  bench_cmd->add_option("--repeat", bench_b.repeat, "timed runs per layer")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", bench_b.warmup, "untimed runs per layer");
  bench_cmd->add_option("--format", bench_b.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  bench_cmd->add_flag("--baseline", bench_b.baseline, "also time the direct loop");
  bench_cmd->add_flag("--trace", bench_b.trace, "dump task trace to stderr");

  CLI::App* suite_cmd =
      app.add_subcommand("suite", "bench the full layer table, both tile sizes");
  add_common(suite_cmd, suite_o);
  suite_cmd->add_option("--repeat", suite_b.repeat, "timed runs per layer")
      ->check(CLI::PositiveNumber);
  suite_cmd->add_option("--warmup", suite_b.warmup, "untimed runs per layer");
  suite_cmd->add_option("--format", suite_b.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  suite_cmd->add_flag("--baseline", suite_b.baseline, "also time the direct loop");
  suite_cmd->add_flag("--trace", suite_b.trace, "dump task trace to stderr");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan_cmd->parsed()) return run_plan(plan_o);
    if (verify_cmd->parsed()) return run_verify(verify_o);
    if (bench_cmd->parsed()) return run_bench(bench_o, bench_b, false);
    if (suite_cmd->parsed()) return run_bench(suite_o, suite_b, true);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
