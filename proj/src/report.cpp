#include "wino/report.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace wino {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

constexpr const char* kCsvHeader =
    "layer,m,threads,mode,plan,wall_time_ms,gflops,err_avg,err_max,mult_reduction";

}  // namespace

std::string plan_field(const BenchRecord& r) {
  std::ostringstream os;
  os << r.tile_blk << '/' << r.c_blk << '/' << r.k_blk << '/' << r.rows << '/'
     << r.cols;
  return os.str();
}

std::string to_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const BenchRecord& r : records) {
    os << r.layer << ',' << r.m << ',' << r.threads << ',' << r.mode << ','
       << plan_field(r) << ',' << fmt_double(r.wall_time_ms) << ','
       << fmt_double(r.gflops) << ',' << fmt_double(r.err_avg) << ','
       << fmt_double(r.err_max) << ',' << fmt_double(r.mult_reduction) << '\n';
  }
  return os.str();
}

std::vector<BenchRecord> from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw std::runtime_error("bad csv header");
  std::vector<BenchRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw std::runtime_error("bad csv row: " + line);
    BenchRecord r;
    r.layer = f[0];
    r.m = std::stoi(f[1]);
    r.threads = std::stoi(f[2]);
    r.mode = f[3];
    const auto p = split(f[4], '/');
    if (p.size() != 5) throw std::runtime_error("bad plan field: " + f[4]);
    r.tile_blk = std::stoll(p[0]);
    r.c_blk = std::stoll(p[1]);
    r.k_blk = std::stoll(p[2]);
    r.rows = std::stoi(p[3]);
    r.cols = std::stoi(p[4]);
    r.wall_time_ms = std::stod(f[5]);
    r.gflops = std::stod(f[6]);
    r.err_avg = std::stod(f[7]);
    r.err_max = std::stod(f[8]);
    r.mult_reduction = std::stod(f[9]);
    out.push_back(r);
  }
  return out;
}

std::string to_json(const std::vector<BenchRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const BenchRecord& r : records) {
    arr.push_back({{"layer", r.layer},
                   {"m", r.m},
                   {"threads", r.threads},
                   {"mode", r.mode},
                   {"tile_blk", r.tile_blk},
                   {"c_blk", r.c_blk},
                   {"k_blk", r.k_blk},
                   {"rows", r.rows},
                   {"cols", r.cols},
                   {"wall_time_ms", r.wall_time_ms},
                   {"gflops", r.gflops},
                   {"err_avg", r.err_avg},
                   {"err_max", r.err_max},
                   {"mult_reduction", r.mult_reduction}});
  }
  return arr.dump(2) + "\n";
}

std::vector<BenchRecord> from_json(const std::string& text) {
  const nlohmann::json arr = nlohmann::json::parse(text);
  if (!arr.is_array()) throw std::runtime_error("expected a json array");
  std::vector<BenchRecord> out;
  for (const auto& j : arr) {
    BenchRecord r;
    r.layer = j.at("layer").get<std::string>();
    r.m = j.at("m").get<int>();
    r.threads = j.at("threads").get<int>();
    r.mode = j.at("mode").get<std::string>();
    r.tile_blk = j.at("tile_blk").get<int64_t>();
    r.c_blk = j.at("c_blk").get<int64_t>();
    r.k_blk = j.at("k_blk").get<int64_t>();
    r.rows = j.at("rows").get<int>();
    r.cols = j.at("cols").get<int>();
    r.wall_time_ms = j.at("wall_time_ms").get<double>();
    r.gflops = j.at("gflops").get<double>();
    r.err_avg = j.at("err_avg").get<double>();
    r.err_max = j.at("err_max").get<double>();
    r.mult_reduction = j.at("mult_reduction").get<double>();
    out.push_back(r);
  }
  return out;
}

}  // namespace wino
