#include "wino/cache_spec.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace wino {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

CacheModel load_cache_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cache spec: " + path);

  std::map<std::string, double> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    double parsed = 0.0;
    try {
      size_t used = 0;
      parsed = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad number '" + val + "'");
    }
    if (kv.count(key))
      throw std::runtime_error(path + ": duplicate key '" + key + "'");
    kv[key] = parsed;
  }

  for (const auto& [key, _] : kv)
    if (key != "l1_bytes" && key != "l2_bytes" && key != "bw_l1" && key != "bw_l2" &&
        key != "bw_m" && key != "cache_fill_factor")
      throw std::runtime_error(path + ": unknown key '" + key + "'");
  for (const char* req : {"l1_bytes", "l2_bytes"})
    if (!kv.count(req))
      throw std::runtime_error(path + ": missing required key '" + std::string(req) + "'");

  auto positive = [&](const char* key, double v) {
    if (v <= 0) throw std::runtime_error(path + ": '" + key + "' must be positive");
    return v;
  };

  CacheModel m;
  m.l1_elems = static_cast<int64_t>(positive("l1_bytes", kv["l1_bytes"])) / 4;
  m.l2_elems = static_cast<int64_t>(positive("l2_bytes", kv["l2_bytes"])) / 4;
  if (kv.count("bw_l1")) m.bw_l1 = positive("bw_l1", kv["bw_l1"]);
  if (kv.count("bw_l2")) m.bw_l2 = positive("bw_l2", kv["bw_l2"]);
  if (kv.count("bw_m")) m.bw_mem = positive("bw_m", kv["bw_m"]);
  if (kv.count("cache_fill_factor")) {
    const double f = kv["cache_fill_factor"];
    if (f <= 0 || f > 1)
      throw std::runtime_error(path + ": cache_fill_factor must be in (0, 1]");
    m.fill_factor = f;
  }
  return m;
}

}  // namespace wino
