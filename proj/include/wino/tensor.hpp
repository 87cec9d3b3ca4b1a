#pragma once

#include <cstdint>
#include <cstdlib>
#include <new>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wino {

inline int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }
inline int64_t round_up(int64_t a, int64_t b) { return ceil_div(a, b) * b; }

// Dense row-major FP32 tensor, innermost dimension fastest.
struct Tensor {
  std::vector<int64_t> dims;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> d) : dims(std::move(d)) {
    int64_t n = 1;
    for (int64_t v : dims) {
      if (v < 1) throw std::invalid_argument("tensor dims must be positive");
      n *= v;
    }
    data.assign(static_cast<size_t>(n), 0.0f);
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }

  float& at4(int64_t a, int64_t b, int64_t c, int64_t d) {
    return data[((a * dims[1] + b) * dims[2] + c) * dims[3] + d];
  }
  float at4(int64_t a, int64_t b, int64_t c, int64_t d) const {
    return data[((a * dims[1] + b) * dims[2] + c) * dims[3] + d];
  }
};

// 64-byte aligned scratch buffer. Contents start uninitialized; every slot
// is written before it is read by construction of the packed layouts.
struct AlignedBuf {
  float* ptr = nullptr;
  int64_t count = 0;

  AlignedBuf() = default;
  explicit AlignedBuf(int64_t n) : count(n) {
    ptr = static_cast<float*>(::operator new[](static_cast<size_t>(n) * sizeof(float),
                                               std::align_val_t(64)));
  }
  AlignedBuf(AlignedBuf&& o) noexcept : ptr(o.ptr), count(o.count) {
    o.ptr = nullptr;
    o.count = 0;
  }
  AlignedBuf& operator=(AlignedBuf&& o) noexcept {
    if (this != &o) {
      release();
      ptr = o.ptr;
      count = o.count;
      o.ptr = nullptr;
      o.count = 0;
    }
    return *this;
  }
  AlignedBuf(const AlignedBuf&) = delete;
  AlignedBuf& operator=(const AlignedBuf&) = delete;
  ~AlignedBuf() { release(); }

  void release() {
    if (ptr) ::operator delete[](ptr, std::align_val_t(64));
    ptr = nullptr;
    count = 0;
  }
};

// Deterministic uniform fill over [-1, 1). Maps raw mt19937 draws through a
// fixed expression so fixtures stay stable across standard libraries.
inline void fill_uniform(float* p, int64_t n, uint32_t seed) {
  std::mt19937 gen(seed);
  for (int64_t i = 0; i < n; ++i)
    p[i] = static_cast<float>(gen() >> 8) * (2.0f / 16777216.0f) - 1.0f;
}

inline void fill_uniform(Tensor& t, uint32_t seed) {
  fill_uniform(t.data.data(), t.size(), seed);
}

}  // namespace wino
