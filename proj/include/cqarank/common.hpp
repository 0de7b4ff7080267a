#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cqarank {

// Dense row-major matrix of doubles; the exchange type for feature matrices
// and model inputs across the library.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Deterministic RNG used everywhere randomness is needed. splitmix64 keeps
// draws bit-identical across standard libraries; std:: distributions do not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform double in [lo, hi)
  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Derives a stage-specific seed from one top-level seed, so every random
// stage of a pipeline owns an independent, reproducible stream.
inline std::uint64_t fan_seed(std::uint64_t seed, std::string_view stage) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  Rng rng(seed ^ h);
  return rng.next_u64();
}

inline std::uint64_t fan_seed(std::uint64_t seed, std::string_view stage, std::uint64_t index) {
  Rng rng(fan_seed(seed, stage) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  return rng.next_u64();
}

// Fixed-point decimal formatting; used for every CSV so emitted files are
// byte-stable run to run.
inline std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// Shortest round-trip-exact representation for persisted scores.
inline std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace cqarank
