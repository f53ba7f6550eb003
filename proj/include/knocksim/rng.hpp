#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace knocksim {

// splitmix64 finalizer, used to derive independent substream seeds from
// (seed, path...) words. Streams derived from distinct paths never share
// state, so trials can run on any number of workers with identical output.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Substream labels for experiment plumbing.
enum StreamLabel : std::uint64_t {
  kStreamSupport = 1,
  kStreamDesign = 2,
  kStreamNoise = 3,
  kStreamKnockoff = 4,
  kStreamCvFolds = 5,
  kStreamRhoSeq = 6,
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t w : path) h = mix64(h ^ mix64(w));
    id_ = h;
    engine_.seed(h);
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::uint64_t stream_id() const { return id_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::uint64_t id_ = 0;
};

}  // namespace knocksim
