#pragma once

#include <cmath>
#include <cstdint>

namespace bohmsim {

namespace detail {

// splitmix64 output finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based random stream: the state is an affine counter of
// (seed, stream id) and every output is a pure function of (key, counter),
// so streams are reproducible, order-independent and safe to hand out to
// parallel ensemble members (stream id = ensemble index).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(detail::mix64(seed + 0x9e3779b97f4a7c15ULL) ^
             detail::mix64(stream_id * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL)),
        counter_(0) {}

  explicit RandomStream(std::uint64_t seed) : RandomStream(seed, 0) {}

  std::uint64_t next_u64() {
    const std::uint64_t word = key_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
    return detail::mix64(word);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box–Muller; consumes two uniforms per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Exponential inter-arrival with the given rate (> 0).
  double exponential(double rate) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace bohmsim
