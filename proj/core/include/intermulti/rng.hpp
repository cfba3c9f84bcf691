#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "intermulti/tensor.hpp"

namespace intermulti {

// Deterministic 64-bit generator (splitmix64 core). Distributions are
// hand-rolled so streams are reproducible across standard libraries; one
// run seed fans out into independent named streams for parameter init,
// shuffling and data synthesis.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (cached second draw).
  double normal();

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Stream derived from (seed, purpose); same inputs always give the same
// stream, independent of any other stream drawn from the same seed.
Rng derive_stream(std::uint64_t seed, std::string_view purpose);

// Leaf tensor with i.i.d. uniform(-bound, +bound) entries.
Tensor uniform_tensor(Shape shape, double bound, Rng& rng,
                      bool requires_grad = true);

// In-place Fisher-Yates shuffle.
void shuffle(std::vector<std::size_t>& indices, Rng& rng);

}  // namespace intermulti
