#include "intermulti/rng.hpp"

#include <cmath>
#include <numbers>

namespace intermulti {

double Rng::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  // Box-Muller; u1 clamped away from 0.
  double u1 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  have_cached_ = true;
  return r * std::cos(theta);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

Rng derive_stream(std::uint64_t seed, std::string_view purpose) {
  // Mix the purpose hash into the seed through one splitmix round so that
  // streams with nearby seeds stay decorrelated.
  Rng mixer(seed ^ fnv1a(purpose));
  return Rng(mixer.next_u64());
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng, bool requires_grad) {
  std::vector<double> values(numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(values), requires_grad);
}

void shuffle(std::vector<std::size_t>& indices, Rng& rng) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(indices[i - 1], indices[j]);
  }
}

}  // namespace intermulti
