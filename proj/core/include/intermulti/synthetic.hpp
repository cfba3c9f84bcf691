#pragma once

#include <cstdint>

#include "intermulti/dataset.hpp"

namespace intermulti {

// Planted-interaction benchmark. Per sample, a shared latent z and
// per-modality latents z_t, z_v, z_a are drawn N(0,1); each modality's
// sequence is a fixed random linear embedding of (z, z_m) plus N(0, sigma^2)
// noise. The label mixes the shared factor, the per-modality factors and a
// text-visual product term that no linear readout of the features can
// capture:
//   raw   = alpha*z + beta_t*(z_t*z_v) + beta_t*z_t + beta_v*z_v + beta_a*z_a
//   label = 3 * tanh(raw / 3)
struct SyntheticSpec {
  std::size_t n_samples = 5000;
  std::size_t d_t = 6, d_v = 5, d_a = 4;
  std::size_t len_t = 4, len_v = 3, len_a = 3;
  double alpha = 0.6;
  double beta_t = 1.0, beta_v = 0.4, beta_a = 0.3;
  double sigma = 0.1;
  std::uint64_t seed = 42;
};

void validate_spec(const SyntheticSpec& spec);

double synthetic_label(const SyntheticSpec& spec, double z, double z_t,
                       double z_v, double z_a);

struct SyntheticSplits {
  FeatureDataset train, val, test;  // fixed 70/15/15 partition
};

SyntheticSplits generate_synthetic(const SyntheticSpec& spec);

}  // namespace intermulti
