#include "intermulti/synthetic.hpp"

#include <cmath>

#include "intermulti/rng.hpp"

namespace intermulti {

void validate_spec(const SyntheticSpec& spec) {
  auto fail = [](const std::string& msg) {
    throw ConfigError("synthetic spec: " + msg);
  };
  if (spec.n_samples < 10) fail("n_samples must be at least 10");
  if (spec.d_t == 0 || spec.d_v == 0 || spec.d_a == 0)
    fail("feature dims must be positive");
  if (spec.len_t == 0 || spec.len_v == 0 || spec.len_a == 0)
    fail("sequence lengths must be positive");
  if (spec.alpha < 0 || spec.beta_t < 0 || spec.beta_v < 0 || spec.beta_a < 0)
    fail("factor weights must be non-negative");
  if (spec.alpha == 0 && spec.beta_t == 0 && spec.beta_v == 0 &&
      spec.beta_a == 0)
    fail("at least one factor weight must be positive");
  if (spec.sigma < 0) fail("sigma must be non-negative");
}

double synthetic_label(const SyntheticSpec& spec, double z, double z_t,
                       double z_v, double z_a) {
  const double raw = spec.alpha * z + spec.beta_t * (z_t * z_v) +
                     spec.beta_t * z_t + spec.beta_v * z_v +
                     spec.beta_a * z_a;
  return 3.0 * std::tanh(raw / 3.0);
}

SyntheticSplits generate_synthetic(const SyntheticSpec& spec) {
  validate_spec(spec);

  // Embeddings are drawn once and shared by every sample, so the latents
  // stay recoverable from the features.
  Rng embed_rng = derive_stream(spec.seed, "synth.embed");
  auto make_embedding = [&](std::size_t len, std::size_t dim) {
    std::vector<double> e(len * dim * 2);
    const double s = 1.0 / std::sqrt(2.0);
    for (double& v : e) v = s * embed_rng.normal();
    return e;
  };
  const auto embed_t = make_embedding(spec.len_t, spec.d_t);
  const auto embed_v = make_embedding(spec.len_v, spec.d_v);
  const auto embed_a = make_embedding(spec.len_a, spec.d_a);

  Rng latent_rng = derive_stream(spec.seed, "synth.latent");
  Rng noise_rng = derive_stream(spec.seed, "synth.noise");

  const std::size_t n = spec.n_samples;
  const std::size_t n_train = std::size_t(std::llround(0.70 * double(n)));
  const std::size_t n_val = std::size_t(std::llround(0.15 * double(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw ConfigError("synthetic spec: n_samples too small for 70/15/15 split");
  }

  SyntheticSplits out;
  auto init = [&](FeatureDataset& d, const char* split) {
    d.d_t = spec.d_t;
    d.d_v = spec.d_v;
    d.d_a = spec.d_a;
    d.task = Task::regression;
    d.split = split;
  };
  init(out.train, "train");
  init(out.val, "val");
  init(out.test, "test");

  auto emit_features = [&](const std::vector<double>& embedding,
                           std::size_t len, std::size_t dim, double z,
                           double z_m) {
    std::vector<double> feats(len * dim);
    for (std::size_t i = 0; i < feats.size(); ++i) {
      feats[i] = embedding[2 * i] * z + embedding[2 * i + 1] * z_m +
                 spec.sigma * noise_rng.normal();
    }
    return feats;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const double z = latent_rng.normal();
    const double z_t = latent_rng.normal();
    const double z_v = latent_rng.normal();
    const double z_a = latent_rng.normal();

    UtteranceSample s;
    s.len_t = spec.len_t;
    s.len_v = spec.len_v;
    s.len_a = spec.len_a;
    s.text = emit_features(embed_t, spec.len_t, spec.d_t, z, z_t);
    s.visual = emit_features(embed_v, spec.len_v, spec.d_v, z, z_v);
    s.acoustic = emit_features(embed_a, spec.len_a, spec.d_a, z, z_a);
    s.label = synthetic_label(spec, z, z_t, z_v, z_a);

    FeatureDataset& target = i < n_train           ? out.train
                             : i < n_train + n_val ? out.val
                                                   : out.test;
    target.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace intermulti
