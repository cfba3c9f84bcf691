#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "intermulti/dataset.hpp"
#include "intermulti/decouple.hpp"
#include "intermulti/encoder.hpp"
#include "intermulti/fusion.hpp"
#include "intermulti/tensor.hpp"

namespace intermulti {

struct ModelConfig {
  std::size_t d_t = 0, d_v = 0, d_a = 0;  // per-modality feature dims
  std::size_t gru_hidden = 32;
  std::size_t rep_dim = 64;      // unimodal representation width
  std::size_t compact_dim = 16;  // residual/full compaction width
  std::size_t head_hidden = 32;
  Task task = Task::regression;
  std::size_t num_classes = 2;  // classification only
  std::string ablation = "A0";
  std::vector<char> modality_drop;  // zeroed before decoupling (A7-A9)
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;

  std::size_t output_dim() const {
    return task == Task::regression ? 1 : num_classes;
  }
};

void validate_config(const ModelConfig& cfg);

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& json_text);
ModelConfig load_config_file(const std::string& path);

// F0 segment selection resolved from the ablation id.
enum class Segment { shared, spec_interaction, full_interaction };

struct AblationPlan {
  std::vector<Segment> segments;    // F0 layout for A0-A6, A12-A16
  bool concat_all = false;          // A11: S ++ compacted residuals ++ fulls
  FusionSettings fusion;
  std::vector<char> drop;           // implied modality drops (A7-A9)
  bool needs_spec_stream() const;
  bool needs_full_stream() const;
};

AblationPlan resolve_ablation(const std::string& id);

std::size_t head_input_width(const ModelConfig& cfg);

// Value snapshots of one forward pass, for the dependency metric and tests.
struct RepresentationSet {
  std::vector<double> h_t, h_v, h_a;
  std::vector<double> shared;
  std::vector<double> i_t, i_v, i_a;
  std::vector<double> i_tilde_t, i_tilde_v, i_tilde_a;
  std::vector<double> h_tilde_t, h_tilde_v, h_tilde_a;
  std::vector<double> spec_pair1, spec_pair2;  // i_tv, i_ta under text dominance
  std::vector<double> full_pair1, full_pair2;
  std::vector<double> spec_interaction;  // I
  std::vector<double> full_interaction;  // M
  std::vector<double> f0;
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const AblationPlan& plan() const { return plan_; }

  // Named parameters in a fixed order; names are stable across runs with the
  // same config and are the checkpoint keys.
  const std::vector<std::pair<std::string, Tensor>>& params() const {
    return params_;
  }
  std::size_t param_count() const;

  // Scalar prediction (regression) or [K] logits for one sample.
  Tensor forward_sample(const UtteranceSample& sample,
                        RepresentationSet* reps = nullptr) const;

  struct BatchResult {
    std::vector<Tensor> predictions;
    std::vector<RepresentationSet> reps;  // filled when capture_reps
  };
  BatchResult forward(const std::vector<const UtteranceSample*>& batch,
                      bool capture_reps = false) const;

  // Mean loss over the batch: MSE for regression, cross-entropy for
  // classification.
  Tensor loss(const std::vector<Tensor>& predictions,
              const std::vector<const UtteranceSample*>& batch) const;

  void zero_grads();

 private:
  ModelConfig cfg_;
  AblationPlan plan_;
  UnimodalEncoder enc_t_, enc_v_, enc_a_;
  DecoupleParams decouple_;
  ThhfParams thhf_;
  Tensor head_w1_, head_b1_, head_w2_, head_b2_;
  std::vector<std::pair<std::string, Tensor>> params_;

  bool dropped(char modality) const;
};

// Predictions over a whole dataset, batched internally.
std::vector<double> predict_regression(const Model& model,
                                       const FeatureDataset& data);
std::vector<std::size_t> predict_classes(const Model& model,
                                         const FeatureDataset& data);

// RepresentationSets over a dataset (forward only).
std::vector<RepresentationSet> collect_representations(
    const Model& model, const FeatureDataset& data);

}  // namespace intermulti
