#include "intermulti/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace intermulti {

namespace {

const std::vector<std::string> kKnownAblations = {
    "A0",  "A1",  "A2",  "A3",  "A4",  "A5",  "A6",  "A7",  "A8",
    "A9",  "A10", "A11", "A12", "A13", "A14", "A15", "A16"};

std::vector<double> snapshot(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

}  // namespace

void validate_config(const ModelConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (cfg.d_t == 0 || cfg.d_v == 0 || cfg.d_a == 0)
    fail("feature dims d_t, d_v, d_a must be positive");
  if (cfg.gru_hidden == 0) fail("gru_hidden must be positive");
  if (cfg.rep_dim == 0) fail("rep_dim must be positive");
  if (cfg.compact_dim < 2 || cfg.compact_dim % 2 != 0)
    fail("compact_dim must be even and >= 2 (2x2 pooling)");
  if (cfg.head_hidden == 0) fail("head_hidden must be positive");
  if (cfg.task == Task::classification && cfg.num_classes < 2)
    fail("classification needs num_classes >= 2");
  if (cfg.batch_size == 0) fail("batch_size must be positive");
  if (!(cfg.learning_rate > 0.0)) fail("learning_rate must be positive");
  for (char m : cfg.modality_drop) {
    if (m != 't' && m != 'v' && m != 'a')
      fail(std::string("modality_drop entries must be t, v or a, got '") + m +
           "'");
  }
  if (std::find(kKnownAblations.begin(), kKnownAblations.end(), cfg.ablation) ==
      kKnownAblations.end()) {
    fail("unknown ablation id '" + cfg.ablation + "'");
  }
  resolve_ablation(cfg.ablation);  // rejects A10/A14
}

bool AblationPlan::needs_spec_stream() const {
  if (concat_all) return true;
  return std::find(segments.begin(), segments.end(),
                   Segment::spec_interaction) != segments.end();
}

bool AblationPlan::needs_full_stream() const {
  if (concat_all) return true;
  return std::find(segments.begin(), segments.end(),
                   Segment::full_interaction) != segments.end();
}

AblationPlan resolve_ablation(const std::string& id) {
  using S = Segment;
  AblationPlan plan;
  if (id == "A0") {
    plan.segments = {S::shared, S::spec_interaction, S::full_interaction};
  } else if (id == "A1") {
    plan.segments = {S::shared, S::full_interaction};
  } else if (id == "A2") {
    plan.segments = {S::shared, S::spec_interaction};
  } else if (id == "A3") {
    plan.segments = {S::full_interaction, S::spec_interaction};
  } else if (id == "A4") {
    plan.segments = {S::shared};
  } else if (id == "A5") {
    plan.segments = {S::full_interaction};
  } else if (id == "A6") {
    plan.segments = {S::spec_interaction};
  } else if (id == "A7" || id == "A8" || id == "A9") {
    plan.segments = {S::shared, S::spec_interaction, S::full_interaction};
    plan.drop = {id == "A7" ? 't' : id == "A8" ? 'v' : 'a'};
  } else if (id == "A10") {
    throw ConfigError(
        "ablation A10 (orthogonality-constraint decoupling) is not "
        "implemented");
  } else if (id == "A11") {
    plan.concat_all = true;
  } else if (id == "A12") {
    plan.segments = {S::shared, S::spec_interaction, S::full_interaction};
    plan.fusion.combine = BlockCombine::concat_fc;
  } else if (id == "A13") {
    plan.segments = {S::shared, S::spec_interaction, S::full_interaction};
    plan.fusion.gated = false;
  } else if (id == "A14") {
    throw ConfigError(
        "ablation A14 (co-attention fusion) is not implemented");
  } else if (id == "A15" || id == "A16") {
    plan.segments = {S::shared, S::spec_interaction, S::full_interaction};
    plan.fusion.dominant = id == "A15" ? 'v' : 'a';
  } else {
    throw ConfigError("unknown ablation id '" + id + "'");
  }
  return plan;
}

std::size_t head_input_width(const ModelConfig& cfg) {
  const AblationPlan plan = resolve_ablation(cfg.ablation);
  if (plan.concat_all) return cfg.rep_dim + 6 * cfg.compact_dim;
  std::size_t width = 0;
  for (Segment s : plan.segments) {
    width += s == Segment::shared ? cfg.rep_dim : cfg.compact_dim;
  }
  return width;
}

// ---- config JSON ------------------------------------------------------------

std::string config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["d_t"] = cfg.d_t;
  j["d_v"] = cfg.d_v;
  j["d_a"] = cfg.d_a;
  j["gru_hidden"] = cfg.gru_hidden;
  j["rep_dim"] = cfg.rep_dim;
  j["compact_dim"] = cfg.compact_dim;
  j["head_hidden"] = cfg.head_hidden;
  j["task"] = task_name(cfg.task);
  j["num_classes"] = cfg.num_classes;
  j["ablation"] = cfg.ablation;
  std::vector<std::string> drops;
  for (char m : cfg.modality_drop) drops.emplace_back(1, m);
  j["modality_drop"] = drops;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["patience"] = cfg.patience;
  j["max_epochs"] = cfg.max_epochs;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

ModelConfig config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ModelConfig cfg;
  auto take = [&j](const char* key, auto& field, bool required = false) {
    if (!j.contains(key)) {
      if (required) throw ConfigError(std::string("config: missing field '") +
                                      key + "'");
      return;
    }
    try {
      field = j.at(key).get<std::decay_t<decltype(field)>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: field '") + key +
                        "' has the wrong type");
    }
  };
  take("d_t", cfg.d_t, true);
  take("d_v", cfg.d_v, true);
  take("d_a", cfg.d_a, true);
  take("gru_hidden", cfg.gru_hidden);
  take("rep_dim", cfg.rep_dim);
  take("compact_dim", cfg.compact_dim);
  take("head_hidden", cfg.head_hidden);
  if (j.contains("task")) cfg.task = task_from_name(j["task"].get<std::string>());
  take("num_classes", cfg.num_classes);
  take("ablation", cfg.ablation);
  if (j.contains("modality_drop")) {
    cfg.modality_drop.clear();
    for (const auto& item : j["modality_drop"]) {
      const std::string s = item.get<std::string>();
      if (s.size() != 1) throw ConfigError("config: modality_drop entries must be single characters");
      cfg.modality_drop.push_back(s[0]);
    }
  }
  take("learning_rate", cfg.learning_rate);
  take("batch_size", cfg.batch_size);
  take("patience", cfg.patience);
  take("max_epochs", cfg.max_epochs);
  take("seed", cfg.seed);
  validate_config(cfg);
  return cfg;
}

ModelConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  try {
    return config_from_json(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---- model ------------------------------------------------------------------

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  validate_config(cfg_);
  plan_ = resolve_ablation(cfg_.ablation);
  for (char m : cfg_.modality_drop) {
    if (std::find(plan_.drop.begin(), plan_.drop.end(), m) == plan_.drop.end())
      plan_.drop.push_back(m);
  }

  Rng rng = derive_stream(cfg_.seed, "params");
  enc_t_ = make_encoder('t', cfg_.d_t, cfg_.gru_hidden, cfg_.rep_dim, rng);
  enc_v_ = make_encoder('v', cfg_.d_v, cfg_.gru_hidden, cfg_.rep_dim, rng);
  enc_a_ = make_encoder('a', cfg_.d_a, cfg_.gru_hidden, cfg_.rep_dim, rng);
  collect_params(enc_t_, "enc_t", params_);
  collect_params(enc_v_, "enc_v", params_);
  collect_params(enc_a_, "enc_a", params_);

  const bool spec_stream = plan_.needs_spec_stream();
  const bool full_stream = plan_.needs_full_stream();
  if (spec_stream || full_stream) {
    decouple_ = make_decouple_params(cfg_.rep_dim, cfg_.compact_dim, rng);
    // Register only the compaction FCs of streams the plan consumes, so the
    // parameter count tracks the active architecture.
    auto push = [&](const CompactFc& fc, const std::string& name) {
      params_.emplace_back("decouple." + name + ".w", fc.w);
      params_.emplace_back("decouple." + name + ".b", fc.b);
    };
    if (spec_stream) {
      push(decouple_.spec_t, "spec_t");
      push(decouple_.spec_v, "spec_v");
      push(decouple_.spec_a, "spec_a");
    }
    if (full_stream) {
      push(decouple_.full_t, "full_t");
      push(decouple_.full_v, "full_v");
      push(decouple_.full_a, "full_a");
    }
  }

  if (!plan_.concat_all) {
    if (spec_stream) {
      thhf_.specific = make_branch(cfg_.compact_dim, plan_.fusion.combine, rng);
      collect_params(thhf_.specific, "thhf.spec", params_);
    }
    if (full_stream) {
      thhf_.full = make_branch(cfg_.compact_dim, plan_.fusion.combine, rng);
      collect_params(thhf_.full, "thhf.full", params_);
    }
  }

  const std::size_t f0 = head_input_width(cfg_);
  const std::size_t hh = cfg_.head_hidden;
  const std::size_t out = cfg_.output_dim();
  head_w1_ = uniform_tensor({hh, f0}, 1.0 / std::sqrt(double(f0)), rng);
  head_b1_ = Tensor::zeros({hh}, true);
  head_w2_ = uniform_tensor({out, hh}, 1.0 / std::sqrt(double(hh)), rng);
  head_b2_ = Tensor::zeros({out}, true);
  params_.emplace_back("head.w1", head_w1_);
  params_.emplace_back("head.b1", head_b1_);
  params_.emplace_back("head.w2", head_w2_);
  params_.emplace_back("head.b2", head_b2_);
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

bool Model::dropped(char modality) const {
  return std::find(plan_.drop.begin(), plan_.drop.end(), modality) !=
         plan_.drop.end();
}

Tensor Model::forward_sample(const UtteranceSample& sample,
                             RepresentationSet* reps) const {
  auto encode_modality = [&](const UnimodalEncoder& enc, char m,
                             const std::vector<double>& feats,
                             std::size_t len, std::size_t dim) -> Tensor {
    if (dropped(m)) return Tensor::constant({cfg_.rep_dim}, 0.0);
    if (dim != enc.input_dim() || feats.size() != len * dim) {
      throw ShapeError(std::string("forward: modality '") + m + "' features " +
                       std::to_string(feats.size()) + " do not match L=" +
                       std::to_string(len) + ", D=" + std::to_string(dim));
    }
    const Tensor seq = Tensor::from({len, dim}, feats);
    return encode(enc, seq, len);
  };

  const Tensor h_t =
      encode_modality(enc_t_, 't', sample.text, sample.len_t, cfg_.d_t);
  const Tensor h_v =
      encode_modality(enc_v_, 'v', sample.visual, sample.len_v, cfg_.d_v);
  const Tensor h_a =
      encode_modality(enc_a_, 'a', sample.acoustic, sample.len_a, cfg_.d_a);

  const SelfDecoupled dec = self_decouple(h_t, h_v, h_a);

  Tensor ci_t, ci_v, ci_a;  // compacted residuals
  Tensor ch_t, ch_v, ch_a;  // compacted fulls
  if (plan_.needs_spec_stream()) {
    ci_t = compact(decouple_.spec_t, dec.i_t);
    ci_v = compact(decouple_.spec_v, dec.i_v);
    ci_a = compact(decouple_.spec_a, dec.i_a);
  }
  if (plan_.needs_full_stream()) {
    ch_t = compact(decouple_.full_t, h_t);
    ch_v = compact(decouple_.full_v, h_v);
    ch_a = compact(decouple_.full_a, h_a);
  }

  BranchResult spec_branch, full_branch;
  Tensor f0;
  if (plan_.concat_all) {
    const Tensor parts[7] = {dec.shared, ci_t, ci_v, ci_a, ch_t, ch_v, ch_a};
    f0 = concat(parts, 0);
  } else {
    if (plan_.needs_spec_stream())
      spec_branch = run_branch(ci_t, ci_v, ci_a, thhf_.specific, plan_.fusion);
    if (plan_.needs_full_stream())
      full_branch = run_branch(ch_t, ch_v, ch_a, thhf_.full, plan_.fusion);

    std::vector<Tensor> parts;
    for (Segment s : plan_.segments) {
      switch (s) {
        case Segment::shared: parts.push_back(dec.shared); break;
        case Segment::spec_interaction: parts.push_back(spec_branch.merged); break;
        case Segment::full_interaction: parts.push_back(full_branch.merged); break;
      }
    }
    f0 = parts.size() == 1 ? parts[0] : concat(parts, 0);
  }

  const Tensor hidden = relu(add(matvec(head_w1_, f0), head_b1_));
  const Tensor out = add(matvec(head_w2_, hidden), head_b2_);

  if (reps) {
    reps->h_t = snapshot(h_t);
    reps->h_v = snapshot(h_v);
    reps->h_a = snapshot(h_a);
    reps->shared = snapshot(dec.shared);
    reps->i_t = snapshot(dec.i_t);
    reps->i_v = snapshot(dec.i_v);
    reps->i_a = snapshot(dec.i_a);
    if (ci_t.defined()) {
      reps->i_tilde_t = snapshot(ci_t);
      reps->i_tilde_v = snapshot(ci_v);
      reps->i_tilde_a = snapshot(ci_a);
    }
    if (ch_t.defined()) {
      reps->h_tilde_t = snapshot(ch_t);
      reps->h_tilde_v = snapshot(ch_v);
      reps->h_tilde_a = snapshot(ch_a);
    }
    if (spec_branch.merged.defined()) {
      reps->spec_pair1 = snapshot(spec_branch.fused1);
      reps->spec_pair2 = snapshot(spec_branch.fused2);
      reps->spec_interaction = snapshot(spec_branch.merged);
    }
    if (full_branch.merged.defined()) {
      reps->full_pair1 = snapshot(full_branch.fused1);
      reps->full_pair2 = snapshot(full_branch.fused2);
      reps->full_interaction = snapshot(full_branch.merged);
    }
    reps->f0 = snapshot(f0);
  }
  return out;
}

Model::BatchResult Model::forward(
    const std::vector<const UtteranceSample*>& batch, bool capture_reps) const {
  if (batch.empty()) throw DataError("forward: empty batch");
  BatchResult result;
  result.predictions.reserve(batch.size());
  if (capture_reps) result.reps.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    result.predictions.push_back(forward_sample(
        *batch[i], capture_reps ? &result.reps[i] : nullptr));
  }
  return result;
}

Tensor Model::loss(const std::vector<Tensor>& predictions,
                   const std::vector<const UtteranceSample*>& batch) const {
  if (predictions.empty() || predictions.size() != batch.size()) {
    throw DataError("loss: prediction/batch size mismatch");
  }
  if (cfg_.task == Task::regression) {
    const Tensor preds = predictions.size() == 1
                             ? predictions[0]
                             : concat(predictions, 0);
    std::vector<double> labels(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = batch[i]->label;
    return mse(preds, Tensor::from({labels.size()}, std::move(labels)));
  }
  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::uint16_t cls = batch[i]->label_class;
    if (cls >= cfg_.num_classes) {
      throw DataError("loss: class id " + std::to_string(cls) +
                      " out of range for " + std::to_string(cfg_.num_classes) +
                      " classes");
    }
    losses.push_back(softmax_cross_entropy(predictions[i], cls));
  }
  return losses.size() == 1 ? losses[0] : mean(concat(losses, 0), 0);
}

void Model::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

std::vector<double> predict_regression(const Model& model,
                                       const FeatureDataset& data) {
  if (model.config().task != Task::regression) {
    throw ConfigError("predict_regression on a classification model");
  }
  std::vector<double> out;
  out.reserve(data.size());
  for (const UtteranceSample& s : data.samples) {
    out.push_back(model.forward_sample(s).item());
  }
  return out;
}

std::vector<std::size_t> predict_classes(const Model& model,
                                         const FeatureDataset& data) {
  if (model.config().task != Task::classification) {
    throw ConfigError("predict_classes on a regression model");
  }
  std::vector<std::size_t> out;
  out.reserve(data.size());
  for (const UtteranceSample& s : data.samples) {
    const Tensor logits = model.forward_sample(s);
    const auto vals = logits.values();
    std::size_t best = 0;
    for (std::size_t k = 1; k < vals.size(); ++k)
      if (vals[k] > vals[best]) best = k;
    out.push_back(best);
  }
  return out;
}

std::vector<RepresentationSet> collect_representations(
    const Model& model, const FeatureDataset& data) {
  if (data.empty()) throw DataError("collect_representations: empty dataset");
  std::vector<RepresentationSet> reps(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.forward_sample(data.samples[i], &reps[i]);
  }
  return reps;
}

}  // namespace intermulti
