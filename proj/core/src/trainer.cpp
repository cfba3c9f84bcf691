#include "intermulti/trainer.hpp"

#include <cmath>

#include "intermulti/rng.hpp"

namespace intermulti {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kClipNorm = 5.0;

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::size_t step = 0;

  explicit AdamState(const std::vector<std::pair<std::string, Tensor>>& params) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& [name, t] : params) {
      m.emplace_back(t.size(), 0.0);
      v.emplace_back(t.size(), 0.0);
    }
  }
};

void clip_global_norm(const std::vector<std::pair<std::string, Tensor>>& params) {
  double sq = 0.0;
  for (const auto& [name, t] : params) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= kClipNorm) return;
  const double s = kClipNorm / norm;
  for (const auto& [name, t] : params) {
    for (double& g : t.grad_mut()) g *= s;
  }
}

void adam_step(const std::vector<std::pair<std::string, Tensor>>& params,
               AdamState& state, double lr) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(kBeta1, double(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, double(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].second.values_mut();
    auto grads = params[p].second.grad();
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
  }
}

std::vector<std::vector<double>> snapshot_params(
    const std::vector<std::pair<std::string, Tensor>>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params)
    out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

void restore_params(const std::vector<std::pair<std::string, Tensor>>& params,
                    const std::vector<std::vector<double>>& snapshot) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].second.values_mut();
    std::copy(snapshot[p].begin(), snapshot[p].end(), values.begin());
  }
}

// Restores the previous finite-check flag on scope exit.
struct FiniteCheckScope {
  bool previous;
  explicit FiniteCheckScope(bool enable) : previous(finite_checks_enabled()) {
    set_finite_checks(enable);
  }
  ~FiniteCheckScope() { set_finite_checks(previous); }
};

}  // namespace

double evaluate_loss(const Model& model, const FeatureDataset& data) {
  if (data.empty()) throw DataError("evaluate_loss: empty dataset");
  const std::size_t batch_size = model.config().batch_size;
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, data.size());
    std::vector<const UtteranceSample*> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(&data.samples[i]);
    const auto result = model.forward(batch);
    const double loss = model.loss(result.predictions, batch).item();
    total += loss * double(batch.size());
  }
  return total / double(data.size());
}

TrainResult train(Model& model, const FeatureDataset& train_split,
                  const FeatureDataset& val_split) {
  if (train_split.empty()) throw DataError("train: empty training split");
  if (val_split.empty()) throw DataError("train: empty validation split");

  FiniteCheckScope finite_guard(true);

  const auto& params = model.params();
  AdamState adam(params);
  const ModelConfig& cfg = model.config();
  Rng shuffle_rng = derive_stream(cfg.seed, "shuffle");

  std::vector<std::size_t> indices(train_split.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_params = snapshot_params(params);
  std::size_t epochs_since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(indices, shuffle_rng);

    double train_loss_acc = 0.0;
    for (std::size_t start = 0; start < indices.size();
         start += cfg.batch_size) {
      const std::size_t end =
          std::min(start + cfg.batch_size, indices.size());
      std::vector<const UtteranceSample*> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(&train_split.samples[indices[i]]);

      model.zero_grads();
      const auto fwd = model.forward(batch);
      const Tensor loss = model.loss(fwd.predictions, batch);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw NumericError("loss", "training diverged: non-finite batch loss");
      }
      train_loss_acc += loss_value * double(batch.size());
      loss.backward();
      clip_global_norm(params);
      adam_step(params, adam, cfg.learning_rate);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = train_loss_acc / double(indices.size());
    record.val_loss = evaluate_loss(model, val_split);
    result.log.push_back(record);

    if (record.val_loss < best_val) {
      best_val = record.val_loss;
      best_params = snapshot_params(params);
      result.best_epoch = epoch;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= cfg.patience) {
        result.early_stopped = true;
        break;
      }
    }
  }

  restore_params(params, best_params);
  result.best_val_loss = best_val;
  return result;
}

}  // namespace intermulti
