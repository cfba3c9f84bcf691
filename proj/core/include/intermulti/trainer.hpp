#pragma once

#include <cstddef>
#include <vector>

#include "intermulti/dataset.hpp"
#include "intermulti/model.hpp"

namespace intermulti {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) at the configured learning rate
// and batch size, gradient clipping at global norm 5, early stopping on
// validation loss with the configured patience. The best parameters are
// restored before returning. Shuffling draws from the run seed's "shuffle"
// stream, so identical (config, seed, data) reproduce the log exactly.
//
// Throws NumericError (naming the first offending op) if the loss or any
// intermediate value goes non-finite.
TrainResult train(Model& model, const FeatureDataset& train_split,
                  const FeatureDataset& val_split);

// Mean loss of the model over a dataset, batched, forward only.
double evaluate_loss(const Model& model, const FeatureDataset& data);

}  // namespace intermulti
