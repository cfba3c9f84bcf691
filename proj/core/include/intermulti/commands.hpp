#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "intermulti/dataset.hpp"
#include "intermulti/metrics.hpp"
#include "intermulti/model.hpp"
#include "intermulti/synthetic.hpp"

namespace intermulti::commands {

// Closed-form least-squares readout on concatenated per-modality time-mean
// feature vectors (plus intercept), fit on the training split. Serves as
// the reference bar the trained model is expected to beat on the synthetic
// benchmark.
struct LinearBaseline {
  std::vector<double> weights;  // last entry is the intercept
  double train_mse = 0.0;
  double val_mse = 0.0;
  std::optional<double> test_mse;
};

LinearBaseline fit_linear_baseline(const FeatureDataset& train,
                                   const FeatureDataset& val,
                                   const FeatureDataset* test);

// Trains per the config, writes checkpoint.imcp, run_record.json and
// epochs.csv into out_dir, and returns the run record document. The record
// is byte-stable across identical (config, seed, data) runs except for the
// wall_clock_seconds field.
struct TrainOutcome {
  std::string record_json;
  std::filesystem::path checkpoint_path;
  double best_val_loss = 0.0;
};

TrainOutcome cmd_train(const ModelConfig& cfg,
                       const std::filesystem::path& manifest,
                       const std::filesystem::path& out_dir);

// Metric report of a checkpoint over one split; writes eval_<split>.json.
std::string cmd_eval(const std::filesystem::path& checkpoint,
                     const std::filesystem::path& manifest,
                     const std::string& split,
                     const std::filesystem::path& out_dir);

// Trains every ablation id with identical data and seed, one run directory
// each, and writes an ablate.csv table (rows = ablation ids in input order).
// `parallel` > 1 trains runs on worker threads; outputs are identical to a
// sequential run.
struct AblateOutcome {
  std::string csv;
  std::vector<std::string> record_jsons;  // in input id order
};

AblateOutcome cmd_ablate(const std::vector<std::string>& ablation_ids,
                         const ModelConfig& base_cfg,
                         const std::filesystem::path& manifest,
                         const std::filesystem::path& out_dir,
                         std::size_t parallel = 1);

// Mean |dot| of the six decoupled-representation pairs over a split,
// computed on the native-width residuals and shared vector. Writes
// depmetric.json with exactly the keys
// {ia_it, ia_iv, it_iv, ia_S, it_S, iv_S}.
std::string cmd_depmetric(const std::filesystem::path& checkpoint,
                          const std::filesystem::path& manifest,
                          const std::string& split,
                          const std::filesystem::path& out_dir);

// Generates the synthetic benchmark splits, writes train/val/test
// containers plus manifest.jsonl into out_dir, and returns a summary.
std::string cmd_synth(const SyntheticSpec& spec,
                      const std::filesystem::path& out_dir);

// Shared helpers used by the CLI and tests.
std::string metrics_to_json(const MetricReport& report);
bool manifest_has_split(const std::filesystem::path& manifest,
                        const std::string& split);

}  // namespace intermulti::commands
