#include "intermulti/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "intermulti/checkpoint.hpp"
#include "intermulti/trainer.hpp"

namespace intermulti::commands {

namespace {

using nlohmann::json;

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc | std::ios::binary);
    if (!os) throw DataError("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Per-modality time-mean feature vectors concatenated, plus intercept.
std::vector<double> mean_features(const UtteranceSample& s,
                                  const FeatureDataset& d) {
  std::vector<double> x;
  x.reserve(d.d_t + d.d_v + d.d_a + 1);
  auto push_means = [&x](const std::vector<double>& feats, std::size_t len,
                         std::size_t dim) {
    for (std::size_t j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < len; ++t) acc += feats[t * dim + j];
      x.push_back(acc / double(len));
    }
  };
  push_means(s.text, s.len_t, d.d_t);
  push_means(s.visual, s.len_v, d.d_v);
  push_means(s.acoustic, s.len_a, d.d_a);
  x.push_back(1.0);
  return x;
}

// Solves (A + ridge*I) w = b in place; A must be symmetric positive definite.
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b,
                                   std::size_t n) {
  const double ridge = 1e-9;
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] += ridge;

  // Lower-triangular factorization.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (s <= 0.0) throw NumericError("cholesky", "baseline normal equations are not positive definite");
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
  }
  // Forward then backward substitution.
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return b;
}

double baseline_mse(const std::vector<double>& w, const FeatureDataset& d) {
  double acc = 0.0;
  for (const UtteranceSample& s : d.samples) {
    const std::vector<double> x = mean_features(s, d);
    double pred = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) pred += w[i] * x[i];
    const double diff = pred - s.label;
    acc += diff * diff;
  }
  return acc / double(d.size());
}

json regression_metrics_json(const RegressionMetrics& m) {
  return json{{"mae", m.mae},
              {"corr", m.corr},
              {"acc7", m.acc7},
              {"acc2_nonneg", m.acc2_nonneg},
              {"f1_nonneg", m.f1_nonneg},
              {"acc2_strict", m.acc2_strict},
              {"f1_strict", m.f1_strict}};
}

json metrics_json(const MetricReport& report) {
  if (report.task == Task::regression) {
    return regression_metrics_json(report.regression);
  }
  json per_class = json::array();
  for (const ClassMetrics& c : report.per_class) {
    per_class.push_back(json{{"acc2", c.acc2}, {"f1", c.f1}});
  }
  return json{{"per_class", per_class}};
}

MetricReport dataset_metrics(const Model& model, const FeatureDataset& data) {
  if (model.config().task == Task::regression) {
    std::vector<double> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      labels[i] = data.samples[i].label;
    return regression_metrics(predict_regression(model, data), labels);
  }
  std::vector<std::uint16_t> labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    labels[i] = data.samples[i].label_class;
  return classification_metrics(predict_classes(model, data), labels,
                                model.config().num_classes);
}

json dependency_json(const Model& model, const FeatureDataset& data) {
  const auto reps = collect_representations(model, data);
  auto pair_value = [&reps](auto member_u, auto member_v) {
    std::vector<std::vector<double>> us, vs;
    us.reserve(reps.size());
    vs.reserve(reps.size());
    for (const RepresentationSet& r : reps) {
      us.push_back(r.*member_u);
      vs.push_back(r.*member_v);
    }
    return mean_abs_dot(us, vs);
  };
  using R = RepresentationSet;
  return json{{"ia_it", pair_value(&R::i_a, &R::i_t)},
              {"ia_iv", pair_value(&R::i_a, &R::i_v)},
              {"it_iv", pair_value(&R::i_t, &R::i_v)},
              {"ia_S", pair_value(&R::i_a, &R::shared)},
              {"it_S", pair_value(&R::i_t, &R::shared)},
              {"iv_S", pair_value(&R::i_v, &R::shared)}};
}

void require_compatible(const ModelConfig& cfg, const FeatureDataset& data) {
  if (cfg.d_t != data.d_t || cfg.d_v != data.d_v || cfg.d_a != data.d_a) {
    throw DataError("dataset dims (d_t=" + std::to_string(data.d_t) +
                    ", d_v=" + std::to_string(data.d_v) +
                    ", d_a=" + std::to_string(data.d_a) +
                    ") do not match the config (d_t=" +
                    std::to_string(cfg.d_t) + ", d_v=" +
                    std::to_string(cfg.d_v) + ", d_a=" +
                    std::to_string(cfg.d_a) + ")");
  }
  if (cfg.task != data.task) {
    throw DataError("dataset labels are " + task_name(data.task) +
                    " but the config task is " + task_name(cfg.task));
  }
}

std::string epochs_csv(const std::vector<EpochRecord>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_loss\n";
  for (const EpochRecord& r : log) {
    os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << '\n';
  }
  return os.str();
}

}  // namespace

std::string metrics_to_json(const MetricReport& report) {
  return metrics_json(report).dump(2);
}

bool manifest_has_split(const std::filesystem::path& manifest,
                        const std::string& split) {
  for (const ManifestEntry& e : read_manifest(manifest)) {
    if (e.split == split) return true;
  }
  return false;
}

LinearBaseline fit_linear_baseline(const FeatureDataset& train,
                                   const FeatureDataset& val,
                                   const FeatureDataset* test) {
  if (train.empty()) throw DataError("linear baseline: empty training split");
  const std::size_t dim = train.d_t + train.d_v + train.d_a + 1;

  std::vector<double> xtx(dim * dim, 0.0), xty(dim, 0.0);
  for (const UtteranceSample& s : train.samples) {
    const std::vector<double> x = mean_features(s, train);
    for (std::size_t i = 0; i < dim; ++i) {
      xty[i] += x[i] * s.label;
      for (std::size_t j = 0; j <= i; ++j) xtx[i * dim + j] += x[i] * x[j];
    }
  }
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) xtx[i * dim + j] = xtx[j * dim + i];

  LinearBaseline out;
  out.weights = cholesky_solve(std::move(xtx), std::move(xty), dim);
  out.train_mse = baseline_mse(out.weights, train);
  out.val_mse = baseline_mse(out.weights, val);
  if (test) out.test_mse = baseline_mse(out.weights, *test);
  return out;
}

TrainOutcome cmd_train(const ModelConfig& cfg,
                       const std::filesystem::path& manifest,
                       const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  validate_config(cfg);
  std::filesystem::create_directories(out_dir);

  const FeatureDataset train_split = load_dataset(manifest, "train");
  const FeatureDataset val_split = load_dataset(manifest, "val");
  require_compatible(cfg, train_split);
  require_compatible(cfg, val_split);
  std::optional<FeatureDataset> test_split;
  if (manifest_has_split(manifest, "test")) {
    test_split = load_dataset(manifest, "test");
    require_compatible(cfg, *test_split);
  }

  Model model(cfg);
  const TrainResult trained = train(model, train_split, val_split);

  json record;
  record["config"] = json::parse(config_to_json(cfg));
  record["seed"] = cfg.seed;
  json epochs = json::array();
  for (const EpochRecord& r : trained.log) {
    epochs.push_back(json{{"epoch", r.epoch},
                          {"train_loss", r.train_loss},
                          {"val_loss", r.val_loss}});
  }
  record["epochs"] = epochs;
  record["best_val_loss"] = trained.best_val_loss;
  record["best_epoch"] = trained.best_epoch;
  record["early_stopped"] = trained.early_stopped;

  json metrics;
  metrics["train"] = metrics_json(dataset_metrics(model, train_split));
  metrics["val"] = metrics_json(dataset_metrics(model, val_split));
  if (test_split) {
    metrics["test"] = metrics_json(dataset_metrics(model, *test_split));
  }
  record["metrics"] = metrics;

  if (cfg.task == Task::regression) {
    const LinearBaseline baseline = fit_linear_baseline(
        train_split, val_split, test_split ? &*test_split : nullptr);
    json b{{"train_mse", baseline.train_mse}, {"val_mse", baseline.val_mse}};
    if (baseline.test_mse) b["test_mse"] = *baseline.test_mse;
    record["linear_baseline"] = b;
  }

  record["dependency"] =
      dependency_json(model, test_split ? *test_split : val_split);

  const auto elapsed = std::chrono::steady_clock::now() - start;
  record["wall_clock_seconds"] =
      std::chrono::duration<double>(elapsed).count();

  TrainOutcome outcome;
  outcome.record_json = record.dump(2);
  outcome.checkpoint_path = out_dir / "checkpoint.imcp";
  outcome.best_val_loss = trained.best_val_loss;

  save_checkpoint(outcome.checkpoint_path, model);
  write_text_atomic(out_dir / "run_record.json", outcome.record_json);
  write_text_atomic(out_dir / "epochs.csv", epochs_csv(trained.log));
  return outcome;
}

std::string cmd_eval(const std::filesystem::path& checkpoint,
                     const std::filesystem::path& manifest,
                     const std::string& split,
                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Model model = load_checkpoint(checkpoint);
  const FeatureDataset data = load_dataset(manifest, split);
  require_compatible(model.config(), data);

  json result;
  result["split"] = split;
  result["n_samples"] = data.size();
  result["metrics"] = metrics_json(dataset_metrics(model, data));
  result["loss"] = evaluate_loss(model, data);
  const std::string text = result.dump(2);
  write_text_atomic(out_dir / ("eval_" + split + ".json"), text);
  return text;
}

AblateOutcome cmd_ablate(const std::vector<std::string>& ablation_ids,
                         const ModelConfig& base_cfg,
                         const std::filesystem::path& manifest,
                         const std::filesystem::path& out_dir,
                         std::size_t parallel) {
  if (ablation_ids.empty()) throw ConfigError("ablate: empty ablation grid");
  // Reject unknown or unimplemented ids before any training starts.
  for (const std::string& id : ablation_ids) resolve_ablation(id);
  std::filesystem::create_directories(out_dir);

  std::vector<ModelConfig> configs;
  configs.reserve(ablation_ids.size());
  for (const std::string& id : ablation_ids) {
    ModelConfig cfg = base_cfg;
    cfg.ablation = id;
    validate_config(cfg);
    configs.push_back(std::move(cfg));
  }

  std::vector<TrainOutcome> outcomes(ablation_ids.size());
  std::vector<std::exception_ptr> failures(ablation_ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ablation_ids.size()) return;
      try {
        outcomes[i] =
            cmd_train(configs[i], manifest, out_dir / ablation_ids[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (parallel <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    const std::size_t n_threads = std::min(parallel, ablation_ids.size());
    threads.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  // Table rows in input order; metric columns follow the run records.
  std::ostringstream csv;
  csv.precision(17);
  const bool regression = base_cfg.task == Task::regression;
  if (regression) {
    csv << "ablation,best_val_loss,mae,corr,acc7,acc2_nonneg,f1_nonneg,"
           "acc2_strict,f1_strict\n";
  } else {
    csv << "ablation,best_val_loss";
    for (std::size_t k = 0; k < base_cfg.num_classes; ++k) {
      csv << ",class" << k << "_acc2,class" << k << "_f1";
    }
    csv << '\n';
  }
  AblateOutcome result;
  for (std::size_t i = 0; i < ablation_ids.size(); ++i) {
    const json record = json::parse(outcomes[i].record_json);
    const json& metrics = record["metrics"].contains("test")
                              ? record["metrics"]["test"]
                              : record["metrics"]["val"];
    csv << ablation_ids[i] << ',' << record["best_val_loss"].get<double>();
    if (regression) {
      for (const char* key : {"mae", "corr", "acc7", "acc2_nonneg",
                              "f1_nonneg", "acc2_strict", "f1_strict"}) {
        csv << ',' << metrics[key].get<double>();
      }
    } else {
      for (const auto& c : metrics["per_class"]) {
        csv << ',' << c["acc2"].get<double>() << ',' << c["f1"].get<double>();
      }
    }
    csv << '\n';
    result.record_jsons.push_back(outcomes[i].record_json);
  }
  result.csv = csv.str();
  write_text_atomic(out_dir / "ablate.csv", result.csv);
  return result;
}

std::string cmd_depmetric(const std::filesystem::path& checkpoint,
                          const std::filesystem::path& manifest,
                          const std::string& split,
                          const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Model model = load_checkpoint(checkpoint);
  const FeatureDataset data = load_dataset(manifest, split);
  require_compatible(model.config(), data);
  const std::string text = dependency_json(model, data).dump(2);
  write_text_atomic(out_dir / "depmetric.json", text);
  return text;
}

std::string cmd_synth(const SyntheticSpec& spec,
                      const std::filesystem::path& out_dir) {
  validate_spec(spec);
  std::filesystem::create_directories(out_dir);
  const SyntheticSplits splits = generate_synthetic(spec);

  write_container(out_dir / "train.imft", splits.train);
  write_container(out_dir / "val.imft", splits.val);
  write_container(out_dir / "test.imft", splits.test);
  write_manifest(out_dir / "manifest.jsonl", {{"train.imft", "train"},
                                              {"val.imft", "val"},
                                              {"test.imft", "test"}});

  double label_mean = 0.0;
  std::size_t n = 0;
  for (const FeatureDataset* d : {&splits.train, &splits.val, &splits.test}) {
    for (const UtteranceSample& s : d->samples) {
      label_mean += s.label;
      ++n;
    }
  }
  label_mean /= double(n);

  json summary{{"n_train", splits.train.size()},
               {"n_val", splits.val.size()},
               {"n_test", splits.test.size()},
               {"d_t", spec.d_t},
               {"d_v", spec.d_v},
               {"d_a", spec.d_a},
               {"label_mean", label_mean},
               {"manifest", (out_dir / "manifest.jsonl").string()}};
  const std::string text = summary.dump(2);
  write_text_atomic(out_dir / "synth_summary.json", text);
  return text;
}

}  // namespace intermulti::commands
