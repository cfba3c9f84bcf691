#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "intermulti/commands.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric divergence.
constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct TrainArgs {
  std::string config_path, data_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> ablation;
  std::optional<std::size_t> max_epochs;
};

intermulti::ModelConfig load_config(const TrainArgs& args) {
  intermulti::ModelConfig cfg = intermulti::load_config_file(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.ablation) cfg.ablation = *args.ablation;
  if (args.max_epochs) cfg.max_epochs = *args.max_epochs;
  intermulti::validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"InterMulti: multimodal emotion analysis with nonparametric "
               "self-decoupling and hierarchical high-order fusion"};
  app.require_subcommand(1);

  // train ---------------------------------------------------------------
  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a run record");
  train_cmd->add_option("--config", train_args.config_path, "Model config JSON")->required();
  train_cmd->add_option("--data", train_args.data_path, "Dataset manifest (JSONL)")->required();
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
  train_cmd->add_option("--seed", train_args.seed, "Override config seed");
  train_cmd->add_option("--ablation", train_args.ablation, "Override ablation id");
  train_cmd->add_option("--max-epochs", train_args.max_epochs, "Override max epochs");

  // eval ----------------------------------------------------------------
  std::string eval_checkpoint, eval_data, eval_out, eval_split = "test";
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset manifest (JSONL)")->required();
  eval_cmd->add_option("--split", eval_split, "Split to evaluate (default test)");
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();

  // ablate --------------------------------------------------------------
  TrainArgs ablate_args;
  std::vector<std::string> ablate_grid;
  std::size_t ablate_parallel = 1;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train an ablation grid with shared data and seed");
  ablate_cmd->add_option("--config", ablate_args.config_path, "Model config JSON")->required();
  ablate_cmd->add_option("--data", ablate_args.data_path, "Dataset manifest (JSONL)")->required();
  ablate_cmd->add_option("--out", ablate_args.out_dir, "Output directory")->required();
  ablate_cmd->add_option("--ablation", ablate_grid, "Ablation ids (repeatable)")->required();
  ablate_cmd->add_option("--seed", ablate_args.seed, "Override config seed");
  ablate_cmd->add_option("--max-epochs", ablate_args.max_epochs, "Override max epochs");
  ablate_cmd->add_option("--parallel", ablate_parallel, "Worker threads");

  // depmetric -----------------------------------------------------------
  std::string dep_checkpoint, dep_data, dep_out, dep_split = "test";
  auto* dep_cmd = app.add_subcommand("depmetric", "Dependency table of the decoupled representations");
  dep_cmd->add_option("--checkpoint", dep_checkpoint, "Checkpoint file")->required();
  dep_cmd->add_option("--data", dep_data, "Dataset manifest (JSONL)")->required();
  dep_cmd->add_option("--split", dep_split, "Split to use (default test)");
  dep_cmd->add_option("--out", dep_out, "Output directory")->required();

  // synth ---------------------------------------------------------------
  intermulti::SyntheticSpec spec;
  std::string synth_out;
  std::vector<std::size_t> synth_dims, synth_lens;
  std::vector<double> synth_betas;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the planted-interaction benchmark");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--n", spec.n_samples, "Total samples (70/15/15 split)");
  synth_cmd->add_option("--seed", spec.seed, "Generator seed");
  synth_cmd->add_option("--dims", synth_dims, "Feature dims for t v a")->expected(3);
  synth_cmd->add_option("--lens", synth_lens, "Sequence lengths for t v a")->expected(3);
  synth_cmd->add_option("--alpha", spec.alpha, "Shared factor weight");
  synth_cmd->add_option("--beta", synth_betas, "Specific factor weights for t v a")->expected(3);
  synth_cmd->add_option("--sigma", spec.sigma, "Feature noise level");

  try {
    app.parse(argc, argv);

    if (*train_cmd) {
      const auto cfg = load_config(train_args);
      const auto outcome = intermulti::commands::cmd_train(
          cfg, train_args.data_path, train_args.out_dir);
      std::cout << "best val loss " << outcome.best_val_loss << "\n"
                << "checkpoint    " << outcome.checkpoint_path.string() << "\n"
                << "run record    " << (std::filesystem::path(train_args.out_dir) / "run_record.json").string()
                << std::endl;
    } else if (*eval_cmd) {
      std::cout << intermulti::commands::cmd_eval(eval_checkpoint, eval_data,
                                                  eval_split, eval_out)
                << std::endl;
    } else if (*ablate_cmd) {
      const auto cfg = load_config(ablate_args);
      const auto outcome = intermulti::commands::cmd_ablate(
          ablate_grid, cfg, ablate_args.data_path, ablate_args.out_dir,
          ablate_parallel);
      std::cout << outcome.csv << std::flush;
    } else if (*dep_cmd) {
      std::cout << intermulti::commands::cmd_depmetric(dep_checkpoint, dep_data,
                                                       dep_split, dep_out)
                << std::endl;
    } else if (*synth_cmd) {
      if (!synth_dims.empty()) {
        spec.d_t = synth_dims[0];
        spec.d_v = synth_dims[1];
        spec.d_a = synth_dims[2];
      }
      if (!synth_lens.empty()) {
        spec.len_t = synth_lens[0];
        spec.len_v = synth_lens[1];
        spec.len_a = synth_lens[2];
      }
      if (!synth_betas.empty()) {
        spec.beta_t = synth_betas[0];
        spec.beta_v = synth_betas[1];
        spec.beta_a = synth_betas[2];
      }
      std::cout << intermulti::commands::cmd_synth(spec, synth_out)
                << std::endl;
    }
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const intermulti::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const intermulti::NumericError& e) {
    std::cerr << "numeric divergence in op '" << e.op() << "': " << e.what()
              << std::endl;
    return kExitNumeric;
  } catch (const intermulti::DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return kExitData;
  } catch (const intermulti::ShapeError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitOther;
  }
}
