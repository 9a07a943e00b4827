#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using synloc::ExperimentConfig;
using synloc::ScorerConfig;

struct CommonOpts {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> patch_size;
  std::optional<int> stride;
  std::optional<std::string> scorer_kind;
  std::optional<std::string> mask;
  std::optional<std::string> checkpoint;
  std::optional<std::string> command;
  std::optional<std::string> workdir;
  bool no_augment = false;
  std::optional<int> max_epochs;
  std::optional<int> batch_size;
  std::optional<int> patches_per_image;
  std::optional<int> train_patch_stride;
  std::optional<int> patch_side;  // splice T
  std::optional<int> toy_size;
};

void add_base_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config file");
  cmd->add_option("--seed", o.seed, "master seed (no implicit entropy)");
  cmd->add_option("--workers", o.workers, "worker thread count");
}

void add_patch_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--patch-size", o.patch_size, "patch side P");
  cmd->add_option("--stride", o.stride, "patch stride S");
}

void add_scorer_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--scorer", o.scorer_kind,
                  "patch scorer: oracle, micronet or external");
  cmd->add_option("--mask", o.mask, "ground-truth mask (oracle scorer)");
  cmd->add_option("--checkpoint", o.checkpoint,
                  "MNET checkpoint (micronet scorer)");
  cmd->add_option("--command", o.command,
                  "external scorer command with {in}/{out} placeholders");
  cmd->add_option("--workdir", o.workdir, "external scorer working directory");
}

void add_train_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_flag("--no-augment", o.no_augment, "disable the augmentation pipeline");
  cmd->add_option("--max-epochs", o.max_epochs, "epoch cap");
  cmd->add_option("--batch-size", o.batch_size, "training batch size");
  cmd->add_option("--patches-per-image", o.patches_per_image,
                  "patches sampled per image (0 = full grid)");
  cmd->add_option("--train-patch-stride", o.train_patch_stride,
                  "grid stride when cutting training patches (0 = patch size)");
}

// flags > file > defaults
ExperimentConfig resolve(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (o.config_path) cfg = synloc::load_config(*o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.patch_size) cfg.patch.patch_size = *o.patch_size;
  if (o.stride) cfg.patch.stride = *o.stride;
  if (o.scorer_kind) {
    if (*o.scorer_kind == "oracle")
      cfg.scorer.kind = ScorerConfig::Kind::oracle;
    else if (*o.scorer_kind == "micronet")
      cfg.scorer.kind = ScorerConfig::Kind::micronet;
    else if (*o.scorer_kind == "external")
      cfg.scorer.kind = ScorerConfig::Kind::external;
    else
      synloc::fail(synloc::Errc::bad_config,
                   "unknown scorer '" + *o.scorer_kind + "'");
  }
  if (o.mask) cfg.scorer.mask_path = *o.mask;
  if (o.checkpoint) cfg.scorer.checkpoint_path = *o.checkpoint;
  if (o.command) cfg.scorer.command = *o.command;
  if (o.workdir) cfg.scorer.workdir = *o.workdir;
  if (o.no_augment) cfg.augment_enabled = false;
  if (o.max_epochs) cfg.train.max_epochs = *o.max_epochs;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.patches_per_image) cfg.patches_per_image = *o.patches_per_image;
  if (o.train_patch_stride) cfg.train_patch_stride = *o.train_patch_stride;
  if (o.patch_side) cfg.splice_side = *o.patch_side;
  if (o.toy_size) cfg.toy_size = *o.toy_size;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "synloc - localize synthetically generated regions in images by "
      "sliding-window patch scoring and overlap-averaged heatmaps"};
  app.require_subcommand(1);
  int exit_code = 0;

  // toygen
  auto toy_opts = std::make_shared<CommonOpts>();
  auto toy_args = std::make_shared<synloc::cli::ToygenArgs>();
  CLI::App* toygen = app.add_subcommand(
      "toygen", "generate the surrogate real/synthetic toy image corpus");
  add_base_opts(toygen, *toy_opts);
  toygen->add_option("--n", toy_args->n, "number of image pairs")->required();
  toygen->add_option("--out", toy_args->out, "output directory")->required();
  toygen->add_option("--size", toy_opts->toy_size, "toy image side");
  toygen->callback([toy_opts, toy_args, &exit_code] {
    exit_code = synloc::cli::run_toygen(resolve(*toy_opts), *toy_args);
  });

  // splice
  auto splice_opts = std::make_shared<CommonOpts>();
  auto splice_args = std::make_shared<synloc::cli::SpliceArgs>();
  CLI::App* splice = app.add_subcommand(
      "splice", "build an automatically manipulated dataset with masks");
  add_base_opts(splice, *splice_opts);
  splice->add_option("--hosts", splice_args->hosts, "pristine host image dir")
      ->required();
  splice->add_option("--donors", splice_args->donors,
                     "donor dir (subdirectories form groups)")
      ->required();
  splice->add_option("--n", splice_args->n, "number of spliced images")
      ->required();
  splice->add_option("--out", splice_args->out, "output directory")->required();
  splice->add_option("--patch-side", splice_opts->patch_side,
                     "side T of the inserted square");
  splice->callback([splice_opts, splice_args, &exit_code] {
    exit_code = synloc::cli::run_splice(resolve(*splice_opts), *splice_args);
  });

  // train
  auto train_opts = std::make_shared<CommonOpts>();
  auto train_args = std::make_shared<synloc::cli::TrainArgs>();
  CLI::App* train = app.add_subcommand(
      "train", "train the patch detector on a real/synthetic image corpus");
  add_base_opts(train, *train_opts);
  add_train_opts(train, *train_opts);
  train->add_option("--patch-size", train_opts->patch_size, "patch side P");
  train->add_option("--dataset", train_args->dataset,
                    "directory with real/ and synthetic/")
      ->required();
  train->add_option("--out", train_args->out, "output directory")->required();
  train->callback([train_opts, train_args, &exit_code] {
    exit_code = synloc::cli::run_train(resolve(*train_opts), *train_args);
  });

  // localize
  auto loc_opts = std::make_shared<CommonOpts>();
  auto loc_args = std::make_shared<synloc::cli::LocalizeArgs>();
  CLI::App* localize = app.add_subcommand(
      "localize", "estimate the tampering heatmap of one image");
  add_base_opts(localize, *loc_opts);
  add_patch_opts(localize, *loc_opts);
  add_scorer_opts(localize, *loc_opts);
  localize->add_option("--image", loc_args->image, "image to analyze")
      ->required();
  localize->add_option("--out", loc_args->out, "output directory")->required();
  double tau_value = -1.0;
  CLI::Option* tau_opt = localize->add_option(
      "--tau", tau_value, "also write the thresholded mask at this threshold");
  localize->callback([loc_opts, loc_args, tau_opt, &tau_value, &exit_code] {
    if (tau_opt->count() > 0) loc_args->tau = tau_value;
    exit_code = synloc::cli::run_localize(resolve(*loc_opts), *loc_args);
  });

  // evaluate
  auto eval_opts = std::make_shared<CommonOpts>();
  auto eval_args = std::make_shared<synloc::cli::EvaluateArgs>();
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "localize a spliced dataset and report AUC / max BA");
  add_base_opts(evaluate, *eval_opts);
  add_patch_opts(evaluate, *eval_opts);
  add_scorer_opts(evaluate, *eval_opts);
  evaluate->add_option("--dataset", eval_args->dataset, "spliced dataset dir")
      ->required();
  evaluate->add_option("--out", eval_args->out, "output directory")->required();
  evaluate->add_flag("--save-heatmaps", eval_args->save_heatmaps,
                     "persist every heatmap (HMAP + PNG)");
  evaluate->callback([eval_opts, eval_args, &exit_code] {
    exit_code = synloc::cli::run_evaluate(resolve(*eval_opts), *eval_args);
  });

  // sweep
  auto sweep_opts = std::make_shared<CommonOpts>();
  auto sweep_args = std::make_shared<synloc::cli::SweepArgs>();
  CLI::App* sweep = app.add_subcommand(
      "sweep", "evaluate across patch-size or stride values");
  add_base_opts(sweep, *sweep_opts);
  add_patch_opts(sweep, *sweep_opts);
  add_scorer_opts(sweep, *sweep_opts);
  sweep->add_option("--dataset", sweep_args->dataset, "spliced dataset dir")
      ->required();
  sweep->add_option("--out", sweep_args->out, "output directory")->required();
  sweep->add_option("--axis", sweep_args->axis, "patch_size or stride")
      ->required();
  sweep->add_option("--values", sweep_args->values, "axis values")
      ->required()
      ->delimiter(',');
  sweep->callback([sweep_opts, sweep_args, &exit_code] {
    exit_code = synloc::cli::run_sweep(resolve(*sweep_opts), *sweep_args);
  });

  // calibrate
  auto cal_opts = std::make_shared<CommonOpts>();
  auto cal_args = std::make_shared<synloc::cli::CalibrateArgs>();
  CLI::App* calibrate = app.add_subcommand(
      "calibrate",
      "pick tau* on a tampered set and measure pristine false alarms");
  add_base_opts(calibrate, *cal_opts);
  add_patch_opts(calibrate, *cal_opts);
  add_scorer_opts(calibrate, *cal_opts);
  calibrate->add_option("--dataset", cal_args->dataset, "spliced dataset dir")
      ->required();
  calibrate->add_option("--pristine", cal_args->pristine,
                        "directory of pristine images")
      ->required();
  calibrate->add_option("--out", cal_args->out, "output directory")->required();
  calibrate->callback([cal_opts, cal_args, &exit_code] {
    exit_code = synloc::cli::run_calibrate(resolve(*cal_opts), *cal_args);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad flags are config errors
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
