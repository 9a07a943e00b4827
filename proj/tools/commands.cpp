#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "synloc/image_io.hpp"
#include "synloc/metrics.hpp"
#include "synloc/pipeline.hpp"
#include "synloc/rng.hpp"
#include "synloc/splicer.hpp"

namespace synloc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

int guarded(const std::function<void()>& validate,
            const std::function<void()>& execute) {
  try {
    validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    execute();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::unwritable_path, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

void echo_config(const ExperimentConfig& cfg, const fs::path& out_dir) {
  save_config(cfg, out_dir / "resolved_config.json");
}

// Scorer dependency checks that can run before touching any output path.
void validate_scorer_deps(const ExperimentConfig& cfg, bool per_image_masks) {
  switch (cfg.scorer.kind) {
    case ScorerConfig::Kind::oracle:
      if (!per_image_masks) {
        if (cfg.scorer.mask_path.empty() || !fs::exists(cfg.scorer.mask_path))
          fail(Errc::bad_config,
               "oracle scorer needs an existing --mask file");
      }
      break;
    case ScorerConfig::Kind::micronet:
      if (cfg.scorer.checkpoint_path.empty() ||
          !fs::exists(cfg.scorer.checkpoint_path))
        fail(Errc::bad_config,
             "micronet scorer needs an existing --checkpoint file");
      break;
    case ScorerConfig::Kind::external:
      if (cfg.scorer.command.find("{in}") == std::string::npos ||
          cfg.scorer.command.find("{out}") == std::string::npos)
        fail(Errc::bad_config,
             "external scorer --command must contain {in} and {out}");
      break;
  }
}

struct DatasetRun {
  Manifest manifest;
  std::vector<ScoredImage> pairs;
  std::vector<std::string> ids;
};

// Localizes every image of a spliced dataset against its mask.
DatasetRun localize_dataset(const ExperimentConfig& cfg, const fs::path& dir,
                            const fs::path* heatmap_dir) {
  DatasetRun run;
  run.manifest = load_manifest(dir / "manifest.json");
  if (run.manifest.records.empty())
    fail(Errc::empty_input, "manifest has no records: " + dir.string());

  std::unique_ptr<PatchScorer> shared;
  if (cfg.scorer.kind != ScorerConfig::Kind::oracle)
    shared = cfg.scorer.make_scorer();

  if (heatmap_dir) fs::create_directories(*heatmap_dir);
  for (const SpliceRecord& rec : run.manifest.records) {
    const Raster img = read_image(dir / "images" / (rec.output_id + ".png"));
    BinaryMask mask = read_mask(dir / "masks" / (rec.output_id + ".png"));
    FloatMap heat;
    if (cfg.scorer.kind == ScorerConfig::Kind::oracle) {
      const OracleScorer oracle_scorer{mask};
      heat = localize(img, cfg.patch, oracle_scorer, cfg.workers);
    } else {
      heat = localize(img, cfg.patch, *shared, cfg.workers);
    }
    if (heatmap_dir) {
      write_floatmap(heat, *heatmap_dir / (rec.output_id + ".hmap"));
      write_floatmap_png(heat, *heatmap_dir / (rec.output_id + ".png"));
    }
    run.pairs.push_back({std::move(heat), std::move(mask), rec.group});
    run.ids.push_back(rec.output_id);
  }
  return run;
}

json eval_to_json(const DatasetEvalResult& eval,
                  const std::vector<std::string>& ids) {
  json per_image = json::array();
  for (std::size_t i = 0; i < eval.per_image.size(); ++i) {
    const EvalResult& r = eval.per_image[i];
    per_image.push_back({{"id", ids[i]},
                         {"group", r.group},
                         {"auc", r.auc},
                         {"max_ba", r.max_ba},
                         {"best_tau", r.best_tau}});
  }
  json groups = json::array();
  for (const GroupSummary& g : eval.groups)
    groups.push_back({{"group", g.group},
                      {"n", g.count},
                      {"auc", g.mean_auc},
                      {"max_ba", g.mean_max_ba},
                      {"best_tau", g.mean_best_tau}});
  return json{{"per_image", per_image},
              {"groups", groups},
              {"overall",
               {{"n", eval.overall.count},
                {"auc", eval.overall.mean_auc},
                {"max_ba", eval.overall.mean_max_ba},
                {"best_tau", eval.overall.mean_best_tau}}}};
}

std::string table_row(const std::string& label, int n, double auc, double ba) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-16s %6d   %7.4f   %6.2f%%\n", label.c_str(),
                n, auc, 100.0 * ba);
  return buf;
}

std::string eval_to_table(const DatasetEvalResult& eval) {
  std::string text = "group                 n       AUC   max BA\n";
  for (const GroupSummary& g : eval.groups)
    text += table_row(g.group, g.count, g.mean_auc, g.mean_max_ba);
  text += table_row("overall", eval.overall.count, eval.overall.mean_auc,
                    eval.overall.mean_max_ba);
  return text;
}

AugmentFn make_augment_fn(const ExperimentConfig& cfg) {
  if (!cfg.augment_enabled) return nullptr;
  const AugmentConfig aug = cfg.augment;
  return [aug](const Raster& patch, Rng& stream) {
    return apply_augment(patch, aug, stream);
  };
}

struct PatchProvenance {
  std::string image;
  int top = 0, left = 0;
  std::uint8_t label = 0;
};

// Cuts the labeled training patches from <dataset>/real and
// <dataset>/synthetic on the configured grid, sampling
// patches_per_image anchors per image when requested.
std::pair<std::vector<LabeledPatch>, std::vector<PatchProvenance>> cut_patches(
    const ExperimentConfig& cfg, const fs::path& dataset) {
  const int patch = cfg.patch.patch_size;
  const int stride =
      cfg.train_patch_stride > 0 ? cfg.train_patch_stride : patch;
  const Rng master(cfg.seed);

  std::vector<LabeledPatch> patches;
  std::vector<PatchProvenance> provenance;
  const std::pair<const char*, std::uint8_t> classes[2] = {{"real", 0},
                                                           {"synthetic", 1}};
  for (const auto& [sub, label] : classes) {
    const auto files = list_images(dataset / sub);
    if (files.empty())
      fail(Errc::empty_input,
           "no images under " + (dataset / sub).string());
    for (std::size_t fi = 0; fi < files.size(); ++fi) {
      const Raster img = read_image(files[fi]);
      auto refs = enumerate_positions(img.height, img.width, {patch, stride});
      if (cfg.patches_per_image > 0 &&
          static_cast<std::size_t>(cfg.patches_per_image) < refs.size()) {
        // partial Fisher-Yates: the first patches_per_image slots become a
        // uniform sample without replacement
        Rng rng = master.child((static_cast<std::uint64_t>(label) << 40) + fi);
        for (int k = 0; k < cfg.patches_per_image; ++k) {
          const auto j = static_cast<std::size_t>(rng.uniform_int(
              k, static_cast<std::int64_t>(refs.size()) - 1));
          std::swap(refs[k], refs[j]);
        }
        refs.resize(cfg.patches_per_image);
      }
      for (const PatchRef& ref : refs) {
        patches.push_back({extract_patch(img, ref), label});
        provenance.push_back({std::string(sub) + "/" +
                                  files[fi].filename().string(),
                              ref.top, ref.left, label});
      }
    }
  }
  return {std::move(patches), std::move(provenance)};
}

}  // namespace

int run_toygen(const ExperimentConfig& cfg, const ToygenArgs& args) {
  return guarded(
      [&] {
        cfg.validate();
        if (args.n < 1) fail(Errc::bad_config, "--n must be >= 1");
        if (args.out.empty()) fail(Errc::bad_config, "--out is required");
      },
      [&] {
        fs::create_directories(args.out / "real");
        fs::create_directories(args.out / "synthetic");
        const Rng master(cfg.seed);
        for (int i = 0; i < args.n; ++i) {
          const auto [real, synth] = gen_toy_pair(
              master.child(static_cast<std::uint64_t>(i)).seed(), cfg.toy_size);
          const std::string name = "toy_" + zero_pad(i, 5) + ".png";
          write_image(real, args.out / "real" / name);
          write_image(synth, args.out / "synthetic" / name);
        }
        echo_config(cfg, args.out);
        std::cout << "wrote " << args.n << " toy pairs under " << args.out
                  << "\n";
      });
}

int run_splice(const ExperimentConfig& cfg, const SpliceArgs& args) {
  return guarded(
      [&] {
        cfg.validate();
        if (args.n < 1) fail(Errc::bad_config, "--n must be >= 1");
        if (!fs::is_directory(args.hosts))
          fail(Errc::bad_config, "hosts directory missing: " + args.hosts.string());
        if (!fs::is_directory(args.donors))
          fail(Errc::bad_config,
               "donors directory missing: " + args.donors.string());
        if (args.out.empty()) fail(Errc::bad_config, "--out is required");
      },
      [&] {
        const Manifest manifest = build_dataset(args.hosts, args.donors, args.n,
                                                cfg.seed, args.out,
                                                cfg.splice_side);
        echo_config(cfg, args.out);
        std::cout << "spliced " << manifest.records.size() << " images into "
                  << args.out << "\n";
      });
}

int run_train(const ExperimentConfig& cfg, const TrainArgs& args) {
  return guarded(
      [&] {
        cfg.validate();
        if (!fs::is_directory(args.dataset / "real") ||
            !fs::is_directory(args.dataset / "synthetic"))
          fail(Errc::bad_config,
               "training dataset needs real/ and synthetic/ under " +
                   args.dataset.string());
        if (list_images(args.dataset / "real").empty() ||
            list_images(args.dataset / "synthetic").empty())
          fail(Errc::bad_config, "training dataset has an empty class");
        if (args.out.empty()) fail(Errc::bad_config, "--out is required");
      },
      [&] {
        auto [patches, provenance] = cut_patches(cfg, args.dataset);
        TrainConfig tc = cfg.train;
        tc.seed = cfg.seed;
        tc.workers = cfg.workers;
        const TrainResult result = train(patches, tc, make_augment_fn(cfg));

        fs::create_directories(args.out);
        save_checkpoint(result.params, args.out / "checkpoint.mnet");

        json epochs = json::array();
        for (const EpochStats& e : result.history.epochs)
          epochs.push_back({{"epoch", e.epoch},
                            {"train_loss", e.train_loss},
                            {"val_loss", e.val_loss},
                            {"learning_rate", e.learning_rate},
                            {"val_balanced_accuracy",
                             e.val_balanced_accuracy}});
        write_json(args.out / "history.json",
                   {{"best_epoch", result.history.best_epoch},
                    {"best_val_loss", result.history.best_val_loss},
                    {"epochs_run", result.history.epochs_run},
                    {"early_stopped", result.history.early_stopped},
                    {"epochs", epochs}});

        json patch_list = json::array();
        for (const PatchProvenance& p : provenance)
          patch_list.push_back({{"image", p.image},
                                {"top", p.top},
                                {"left", p.left},
                                {"label", p.label}});
        write_json(args.out / "split.json", {{"train", result.split.train},
                                             {"val", result.split.val},
                                             {"test", result.split.test},
                                             {"patches", patch_list}});
        echo_config(cfg, args.out);
        std::cout << "trained on " << patches.size() << " patches; best epoch "
                  << result.history.best_epoch << ", best val loss "
                  << result.history.best_val_loss << "\n";
      });
}

int run_localize(const ExperimentConfig& cfg, const LocalizeArgs& args) {
  return guarded(
      [&] {
        cfg.validate();
        if (!fs::exists(args.image))
          fail(Errc::bad_config, "image missing: " + args.image.string());
        validate_scorer_deps(cfg, false);
        if (args.tau && !(*args.tau >= 0.0 && *args.tau <= 1.0))
          fail(Errc::bad_config, "--tau must lie in [0,1]");
        const Raster img = read_image(args.image);
        if (img.width < cfg.patch.patch_size ||
            img.height < cfg.patch.patch_size)
          fail(Errc::bad_config, "image smaller than the patch size");
        if (args.out.empty()) fail(Errc::bad_config, "--out is required");
      },
      [&] {
        const Raster img = read_image(args.image);
        const auto scorer = cfg.scorer.make_scorer();
        const FloatMap heat = localize(img, cfg.patch, *scorer, cfg.workers);

        fs::create_directories(args.out);
        const std::string stem = args.image.stem().string();
        write_floatmap(heat, args.out / (stem + ".hmap"));
        write_floatmap_png(heat, args.out / (stem + ".png"));
        if (args.tau) {
          const BinaryMask mask = threshold_map(heat, *args.tau);
          write_mask(mask, args.out / (stem + "_mask.png"));
        }
        echo_config(cfg, args.out);
        std::cout << "heatmap written to "
                  << (args.out / (stem + ".hmap")) << "\n";
      });
}

namespace {

void validate_spliced_dataset(const fs::path& dataset) {
  if (!fs::exists(dataset / "manifest.json"))
    fail(Errc::bad_config, "manifest missing: " + (dataset / "manifest.json").string());
  if (!fs::is_directory(dataset / "images") ||
      !fs::is_directory(dataset / "masks"))
    fail(Errc::bad_config,
         "dataset needs images/ and masks/ under " + dataset.string());
  load_manifest(dataset / "manifest.json");  // parseable
}

}  // namespace

int run_evaluate(const ExperimentConfig& cfg, const EvaluateArgs& args) {
  return guarded(
      [&] {
        cfg.validate();
        validate_spliced_dataset(args.dataset);
        validate_scorer_deps(cfg, true);
        if (args.out.empty()) fail(Errc::bad_config, "--out is required");
      },
      [&] {
        fs::create_directories(args.out);
        const fs::path heat_dir = args.out / "heatmaps";
        const DatasetRun run = localize_dataset(
            cfg, args.dataset, args.save_heatmaps ? &heat_dir : nullptr);
        const DatasetEvalResult eval = dataset_eval(run.pairs, cfg.workers);
        write_json(args.out / "report.json", eval_to_json(eval, run.ids));
        const std::string table = eval_to_table(eval);
        write_text(args.out / "report.txt", table);
        echo_config(cfg, args.out);
        std::cout << table;
      });
}

int run_sweep(const ExperimentConfig& cfg, const SweepArgs& args) {
  return guarded(
      [&] {
        cfg.validate();
        validate_spliced_dataset(args.dataset);
        validate_scorer_deps(cfg, true);
        if (args.axis != "patch_size" && args.axis != "stride")
          fail(Errc::bad_config, "--axis must be patch_size or stride");
        if (args.values.empty()) fail(Errc::bad_config, "--values is required");
        const Manifest m = load_manifest(args.dataset / "manifest.json");
        const Raster probe = read_image(
            args.dataset / "images" / (m.records.front().output_id + ".png"));
        for (int v : args.values) {
          ExperimentConfig probe_cfg = cfg;
          if (args.axis == "patch_size")
            probe_cfg.patch.patch_size = v;
          else
            probe_cfg.patch.stride = v;
          probe_cfg.patch.validate();
          if (probe_cfg.patch.patch_size > probe.width ||
              probe_cfg.patch.patch_size > probe.height)
            fail(Errc::bad_config,
                 "patch size " + std::to_string(probe_cfg.patch.patch_size) +
                     " exceeds image side");
        }
        if (args.out.empty()) fail(Errc::bad_config, "--out is required");
      },
      [&] {
        fs::create_directories(args.out);
        json rows = json::array();
        std::string table =
            (args.axis == "stride" ? std::string("stride") : std::string("patch_size")) +
            "                n       AUC   max BA\n";
        for (int v : args.values) {
          ExperimentConfig sweep_cfg = cfg;
          if (args.axis == "patch_size")
            sweep_cfg.patch.patch_size = v;
          else
            sweep_cfg.patch.stride = v;
          const DatasetRun run = localize_dataset(sweep_cfg, args.dataset, nullptr);
          const DatasetEvalResult eval = dataset_eval(run.pairs, cfg.workers);
          rows.push_back({{"value", v},
                          {"auc", eval.overall.mean_auc},
                          {"max_ba", eval.overall.mean_max_ba},
                          {"groups", eval_to_json(eval, run.ids)["groups"]}});
          table += table_row(std::to_string(v), eval.overall.count,
                             eval.overall.mean_auc, eval.overall.mean_max_ba);
        }
        write_json(args.out / "sweep.json",
                   {{"axis", args.axis}, {"rows", rows}});
        write_text(args.out / "sweep.txt", table);
        echo_config(cfg, args.out);
        std::cout << table;
      });
}

int run_calibrate(const ExperimentConfig& cfg, const CalibrateArgs& args) {
  return guarded(
      [&] {
        cfg.validate();
        validate_spliced_dataset(args.dataset);
        validate_scorer_deps(cfg, true);
        if (!fs::is_directory(args.pristine))
          fail(Errc::bad_config,
               "pristine directory missing: " + args.pristine.string());
        if (list_images(args.pristine).empty())
          fail(Errc::bad_config, "no pristine images in " + args.pristine.string());
        if (args.out.empty()) fail(Errc::bad_config, "--out is required");
      },
      [&] {
        const DatasetRun run = localize_dataset(cfg, args.dataset, nullptr);

        std::vector<double> scores;
        std::vector<std::uint8_t> labels;
        for (const ScoredImage& p : run.pairs) {
          scores.insert(scores.end(), p.heatmap.values.begin(),
                        p.heatmap.values.end());
          labels.insert(labels.end(), p.mask.labels.begin(),
                        p.mask.labels.end());
        }
        const BaResult pooled = max_ba_from_scores(scores, labels);

        std::unique_ptr<PatchScorer> scorer;
        if (cfg.scorer.kind != ScorerConfig::Kind::oracle)
          scorer = cfg.scorer.make_scorer();
        std::vector<FloatMap> pristine_maps;
        for (const fs::path& file : list_images(args.pristine)) {
          const Raster img = read_image(file);
          if (cfg.scorer.kind == ScorerConfig::Kind::oracle) {
            // pristine images carry no tampering by definition
            const OracleScorer oracle_scorer{BinaryMask(img.width, img.height, 0)};
            pristine_maps.push_back(
                localize(img, cfg.patch, oracle_scorer, cfg.workers));
          } else {
            pristine_maps.push_back(localize(img, cfg.patch, *scorer, cfg.workers));
          }
        }
        const double cdr = correct_detection_rate(pristine_maps, pooled.tau);

        fs::create_directories(args.out);
        write_json(args.out / "calibration.json",
                   {{"tau_star", pooled.tau},
                    {"pooled_max_ba", pooled.ba},
                    {"n_tampered_images", run.pairs.size()},
                    {"n_pristine_images", pristine_maps.size()},
                    {"correct_detection_rate", cdr},
                    {"false_alarm_rate", 1.0 - cdr},
                    {"reference_point",
                     {{"tau", 0.736}, {"correct_detection_rate", 0.993}}}});
        write_json(args.out / "tau.json", {{"tau", pooled.tau}});
        echo_config(cfg, args.out);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "tau* = %.6f (pooled max BA %.4f), correct detection "
                      "rate on pristine = %.4f\n",
                      pooled.tau, pooled.ba, cdr);
        std::cout << buf;
      });
}

}  // namespace synloc::cli
