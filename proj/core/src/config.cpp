#include "synloc/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace synloc {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key))
      fail(Errc::bad_config, "unknown config key '" + key + "' in " + where);
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void get_path(const json& j, const char* key, std::filesystem::path& out) {
  if (j.contains(key)) out = j.at(key).get<std::string>();
}

ScorerConfig::Kind kind_from_string(const std::string& s) {
  if (s == "oracle") return ScorerConfig::Kind::oracle;
  if (s == "micronet") return ScorerConfig::Kind::micronet;
  if (s == "external") return ScorerConfig::Kind::external;
  fail(Errc::bad_config, "unknown scorer kind '" + s + "'");
}

std::string kind_to_string(ScorerConfig::Kind k) {
  switch (k) {
    case ScorerConfig::Kind::oracle: return "oracle";
    case ScorerConfig::Kind::micronet: return "micronet";
    case ScorerConfig::Kind::external: return "external";
  }
  return "oracle";
}

void parse_into(const json& j, ExperimentConfig& cfg) {
  check_keys(j, {"version", "seed", "workers", "patch", "scorer", "augment",
                 "train", "splice", "toy"},
             "config root");
  get_if(j, "version", cfg.version);
  if (cfg.version != 1)
    fail(Errc::bad_config,
         "unsupported config version " + std::to_string(cfg.version));
  get_if(j, "seed", cfg.seed);
  get_if(j, "workers", cfg.workers);

  if (j.contains("patch")) {
    const json& p = j.at("patch");
    check_keys(p, {"size", "stride"}, "patch");
    get_if(p, "size", cfg.patch.patch_size);
    get_if(p, "stride", cfg.patch.stride);
  }

  if (j.contains("scorer")) {
    const json& s = j.at("scorer");
    check_keys(s, {"kind", "mask", "checkpoint", "command", "workdir"},
               "scorer");
    if (s.contains("kind"))
      cfg.scorer.kind = kind_from_string(s.at("kind").get<std::string>());
    get_path(s, "mask", cfg.scorer.mask_path);
    get_path(s, "checkpoint", cfg.scorer.checkpoint_path);
    get_if(s, "command", cfg.scorer.command);
    get_path(s, "workdir", cfg.scorer.workdir);
  }

  if (j.contains("augment")) {
    const json& a = j.at("augment");
    check_keys(a,
               {"enabled", "p_hflip", "p_vflip", "p_rot90", "p_hist_eq",
                "p_blur", "p_brightness_contrast", "p_color_jitter",
                "p_rescale", "p_jpeg", "jpeg_quality_min", "jpeg_quality_max",
                "scale_min", "scale_max", "blur_kernels", "brightness_delta",
                "contrast_delta", "saturation_delta", "hue_delta"},
               "augment");
    get_if(a, "enabled", cfg.augment_enabled);
    get_if(a, "p_hflip", cfg.augment.p_hflip);
    get_if(a, "p_vflip", cfg.augment.p_vflip);
    get_if(a, "p_rot90", cfg.augment.p_rot90);
    get_if(a, "p_hist_eq", cfg.augment.p_hist_eq);
    get_if(a, "p_blur", cfg.augment.p_blur);
    get_if(a, "p_brightness_contrast", cfg.augment.p_brightness_contrast);
    get_if(a, "p_color_jitter", cfg.augment.p_color_jitter);
    get_if(a, "p_rescale", cfg.augment.p_rescale);
    get_if(a, "p_jpeg", cfg.augment.p_jpeg);
    get_if(a, "jpeg_quality_min", cfg.augment.jpeg_quality_min);
    get_if(a, "jpeg_quality_max", cfg.augment.jpeg_quality_max);
    get_if(a, "scale_min", cfg.augment.scale_min);
    get_if(a, "scale_max", cfg.augment.scale_max);
    get_if(a, "blur_kernels", cfg.augment.blur_kernels);
    get_if(a, "brightness_delta", cfg.augment.brightness_delta);
    get_if(a, "contrast_delta", cfg.augment.contrast_delta);
    get_if(a, "saturation_delta", cfg.augment.saturation_delta);
    get_if(a, "hue_delta", cfg.augment.hue_delta);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t,
               {"batch_size", "learning_rate", "beta1", "beta2", "epsilon",
                "plateau_factor", "plateau_patience", "min_learning_rate",
                "early_stop_patience", "max_epochs", "split", "patch_stride",
                "patches_per_image"},
               "train");
    get_if(t, "batch_size", cfg.train.batch_size);
    get_if(t, "learning_rate", cfg.train.learning_rate);
    get_if(t, "beta1", cfg.train.adam.beta1);
    get_if(t, "beta2", cfg.train.adam.beta2);
    get_if(t, "epsilon", cfg.train.adam.epsilon);
    get_if(t, "plateau_factor", cfg.train.plateau_factor);
    get_if(t, "plateau_patience", cfg.train.plateau_patience);
    get_if(t, "min_learning_rate", cfg.train.min_learning_rate);
    get_if(t, "early_stop_patience", cfg.train.early_stop_patience);
    get_if(t, "max_epochs", cfg.train.max_epochs);
    if (t.contains("split")) {
      const auto split = t.at("split").get<std::vector<double>>();
      if (split.size() != 3)
        fail(Errc::bad_config, "train.split must have three fractions");
      cfg.train.train_fraction = split[0];
      cfg.train.val_fraction = split[1];
      cfg.train.test_fraction = split[2];
    }
    get_if(t, "patch_stride", cfg.train_patch_stride);
    get_if(t, "patches_per_image", cfg.patches_per_image);
  }

  if (j.contains("splice")) {
    const json& s = j.at("splice");
    check_keys(s, {"side"}, "splice");
    get_if(s, "side", cfg.splice_side);
  }
  if (j.contains("toy")) {
    const json& t = j.at("toy");
    check_keys(t, {"size"}, "toy");
    get_if(t, "size", cfg.toy_size);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (workers < 1) fail(Errc::bad_config, "workers must be >= 1");
  patch.validate();
  augment.validate();
  // Train seed/workers resolve from the top level; mirror them so the
  // nested validation sees the final values.
  TrainConfig t = train;
  t.seed = seed;
  t.workers = workers;
  t.validate();
  if (train_patch_stride < 0 || patches_per_image < 0)
    fail(Errc::bad_config, "train patch sampling fields must be >= 0");
  if (splice_side < 1) fail(Errc::bad_config, "splice side must be >= 1");
  if (toy_size < 8 || toy_size % 4 != 0)
    fail(Errc::bad_config, "toy size must be >= 8 and divisible by 4");
}

ExperimentConfig config_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::bad_config, "config parse error: " + std::string(e.what()));
  }
  ExperimentConfig cfg;
  try {
    parse_into(j, cfg);
  } catch (const json::exception& e) {
    fail(Errc::bad_config, "config field error: " + std::string(e.what()));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::file_missing, "no such config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json_string(text);
}

std::string config_to_json_string(const ExperimentConfig& cfg) {
  json j;
  j["version"] = cfg.version;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["patch"] = {{"size", cfg.patch.patch_size}, {"stride", cfg.patch.stride}};
  json s;
  s["kind"] = kind_to_string(cfg.scorer.kind);
  if (!cfg.scorer.mask_path.empty()) s["mask"] = cfg.scorer.mask_path.string();
  if (!cfg.scorer.checkpoint_path.empty())
    s["checkpoint"] = cfg.scorer.checkpoint_path.string();
  if (!cfg.scorer.command.empty()) s["command"] = cfg.scorer.command;
  if (!cfg.scorer.workdir.empty()) s["workdir"] = cfg.scorer.workdir.string();
  j["scorer"] = std::move(s);
  j["augment"] = {{"enabled", cfg.augment_enabled},
                  {"p_hflip", cfg.augment.p_hflip},
                  {"p_vflip", cfg.augment.p_vflip},
                  {"p_rot90", cfg.augment.p_rot90},
                  {"p_hist_eq", cfg.augment.p_hist_eq},
                  {"p_blur", cfg.augment.p_blur},
                  {"p_brightness_contrast", cfg.augment.p_brightness_contrast},
                  {"p_color_jitter", cfg.augment.p_color_jitter},
                  {"p_rescale", cfg.augment.p_rescale},
                  {"p_jpeg", cfg.augment.p_jpeg},
                  {"jpeg_quality_min", cfg.augment.jpeg_quality_min},
                  {"jpeg_quality_max", cfg.augment.jpeg_quality_max},
                  {"scale_min", cfg.augment.scale_min},
                  {"scale_max", cfg.augment.scale_max},
                  {"blur_kernels", cfg.augment.blur_kernels},
                  {"brightness_delta", cfg.augment.brightness_delta},
                  {"contrast_delta", cfg.augment.contrast_delta},
                  {"saturation_delta", cfg.augment.saturation_delta},
                  {"hue_delta", cfg.augment.hue_delta}};
  j["train"] = {{"batch_size", cfg.train.batch_size},
                {"learning_rate", cfg.train.learning_rate},
                {"beta1", cfg.train.adam.beta1},
                {"beta2", cfg.train.adam.beta2},
                {"epsilon", cfg.train.adam.epsilon},
                {"plateau_factor", cfg.train.plateau_factor},
                {"plateau_patience", cfg.train.plateau_patience},
                {"min_learning_rate", cfg.train.min_learning_rate},
                {"early_stop_patience", cfg.train.early_stop_patience},
                {"max_epochs", cfg.train.max_epochs},
                {"split",
                 {cfg.train.train_fraction, cfg.train.val_fraction,
                  cfg.train.test_fraction}},
                {"patch_stride", cfg.train_patch_stride},
                {"patches_per_image", cfg.patches_per_image}};
  j["splice"] = {{"side", cfg.splice_side}};
  j["toy"] = {{"size", cfg.toy_size}};
  return j.dump(2) + "\n";
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::unwritable_path, "cannot write " + path.string());
  out << config_to_json_string(cfg);
}

}  // namespace synloc
