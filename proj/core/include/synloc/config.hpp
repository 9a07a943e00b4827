#pragma once

#include <filesystem>
#include <string>

#include "synloc/augment.hpp"
#include "synloc/micronet.hpp"
#include "synloc/patch_grid.hpp"
#include "synloc/scoring.hpp"

namespace synloc {

// Self-describing experiment configuration. One JSON document with a
// version field; command-line flags override file values, and commands
// echo the fully-resolved config into their output directory.
struct ExperimentConfig {
  int version = 1;
  std::uint64_t seed = 1;
  int workers = 1;

  PatchSpec patch;      // localization geometry (size, stride)
  ScorerConfig scorer;  // which detector scores the patches
  bool augment_enabled = true;
  AugmentConfig augment;
  TrainConfig train;

  // Training-set preparation: patches are cut from each class image on a
  // patch-size grid with this stride (0 means stride = patch size), then
  // patches_per_image of them are sampled per image (0 means keep all).
  int train_patch_stride = 0;
  int patches_per_image = 4;

  int splice_side = 64;  // T, the inserted square's side
  int toy_size = 256;    // generated toy image side

  void validate() const;
};

ExperimentConfig config_from_json_string(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json_string(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace synloc
