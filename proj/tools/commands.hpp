#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synloc/config.hpp"

namespace synloc::cli {

struct ToygenArgs {
  int n = 1;
  std::filesystem::path out;
};

struct SpliceArgs {
  std::filesystem::path hosts, donors, out;
  int n = 1;
};

struct TrainArgs {
  std::filesystem::path dataset, out;
};

struct LocalizeArgs {
  std::filesystem::path image, out;
  std::optional<double> tau;
};

struct EvaluateArgs {
  std::filesystem::path dataset, out;
  bool save_heatmaps = false;
};

struct SweepArgs {
  std::filesystem::path dataset, out;
  std::string axis;  // "patch_size" or "stride"
  std::vector<int> values;
};

struct CalibrateArgs {
  std::filesystem::path dataset, pristine, out;
};

// Each command validates its inputs fully before touching the filesystem,
// then executes. Exit codes: 0 success, 2 config/validation error,
// 3 runtime/data error.
int run_toygen(const ExperimentConfig& cfg, const ToygenArgs& args);
int run_splice(const ExperimentConfig& cfg, const SpliceArgs& args);
int run_train(const ExperimentConfig& cfg, const TrainArgs& args);
int run_localize(const ExperimentConfig& cfg, const LocalizeArgs& args);
int run_evaluate(const ExperimentConfig& cfg, const EvaluateArgs& args);
int run_sweep(const ExperimentConfig& cfg, const SweepArgs& args);
int run_calibrate(const ExperimentConfig& cfg, const CalibrateArgs& args);

}  // namespace synloc::cli
