#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "synloc/micronet.hpp"
#include "synloc/patch_grid.hpp"
#include "synloc/raster.hpp"

namespace synloc {

// Detector output bound to the patch's top-left coordinate.
struct PatchScore {
  int top = 0;
  int left = 0;
  double score = 0.0;  // probability the patch is synthetic, in [0,1]
};

// A patch scorer maps (image, patch anchor) to a probability. Scorers are
// read-only once constructed and, unless thread_safe() says otherwise,
// safe to call concurrently.
class PatchScorer {
 public:
  virtual ~PatchScorer() = default;

  virtual double score_one(const Raster& image, const PatchRef& ref) const = 0;

  // Batch path; the default loops score_one. Order follows refs.
  virtual std::vector<double> score_all(const Raster& image,
                                        const std::vector<PatchRef>& refs) const;

  virtual bool thread_safe() const { return true; }
};

// Fraction of ground-truth tampered pixels inside the patch extent.
// A testing instrument: end-to-end expected heatmaps become analytic.
double oracle_score(const BinaryMask& mask, const PatchRef& ref);

class OracleScorer : public PatchScorer {
 public:
  explicit OracleScorer(BinaryMask mask);
  double score_one(const Raster& image, const PatchRef& ref) const override;

 private:
  BinaryMask mask_;
};

class MicronetScorer : public PatchScorer {
 public:
  explicit MicronetScorer(NetParams params);
  double score_one(const Raster& image, const PatchRef& ref) const override;

 private:
  NetParams params_;
};

// Scores patches through an external command speaking PBAT v1:
//   request  = "PBAT 1 <count> <patch_size> <channels>\n" +
//              count*P*P*channels row-major float32 LE
//   response = count float32 LE, each in [0,1]
// The command template must contain {in} and {out} placeholders; one
// invocation per batch. Out-of-range responses are rejected, not clamped.
class ExternalScorer : public PatchScorer {
 public:
  ExternalScorer(std::string command_template, std::filesystem::path workdir);
  double score_one(const Raster& image, const PatchRef& ref) const override;
  std::vector<double> score_all(const Raster& image,
                                const std::vector<PatchRef>& refs) const override;
  bool thread_safe() const override { return false; }  // serialized protocol

 private:
  std::string command_;
  std::filesystem::path workdir_;
};

// One PBAT round trip for pre-extracted patches (all same shape).
std::vector<double> external_roundtrip(const std::vector<Raster>& patches,
                                       const std::string& command_template,
                                       const std::filesystem::path& workdir);

// Serializable scorer selection for configs and the CLI.
struct ScorerConfig {
  enum class Kind { oracle, micronet, external };
  Kind kind = Kind::oracle;
  std::filesystem::path mask_path;        // oracle
  std::filesystem::path checkpoint_path;  // micronet
  std::string command;                    // external
  std::filesystem::path workdir;          // external, optional

  void validate() const;  // exactly one kind's parameters populated
  std::unique_ptr<PatchScorer> make_scorer() const;
};

// Scores every ref (order preserved) and validates scores land in [0,1].
// Thread-safe scorers fan out across workers; the partition is fixed, so
// results are identical for any worker count.
std::vector<PatchScore> score_patches(const Raster& image,
                                      const std::vector<PatchRef>& refs,
                                      const PatchScorer& scorer,
                                      int workers = 1);

}  // namespace synloc
