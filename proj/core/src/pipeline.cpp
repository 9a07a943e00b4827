#include "synloc/pipeline.hpp"

namespace synloc {

FloatMap localize(const Raster& image, const PatchSpec& spec,
                  const PatchScorer& scorer, int workers) {
  const std::vector<PatchRef> refs =
      enumerate_positions(image.height, image.width, spec);
  const std::vector<PatchScore> scores =
      score_patches(image, refs, scorer, workers);
  Accumulator acc(image.width, image.height);
  for (const PatchScore& s : scores) acc.add(s, spec.patch_size);
  return acc.finalize();
}

}  // namespace synloc
