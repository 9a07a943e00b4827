#pragma once

#include "synloc/heatmap.hpp"
#include "synloc/patch_grid.hpp"
#include "synloc/raster.hpp"
#include "synloc/scoring.hpp"

namespace synloc {

// Full localization pass: enumerate anchors, score every patch, overlap-
// average into the per-pixel heatmap.
FloatMap localize(const Raster& image, const PatchSpec& spec,
                  const PatchScorer& scorer, int workers = 1);

}  // namespace synloc
