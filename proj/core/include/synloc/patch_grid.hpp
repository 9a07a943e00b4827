#pragma once

#include <vector>

#include "synloc/raster.hpp"

namespace synloc {

// Sliding-window geometry: square patches of side patch_size, stepped by
// stride along both axes.
struct PatchSpec {
  int patch_size = 32;
  int stride = 4;

  void validate() const;
};

// One patch anchor: top-left corner (top, left) and side length.
struct PatchRef {
  int top = 0;
  int left = 0;
  int size = 0;

  bool operator==(const PatchRef&) const = default;
};

// Anchor offsets along one axis: {0, S, 2S, ...} up to extent-patch, with
// the edge-anchored final offset (extent-patch) appended once when the
// lattice does not land on it. Guarantees every coordinate is covered.
std::vector<int> axis_positions(int extent, int patch, int stride);

// Row-major enumeration of all patch anchors for an height x width image.
// Throws when the image is smaller than the patch.
std::vector<PatchRef> enumerate_positions(int height, int width,
                                          const PatchSpec& spec);

// Copies the patch at ref out of the image (channels preserved).
Raster extract_patch(const Raster& image, const PatchRef& ref);

}  // namespace synloc
