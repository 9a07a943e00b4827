#include "synloc/patch_grid.hpp"

#include <cstring>
#include <string>

namespace synloc {

void PatchSpec::validate() const {
  if (patch_size < 8)
    fail(Errc::bad_config,
         "patch_size must be at least 8, got " + std::to_string(patch_size));
  if (stride < 1 || stride > patch_size)
    fail(Errc::bad_config, "stride must be in [1, patch_size], got " +
                               std::to_string(stride));
}

std::vector<int> axis_positions(int extent, int patch, int stride) {
  if (extent < patch)
    fail(Errc::out_of_bounds, "axis extent " + std::to_string(extent) +
                                  " smaller than patch " + std::to_string(patch));
  std::vector<int> pos;
  for (int p = 0; p + patch <= extent; p += stride) pos.push_back(p);
  if (pos.back() != extent - patch) pos.push_back(extent - patch);
  return pos;
}

std::vector<PatchRef> enumerate_positions(int height, int width,
                                          const PatchSpec& spec) {
  spec.validate();
  if (height < spec.patch_size || width < spec.patch_size)
    fail(Errc::out_of_bounds,
         "image " + std::to_string(width) + "x" + std::to_string(height) +
             " smaller than patch " + std::to_string(spec.patch_size));
  const std::vector<int> rows =
      axis_positions(height, spec.patch_size, spec.stride);
  const std::vector<int> cols =
      axis_positions(width, spec.patch_size, spec.stride);
  std::vector<PatchRef> refs;
  refs.reserve(rows.size() * cols.size());
  for (int i : rows)
    for (int j : cols) refs.push_back({i, j, spec.patch_size});
  return refs;
}

Raster extract_patch(const Raster& image, const PatchRef& ref) {
  if (ref.size < 1 || ref.top < 0 || ref.left < 0 ||
      ref.top + ref.size > image.height || ref.left + ref.size > image.width)
    fail(Errc::out_of_bounds,
         "patch (" + std::to_string(ref.top) + "," + std::to_string(ref.left) +
             ")+" + std::to_string(ref.size) + " exceeds image " +
             std::to_string(image.width) + "x" + std::to_string(image.height));
  Raster out;
  out.width = ref.size;
  out.height = ref.size;
  out.channels = image.channels;
  out.pixels.resize(static_cast<std::size_t>(ref.size) * ref.size *
                    image.channels);
  const std::size_t row_bytes =
      static_cast<std::size_t>(ref.size) * image.channels;
  for (int r = 0; r < ref.size; ++r)
    std::memcpy(out.pixels.data() + r * row_bytes,
                image.pixels.data() + image.index(ref.top + r, ref.left, 0),
                row_bytes * sizeof(float));
  return out;
}

}  // namespace synloc
