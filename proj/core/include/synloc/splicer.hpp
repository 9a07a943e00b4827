#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "synloc/raster.hpp"

namespace synloc {

// Provenance of one automatically manipulated image.
struct SpliceRecord {
  std::string output_id;
  std::string host_id;
  std::string donor_id;
  std::string group;  // donor group tag, e.g. a generator name
  int top = 0;        // insert location in the host
  int left = 0;
  int side = 0;       // T
  std::uint64_t seed = 0;  // regenerates this record's draws in isolation
};

struct Manifest {
  int version = 1;
  std::uint64_t seed = 0;
  std::vector<SpliceRecord> records;
  std::map<std::string, int> group_counts;
};

void save_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

struct SpliceResult {
  Raster image;
  BinaryMask mask;
  int top = 0, left = 0;
  int donor_top = 0, donor_left = 0;
};

// Copies a random side x side crop of the donor into the host at a random
// location (both draws uniform, from the given seed). Pixels outside the
// square equal the host exactly; inside, the donor crop exactly.
SpliceResult splice(const Raster& host, const Raster& donor, int side,
                    std::uint64_t seed);

// Builds n spliced images + masks under out_dir (images/<id>.png,
// masks/<id>.png, manifest.json). Donor groups are the immediate
// subdirectories of donors_dir (or donors_dir itself when it has none) and
// are used exactly n/groups times each. Hosts are consumed without
// replacement until the pool is exhausted, then with replacement.
Manifest build_dataset(const std::filesystem::path& hosts_dir,
                       const std::filesystem::path& donors_dir, int n,
                       std::uint64_t seed, const std::filesystem::path& out_dir,
                       int side = 64);

// Deterministic surrogate pair for corpora that cannot ship: a band-
// textured "real" image and its "synthetic" twin, which is the same scene
// passed through a 2x nearest-neighbor resample round-trip plus a +-0.02
// period-2 checkerboard residual (the canonical upsampling fingerprint).
std::pair<Raster, Raster> gen_toy_pair(std::uint64_t seed, int size = 256);

}  // namespace synloc
