#include "synloc/splicer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "synloc/image_io.hpp"
#include "synloc/rng.hpp"

namespace synloc {

namespace {

using nlohmann::json;

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void shuffle_paths(std::vector<std::size_t>& v, Rng rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  json j;
  j["format"] = "splice-manifest";
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["group_counts"] = m.group_counts;
  json records = json::array();
  for (const SpliceRecord& r : m.records) {
    records.push_back({{"output_id", r.output_id},
                       {"host_id", r.host_id},
                       {"donor_id", r.donor_id},
                       {"group", r.group},
                       {"top", r.top},
                       {"left", r.left},
                       {"side", r.side},
                       {"seed", r.seed}});
  }
  j["records"] = std::move(records);
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::unwritable_path, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::file_missing, "no such file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::corrupt_stream, "manifest parse error: " + std::string(e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "splice-manifest")
      fail(Errc::bad_magic, "not a splice manifest: " + path.string());
    Manifest m;
    m.version = j.at("version").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.group_counts =
        j.at("group_counts").get<std::map<std::string, int>>();
    for (const json& r : j.at("records")) {
      SpliceRecord rec;
      rec.output_id = r.at("output_id").get<std::string>();
      rec.host_id = r.at("host_id").get<std::string>();
      rec.donor_id = r.at("donor_id").get<std::string>();
      rec.group = r.at("group").get<std::string>();
      rec.top = r.at("top").get<int>();
      rec.left = r.at("left").get<int>();
      rec.side = r.at("side").get<int>();
      rec.seed = r.at("seed").get<std::uint64_t>();
      m.records.push_back(std::move(rec));
    }
    return m;
  } catch (const json::exception& e) {
    fail(Errc::corrupt_stream, "manifest field error: " + std::string(e.what()));
  }
}

SpliceResult splice(const Raster& host, const Raster& donor, int side,
                    std::uint64_t seed) {
  host.validate();
  donor.validate();
  if (side < 1 || side > host.width || side > host.height ||
      side > donor.width || side > donor.height)
    fail(Errc::out_of_bounds,
         "splice side " + std::to_string(side) +
             " exceeds host or donor dimensions");
  if (host.channels != donor.channels)
    fail(Errc::shape_mismatch, "host and donor channel counts differ");

  Rng rng(seed);
  SpliceResult result;
  result.top = static_cast<int>(rng.uniform_int(0, host.height - side));
  result.left = static_cast<int>(rng.uniform_int(0, host.width - side));
  result.donor_top = static_cast<int>(rng.uniform_int(0, donor.height - side));
  result.donor_left = static_cast<int>(rng.uniform_int(0, donor.width - side));

  result.image = host;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c)
      for (int ch = 0; ch < host.channels; ++ch)
        result.image.at(result.top + r, result.left + c, ch) =
            donor.at(result.donor_top + r, result.donor_left + c, ch);
  result.mask =
      mask_from_rect(host.width, host.height, result.top, result.left, side);
  return result;
}

Manifest build_dataset(const std::filesystem::path& hosts_dir,
                       const std::filesystem::path& donors_dir, int n,
                       std::uint64_t seed, const std::filesystem::path& out_dir,
                       int side) {
  if (n < 1) fail(Errc::bad_config, "dataset size must be >= 1");
  if (!std::filesystem::is_directory(hosts_dir))
    fail(Errc::file_missing, "hosts directory missing: " + hosts_dir.string());
  if (!std::filesystem::is_directory(donors_dir))
    fail(Errc::file_missing, "donors directory missing: " + donors_dir.string());

  const std::vector<std::filesystem::path> hosts = list_images(hosts_dir);
  if (hosts.empty())
    fail(Errc::empty_input, "no host images in " + hosts_dir.string());

  // Groups = immediate subdirectories; a flat directory is one group.
  std::vector<std::pair<std::string, std::vector<std::filesystem::path>>> groups;
  std::vector<std::filesystem::path> subdirs;
  for (const auto& entry : std::filesystem::directory_iterator(donors_dir))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) {
    groups.emplace_back(donors_dir.filename().string(), list_images(donors_dir));
  } else {
    for (const auto& d : subdirs)
      groups.emplace_back(d.filename().string(), list_images(d));
  }
  for (const auto& [name, files] : groups)
    if (files.empty())
      fail(Errc::empty_input, "donor group '" + name + "' has no images");
  const int n_groups = static_cast<int>(groups.size());
  if (n % n_groups != 0)
    fail(Errc::bad_config, "dataset size " + std::to_string(n) +
                               " not divisible by " + std::to_string(n_groups) +
                               " donor groups");

  // All draws happen in one fixed sequence before any file is written.
  const Rng master(seed);
  Rng host_rng = master.child(1);
  Rng donor_rng = master.child(2);

  std::vector<std::size_t> host_order(hosts.size());
  for (std::size_t i = 0; i < host_order.size(); ++i) host_order[i] = i;
  shuffle_paths(host_order, master.child(0));

  Manifest manifest;
  manifest.seed = seed;
  struct Job {
    SpliceRecord record;
    std::filesystem::path host_path, donor_path;
  };
  std::vector<Job> jobs;
  for (int k = 0; k < n; ++k) {
    Job job;
    const std::size_t host_idx =
        k < static_cast<int>(hosts.size())
            ? host_order[k]
            : static_cast<std::size_t>(host_rng.uniform_int(
                  0, static_cast<std::int64_t>(hosts.size()) - 1));
    const auto& [group_name, group_files] = groups[k % n_groups];
    const std::size_t donor_idx = static_cast<std::size_t>(donor_rng.uniform_int(
        0, static_cast<std::int64_t>(group_files.size()) - 1));

    job.host_path = hosts[host_idx];
    job.donor_path = group_files[donor_idx];
    job.record.output_id = zero_pad(k, 6);
    job.record.host_id = job.host_path.stem().string();
    job.record.donor_id = job.donor_path.stem().string();
    job.record.group = group_name;
    job.record.side = side;
    job.record.seed = master.child(1000 + static_cast<std::uint64_t>(k)).seed();
    jobs.push_back(std::move(job));
    manifest.group_counts[group_name]++;
  }

  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "masks");
  for (Job& job : jobs) {
    const Raster host = read_image(job.host_path);
    const Raster donor = read_image(job.donor_path);
    SpliceResult spliced = splice(host, donor, side, job.record.seed);
    job.record.top = spliced.top;
    job.record.left = spliced.left;
    write_image(spliced.image, out_dir / "images" / (job.record.output_id + ".png"));
    write_mask(spliced.mask, out_dir / "masks" / (job.record.output_id + ".png"));
    manifest.records.push_back(job.record);
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

std::pair<Raster, Raster> gen_toy_pair(std::uint64_t seed, int size) {
  if (size < 8 || size % 4 != 0)
    fail(Errc::bad_config,
         "toy image size must be >= 8 and divisible by 4, got " +
             std::to_string(size));
  Rng rng(seed);

  // Bright noisy background with dark elongated Gaussian bands.
  std::vector<double> base(static_cast<std::size_t>(size) * size);
  for (double& v : base) v = 0.85 + 0.03 * rng.gaussian();

  const int n_bands = static_cast<int>(rng.uniform_int(3, 7));
  for (int b = 0; b < n_bands; ++b) {
    const double cr = rng.uniform(0.1 * size, 0.9 * size);
    const double cc = rng.uniform(0.1 * size, 0.9 * size);
    const double sigma_v = rng.uniform(2.0, 5.0);
    const double sigma_h = rng.uniform(size / 16.0, size / 5.0);
    const double amp = rng.uniform(0.35, 0.7);
    // Bands decay fast; limit the stamp to a 4-sigma window.
    const int r_lo = std::max(0, static_cast<int>(cr - 4 * sigma_v));
    const int r_hi = std::min(size - 1, static_cast<int>(cr + 4 * sigma_v));
    const int c_lo = std::max(0, static_cast<int>(cc - 4 * sigma_h));
    const int c_hi = std::min(size - 1, static_cast<int>(cc + 4 * sigma_h));
    for (int r = r_lo; r <= r_hi; ++r)
      for (int c = c_lo; c <= c_hi; ++c) {
        const double dr = (r - cr) / sigma_v;
        const double dc = (c - cc) / sigma_h;
        base[static_cast<std::size_t>(r) * size + c] -=
            amp * std::exp(-0.5 * (dr * dr + dc * dc));
      }
  }
  for (double& v : base) v = std::min(0.97, std::max(0.03, v));

  Raster real(size, size, 1);
  for (std::size_t i = 0; i < base.size(); ++i)
    real.pixels[i] = static_cast<float>(base[i]);

  // Synthetic twin: 2x nearest-neighbor downscale/upscale round-trip plus
  // a low-amplitude period-2 checkerboard.
  Raster synth(size, size, 1);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const int sr = (r / 2) * 2;
      const int sc = (c / 2) * 2;
      double v = base[static_cast<std::size_t>(sr) * size + sc];
      v += ((r + c) % 2 == 0) ? 0.02 : -0.02;
      synth.at(r, c) = static_cast<float>(std::min(1.0, std::max(0.0, v)));
    }
  return {std::move(real), std::move(synth)};
}

}  // namespace synloc
