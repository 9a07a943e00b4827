#include "synloc/scoring.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "synloc/image_io.hpp"
#include "synloc/parallel.hpp"

namespace synloc {

namespace {

void check_ref(const Raster& image, const PatchRef& ref) {
  if (ref.size < 1 || ref.top < 0 || ref.left < 0 ||
      ref.top + ref.size > image.height || ref.left + ref.size > image.width)
    fail(Errc::out_of_bounds,
         "patch (" + std::to_string(ref.top) + "," + std::to_string(ref.left) +
             ")+" + std::to_string(ref.size) + " exceeds image " +
             std::to_string(image.width) + "x" + std::to_string(image.height));
}

std::string unique_stem(const char* kind) {
  static std::atomic<std::uint64_t> counter{0};
  return std::string("pbat_") + kind + "_" + std::to_string(::getpid()) + "_" +
         std::to_string(counter.fetch_add(1));
}

void put_f32_le(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

struct TempFileGuard {
  std::filesystem::path path;
  ~TempFileGuard() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

}  // namespace

std::vector<double> PatchScorer::score_all(
    const Raster& image, const std::vector<PatchRef>& refs) const {
  std::vector<double> scores(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i)
    scores[i] = score_one(image, refs[i]);
  return scores;
}

double oracle_score(const BinaryMask& mask, const PatchRef& ref) {
  if (ref.size < 1 || ref.top < 0 || ref.left < 0 ||
      ref.top + ref.size > mask.height || ref.left + ref.size > mask.width)
    fail(Errc::out_of_bounds, "patch exceeds mask bounds");
  std::int64_t ones = 0;
  for (int r = ref.top; r < ref.top + ref.size; ++r)
    for (int c = ref.left; c < ref.left + ref.size; ++c) ones += mask.at(r, c);
  return static_cast<double>(ones) /
         (static_cast<double>(ref.size) * ref.size);
}

OracleScorer::OracleScorer(BinaryMask mask) : mask_(std::move(mask)) {
  mask_.validate();
}

double OracleScorer::score_one(const Raster& image, const PatchRef& ref) const {
  if (image.width != mask_.width || image.height != mask_.height)
    fail(Errc::dimension_mismatch,
         "oracle mask dimensions do not match the image");
  return oracle_score(mask_, ref);
}

MicronetScorer::MicronetScorer(NetParams params) : params_(std::move(params)) {
  params_.shape.validate();
}

double MicronetScorer::score_one(const Raster& image, const PatchRef& ref) const {
  check_ref(image, ref);
  return forward(params_, extract_patch(image, ref));
}

ExternalScorer::ExternalScorer(std::string command_template,
                               std::filesystem::path workdir)
    : command_(std::move(command_template)), workdir_(std::move(workdir)) {
  if (command_.find("{in}") == std::string::npos ||
      command_.find("{out}") == std::string::npos)
    fail(Errc::bad_config,
         "external command template must contain {in} and {out} placeholders");
}

double ExternalScorer::score_one(const Raster& image, const PatchRef& ref) const {
  check_ref(image, ref);
  return external_roundtrip({extract_patch(image, ref)}, command_, workdir_)[0];
}

std::vector<double> ExternalScorer::score_all(
    const Raster& image, const std::vector<PatchRef>& refs) const {
  std::vector<Raster> patches;
  patches.reserve(refs.size());
  for (const PatchRef& ref : refs) {
    check_ref(image, ref);
    patches.push_back(extract_patch(image, ref));
  }
  return external_roundtrip(patches, command_, workdir_);
}

std::vector<double> external_roundtrip(const std::vector<Raster>& patches,
                                       const std::string& command_template,
                                       const std::filesystem::path& workdir) {
  int patch_size = 0, channels = 1;
  if (!patches.empty()) {
    patch_size = patches.front().width;
    channels = patches.front().channels;
    for (const Raster& p : patches)
      if (p.width != patch_size || p.height != patch_size ||
          p.channels != channels || p.width != p.height)
        fail(Errc::shape_mismatch,
             "all patches in a batch must be square with equal dimensions and "
             "channel count");
  }

  const std::filesystem::path dir =
      workdir.empty() ? std::filesystem::temp_directory_path() : workdir;
  TempFileGuard req{dir / (unique_stem("req") + ".bin")};
  TempFileGuard resp{dir / (unique_stem("resp") + ".bin")};

  std::string payload = "PBAT 1 " + std::to_string(patches.size()) + " " +
                        std::to_string(patch_size) + " " +
                        std::to_string(channels) + "\n";
  for (const Raster& p : patches)
    for (float v : p.pixels) put_f32_le(payload, v);
  {
    std::ofstream out(req.path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::unwritable_path, "cannot write " + req.path.string());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) fail(Errc::unwritable_path, "write failed: " + req.path.string());
  }

  std::string cmd = command_template;
  replace_all(cmd, "{in}", std::filesystem::absolute(req.path).string());
  replace_all(cmd, "{out}", std::filesystem::absolute(resp.path).string());
  if (!workdir.empty())
    cmd = "cd \"" + workdir.string() + "\" && " + cmd;

  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc) || WEXITSTATUS(rc) != 0)
    fail(Errc::process_failed,
         "external scorer exited abnormally (status " +
             std::to_string(rc == -1 ? -1 : WEXITSTATUS(rc)) + "): " + cmd);

  std::ifstream in(resp.path, std::ios::binary);
  if (!in)
    fail(Errc::bad_response, "external scorer wrote no response file");
  std::vector<unsigned char> raw(patches.size() * 4);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    fail(Errc::bad_response,
         "external scorer response shorter than " +
             std::to_string(patches.size()) + " scores");
  char extra;
  if (in.read(&extra, 1))
    fail(Errc::bad_response, "external scorer response longer than expected");

  std::vector<double> scores(patches.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::uint32_t bits = static_cast<std::uint32_t>(raw[i * 4]) |
                         (static_cast<std::uint32_t>(raw[i * 4 + 1]) << 8) |
                         (static_cast<std::uint32_t>(raw[i * 4 + 2]) << 16) |
                         (static_cast<std::uint32_t>(raw[i * 4 + 3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!(f >= 0.0f && f <= 1.0f))
      fail(Errc::out_of_range,
           "external score " + std::to_string(f) + " outside [0,1] at index " +
               std::to_string(i));
    scores[i] = static_cast<double>(f);
  }
  return scores;
}

void ScorerConfig::validate() const {
  const bool has_mask = !mask_path.empty();
  const bool has_ckpt = !checkpoint_path.empty();
  const bool has_cmd = !command.empty();
  switch (kind) {
    case Kind::oracle:
      if (!has_mask || has_ckpt || has_cmd)
        fail(Errc::bad_config, "oracle scorer takes exactly a mask path");
      break;
    case Kind::micronet:
      if (!has_ckpt || has_mask || has_cmd)
        fail(Errc::bad_config, "micronet scorer takes exactly a checkpoint path");
      break;
    case Kind::external:
      if (!has_cmd || has_mask || has_ckpt)
        fail(Errc::bad_config, "external scorer takes exactly a command template");
      break;
  }
}

std::unique_ptr<PatchScorer> ScorerConfig::make_scorer() const {
  validate();
  switch (kind) {
    case Kind::oracle:
      return std::make_unique<OracleScorer>(read_mask(mask_path));
    case Kind::micronet:
      return std::make_unique<MicronetScorer>(load_checkpoint(checkpoint_path));
    case Kind::external:
      return std::make_unique<ExternalScorer>(command, workdir);
  }
  fail(Errc::bad_config, "unknown scorer kind");
}

std::vector<PatchScore> score_patches(const Raster& image,
                                      const std::vector<PatchRef>& refs,
                                      const PatchScorer& scorer, int workers) {
  for (const PatchRef& ref : refs) check_ref(image, ref);

  std::vector<double> scores;
  if (workers > 1 && scorer.thread_safe()) {
    scores.resize(refs.size());
    parallel_chunks(refs.size(), 64, workers,
                    [&](std::size_t begin, std::size_t end) {
                      for (std::size_t i = begin; i < end; ++i)
                        scores[i] = scorer.score_one(image, refs[i]);
                    });
  } else {
    scores = scorer.score_all(image, refs);
  }
  if (scores.size() != refs.size())
    fail(Errc::bad_response, "scorer returned a wrong number of scores");

  std::vector<PatchScore> out(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0))
      fail(Errc::out_of_range,
           "patch score " + std::to_string(scores[i]) + " outside [0,1]");
    out[i] = {refs[i].top, refs[i].left, scores[i]};
  }
  return out;
}

}  // namespace synloc
