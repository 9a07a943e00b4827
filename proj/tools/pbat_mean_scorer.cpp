// Reference external scorer speaking PBAT v1. Scores each patch with its
// mean pixel value; useful as a protocol template and as a test double.
//
//   pbat_mean_scorer <request.bin> <response.bin>
//
// Request:  "PBAT 1 <count> <patch_size> <channels>\n" followed by
//           count * P * P * channels row-major float32 (little-endian).
// Response: count float32 (little-endian), each in [0,1].

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: pbat_mean_scorer <request> <response>\n";
    return 2;
  }
  std::ifstream in(argv[1], std::ios::binary);
  if (!in) {
    std::cerr << "cannot open " << argv[1] << "\n";
    return 1;
  }
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string tag;
  long long count = -1, patch = 0, channels = 0;
  int version = 0;
  hs >> tag >> version >> count >> patch >> channels;
  if (tag != "PBAT" || version != 1 || count < 0) {
    std::cerr << "bad PBAT header: " << header << "\n";
    return 1;
  }

  const std::size_t per_patch =
      static_cast<std::size_t>(patch) * patch * channels;
  std::vector<unsigned char> buf(per_patch * 4);
  std::string out_payload;
  out_payload.reserve(static_cast<std::size_t>(count) * 4);

  for (long long i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
      std::cerr << "truncated request payload\n";
      return 1;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < per_patch; ++k) {
      std::uint32_t bits = static_cast<std::uint32_t>(buf[k * 4]) |
                           (static_cast<std::uint32_t>(buf[k * 4 + 1]) << 8) |
                           (static_cast<std::uint32_t>(buf[k * 4 + 2]) << 16) |
                           (static_cast<std::uint32_t>(buf[k * 4 + 3]) << 24);
      float f;
      std::memcpy(&f, &bits, 4);
      sum += f;
    }
    const float mean =
        per_patch == 0 ? 0.0f : static_cast<float>(sum / per_patch);
    std::uint32_t bits;
    std::memcpy(&bits, &mean, 4);
    out_payload.push_back(static_cast<char>(bits & 0xff));
    out_payload.push_back(static_cast<char>((bits >> 8) & 0xff));
    out_payload.push_back(static_cast<char>((bits >> 16) & 0xff));
    out_payload.push_back(static_cast<char>((bits >> 24) & 0xff));
  }

  std::ofstream out(argv[2], std::ios::binary | std::ios::trunc);
  out.write(out_payload.data(),
            static_cast<std::streamsize>(out_payload.size()));
  if (!out) {
    std::cerr << "cannot write " << argv[2] << "\n";
    return 1;
  }
  return 0;
}
