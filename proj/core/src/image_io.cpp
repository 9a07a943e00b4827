#include "synloc/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace synloc {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct ByteImage {
  int width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> bytes;  // row-major, interleaved
};

// libpng reports fatal errors by longjmp-ing back to the setjmp point in
// the calling function; the message is stashed here first.
struct PngErrBuf {
  char msg[240] = {0};
};

void png_error_fn(png_structp png, png_const_charp m) {
  auto* buf = static_cast<PngErrBuf*>(png_get_error_ptr(png));
  if (buf) std::snprintf(buf->msg, sizeof buf->msg, "%s", m);
  png_longjmp(png, 1);
}

void png_warn_fn(png_structp, png_const_charp) {}

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

ByteImage read_png_bytes(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) fail(Errc::file_missing, "cannot open " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(Errc::corrupt_stream, "not a PNG stream: " + path.string());

  PngErrBuf errbuf;
  PngReadGuard g;
  ByteImage img;

  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &errbuf, png_error_fn,
                                 png_warn_fn);
  if (!g.png) fail(Errc::corrupt_stream, "png reader allocation failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) fail(Errc::corrupt_stream, "png info allocation failed");

  if (setjmp(png_jmpbuf(g.png)))
    fail(Errc::corrupt_stream,
         "png: " + std::string(errbuf.msg) + " (" + path.string() + ")");

  png_init_io(g.png, f.get());
  png_set_sig_bytes(g.png, 8);
  png_read_info(g.png, g.info);

  const int bit_depth = png_get_bit_depth(g.png, g.info);
  const int color_type = png_get_color_type(g.png, g.info);
  if (bit_depth != 8)
    fail(Errc::unsupported_format,
         "unsupported bit depth " + std::to_string(bit_depth) + " in " +
             path.string() + " (8-bit only)");
  if (png_get_interlace_type(g.png, g.info) != PNG_INTERLACE_NONE)
    fail(Errc::unsupported_format, "interlaced PNG unsupported: " + path.string());
  int channels;
  if (color_type == PNG_COLOR_TYPE_GRAY)
    channels = 1;
  else if (color_type == PNG_COLOR_TYPE_RGB)
    channels = 3;
  else
    fail(Errc::unsupported_format,
         "unsupported PNG color type " + std::to_string(color_type) + " in " +
             path.string() + " (8-bit gray or RGB only)");

  img.width = static_cast<int>(png_get_image_width(g.png, g.info));
  img.height = static_cast<int>(png_get_image_height(g.png, g.info));
  img.channels = channels;
  img.bytes.resize(static_cast<std::size_t>(img.width) * img.height * channels);

  const std::size_t stride = static_cast<std::size_t>(img.width) * channels;
  for (int y = 0; y < img.height; ++y)
    png_read_row(g.png, img.bytes.data() + y * stride, nullptr);
  png_read_end(g.png, nullptr);
  return img;
}

void write_png_bytes(const ByteImage& img, const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.string().c_str(), "wb"));
  if (!f) fail(Errc::unwritable_path, "cannot write " + path.string());

  PngErrBuf errbuf;
  PngWriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &errbuf, png_error_fn,
                                  png_warn_fn);
  if (!g.png) fail(Errc::unwritable_path, "png writer allocation failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) fail(Errc::unwritable_path, "png info allocation failed");

  if (setjmp(png_jmpbuf(g.png)))
    fail(Errc::unwritable_path,
         "png: " + std::string(errbuf.msg) + " (" + path.string() + ")");

  png_init_io(g.png, f.get());
  png_set_IHDR(g.png, g.info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y)
    png_write_row(g.png, const_cast<png_bytep>(img.bytes.data() + y * stride));
  png_write_end(g.png, nullptr);
}

bool has_pnm_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char m[2] = {0, 0};
  in.read(m, 2);
  return m[0] == 'P' && (m[1] == '5' || m[1] == '6');
}

int pnm_next_int(std::istream& in) {
  // Skips whitespace and '#' comments, per the PNM grammar.
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value;
  if (!(in >> value)) fail(Errc::corrupt_stream, "malformed PNM header");
  return value;
}

ByteImage read_pnm_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_missing, "cannot open " + path.string());
  char m0 = 0, m1 = 0;
  in.get(m0).get(m1);
  ByteImage img;
  img.channels = (m1 == '6') ? 3 : 1;
  img.width = pnm_next_int(in);
  img.height = pnm_next_int(in);
  const int maxval = pnm_next_int(in);
  if (maxval != 255)
    fail(Errc::unsupported_format,
         "PNM maxval " + std::to_string(maxval) + " unsupported (255 only)");
  if (img.width < 1 || img.height < 1)
    fail(Errc::corrupt_stream, "bad PNM dimensions");
  in.get();  // single whitespace byte before the payload
  const std::size_t n =
      static_cast<std::size_t>(img.width) * img.height * img.channels;
  img.bytes.resize(n);
  in.read(reinterpret_cast<char*>(img.bytes.data()),
          static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    fail(Errc::corrupt_stream, "truncated PNM payload in " + path.string());
  return img;
}

void put_le32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

Raster read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(Errc::file_missing, "no such file: " + path.string());
  ByteImage img =
      has_pnm_magic(path) ? read_pnm_bytes(path) : read_png_bytes(path);
  Raster out;
  out.width = img.width;
  out.height = img.height;
  out.channels = img.channels;
  out.pixels.resize(img.bytes.size());
  for (std::size_t i = 0; i < img.bytes.size(); ++i)
    out.pixels[i] = static_cast<float>(img.bytes[i]) / 255.0f;
  return out;
}

void write_image(const Raster& image, const std::filesystem::path& path) {
  image.validate();
  ByteImage img;
  img.width = image.width;
  img.height = image.height;
  img.channels = image.channels;
  img.bytes.resize(image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i)
    img.bytes[i] =
        static_cast<std::uint8_t>(std::lround(image.pixels[i] * 255.0f));
  write_png_bytes(img, path);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(Errc::file_missing, "no such file: " + path.string());
  ByteImage img = read_png_bytes(path);
  if (img.channels != 1)
    fail(Errc::unsupported_format, "mask must be grayscale: " + path.string());
  BinaryMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.labels.resize(img.bytes.size());
  for (std::size_t i = 0; i < img.bytes.size(); ++i) {
    const std::uint8_t b = img.bytes[i];
    if (b != 0 && b != 255) {
      const int r = static_cast<int>(i) / img.width;
      const int c = static_cast<int>(i) % img.width;
      fail(Errc::non_binary_value,
           "non-binary mask value " + std::to_string(b) + " at (" +
               std::to_string(r) + "," + std::to_string(c) + ") in " +
               path.string());
    }
    mask.labels[i] = b == 255 ? 1 : 0;
  }
  return mask;
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  mask.validate();
  ByteImage img;
  img.width = mask.width;
  img.height = mask.height;
  img.channels = 1;
  img.bytes.resize(mask.labels.size());
  for (std::size_t i = 0; i < mask.labels.size(); ++i)
    img.bytes[i] = mask.labels[i] ? 255 : 0;
  write_png_bytes(img, path);
}

void write_floatmap(const FloatMap& map, const std::filesystem::path& path) {
  map.validate();
  std::string payload;
  payload.reserve(32 + map.values.size() * 4);
  payload += "HMAP 1 " + std::to_string(map.width) + " " +
             std::to_string(map.height) + "\n";
  for (double v : map.values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_le32(payload, bits);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::unwritable_path, "cannot write " + path.string());
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(Errc::unwritable_path, "write failed: " + path.string());
}

FloatMap read_floatmap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_missing, "no such file: " + path.string());
  std::string header;
  if (!std::getline(in, header)) fail(Errc::bad_magic, "empty HMAP file");
  std::istringstream hs(header);
  std::string tag;
  int version = 0, width = 0, height = 0;
  hs >> tag >> version >> width >> height;
  if (tag != "HMAP" || version != 1 || hs.fail())
    fail(Errc::bad_magic, "bad HMAP header: '" + header + "'");
  if (width < 1 || height < 1) fail(Errc::bad_magic, "bad HMAP dimensions");

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<unsigned char> raw(n * 4);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    fail(Errc::dimension_mismatch,
         "HMAP payload shorter than " + std::to_string(width) + "x" +
             std::to_string(height));
  char extra;
  if (in.read(&extra, 1))
    fail(Errc::dimension_mismatch, "HMAP payload longer than header dimensions");

  FloatMap map;
  map.width = width;
  map.height = height;
  map.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = get_le32(raw.data() + i * 4);
    float f;
    std::memcpy(&f, &bits, 4);
    map.values[i] = static_cast<double>(f);
  }
  map.validate();
  return map;
}

void write_floatmap_png(const FloatMap& map, const std::filesystem::path& path) {
  map.validate();
  ByteImage img;
  img.width = map.width;
  img.height = map.height;
  img.channels = 1;
  img.bytes.resize(map.values.size());
  for (std::size_t i = 0; i < map.values.size(); ++i)
    img.bytes[i] = static_cast<std::uint8_t>(std::lround(map.values[i] * 255.0));
  write_png_bytes(img, path);
}

}  // namespace synloc
