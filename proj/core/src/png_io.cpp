#include "ov/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <zlib.h>

#include "ov/errors.hpp"

namespace ov {

namespace {

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = out.size();
  out.append(type, 4);
  out.append(data);
  const auto crc =
      crc32(0, reinterpret_cast<const Bytef*>(out.data() + crc_start),
            static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png(const Image& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3)
    throw IoError("png writer supports 1 or 3 channels");
  if (image.width <= 0 || image.height <= 0)
    throw IoError("png writer needs a non-empty image");

  // Filter byte 0 per scanline, 8-bit samples.
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(image.height) *
              (1 + static_cast<std::size_t>(image.width) * image.channels));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c) {
        const double v = std::clamp(image.at(y, x, c), 0.0, 1.0);
        raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
  }

  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw IoError("png deflate failed");

  std::string out;
  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.append(reinterpret_cast<const char*>(sig), 8);

  std::string ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(image.width));
  put_be32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(image.channels == 1 ? 0 : 2);         // gray / truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT",
            std::string(reinterpret_cast<const char*>(comp.data()), comp_size));
  put_chunk(out, "IEND", "");

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("png write failed: " + path);
}

void write_png_normalized(const Image& image, double lo, double hi,
                          const std::string& path) {
  Image scaled = image;
  const double span = hi > lo ? hi - lo : 1.0;
  for (double& v : scaled.data) v = (v - lo) / span;
  write_png(scaled, path);
}

}  // namespace ov
