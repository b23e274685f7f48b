// Minimal PNG codec: 8-bit grayscale / RGB, non-interlaced. zlib supplies
// DEFLATE and CRC-32.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <cstring>

#include "trajrest/image.hpp"

namespace trajrest {
namespace {

constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  // Filter type 0 on every row keeps the encoder trivially deterministic.
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * img.height);
  for (int r = 0; r < img.height; ++r) {
    raw.push_back(0);
    for (std::size_t i = 0; i < stride; ++i) raw.push_back(quantize_u8(img.pixels[r * stride + i]));
  }
  uLongf dest_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(dest_len);
  if (compress2(compressed.data(), &dest_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw ImageError("PNG compression failed");
  }
  compressed.resize(dest_len);

  std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);                                // bit depth
  ihdr.push_back(img.channels == 3 ? 2 : 0);        // color type
  ihdr.push_back(0);                                // compression
  ihdr.push_back(0);                                // filter method
  ihdr.push_back(0);                                // interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", {});
  return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || !std::equal(kSignature.begin(), kSignature.end(), bytes.begin())) {
    throw ImageError("not a PNG file");
  }
  std::size_t pos = 8;
  int width = 0;
  int height = 0;
  int channels = 0;
  bool have_header = false;
  bool have_end = false;
  std::vector<std::uint8_t> idat;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = read_be32(&bytes[pos]);
    const std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
    if (pos + 12 + static_cast<std::size_t>(len) > bytes.size()) throw ImageError("truncated PNG chunk " + type);
    const std::uint8_t* data = &bytes[pos + 8];
    const std::uint32_t stored_crc = read_be32(data + len);
    if (crc32(0L, &bytes[pos + 4], len + 4) != stored_crc) throw ImageError("PNG CRC mismatch in " + type);
    if (type == "IHDR") {
      if (len != 13) throw ImageError("malformed IHDR");
      width = static_cast<int>(read_be32(data));
      height = static_cast<int>(read_be32(data + 4));
      const int depth = data[8];
      const int color = data[9];
      if (depth != 8) throw ImageError("unsupported PNG bit depth " + std::to_string(depth));
      if (color == 0) {
        channels = 1;
      } else if (color == 2) {
        channels = 3;
      } else {
        throw ImageError("unsupported PNG color type " + std::to_string(color));
      }
      if (data[12] != 0) throw ImageError("interlaced PNG is not supported");
      have_header = true;
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      have_end = true;
      break;
    }
    pos += 12 + len;
  }
  if (!have_header || !have_end) throw ImageError("truncated PNG stream");
  if (width <= 0 || height <= 0) throw ImageError("invalid PNG dimensions");

  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint8_t> raw((stride + 1) * height);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size()) {
    throw ImageError("corrupt or truncated PNG image data");
  }

  const int bpp = channels;
  std::vector<std::uint8_t> cur(stride);
  std::vector<std::uint8_t> prev(stride, 0);
  Image img(height, width, channels);
  for (int r = 0; r < height; ++r) {
    const std::uint8_t filter = raw[r * (stride + 1)];
    const std::uint8_t* line = &raw[r * (stride + 1) + 1];
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      int v = line[i];
      switch (filter) {
        case 0:
          break;
        case 1:
          v += a;
          break;
        case 2:
          v += b;
          break;
        case 3:
          v += (a + b) / 2;
          break;
        case 4:
          v += paeth(a, b, c);
          break;
        default:
          throw ImageError("invalid PNG filter type " + std::to_string(filter));
      }
      cur[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    for (std::size_t i = 0; i < stride; ++i) img.pixels[r * stride + i] = static_cast<float>(cur[i]) / 255.0f;
    std::swap(cur, prev);
  }
  return img;
}

}  // namespace trajrest
