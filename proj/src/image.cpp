#include "trajrest/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace trajrest {

Image::Image(int h, int w, int c, float fill) : height(h), width(w), channels(c) {
  if (h <= 0 || w <= 0 || (c != 1 && c != 3)) {
    throw ImageError("invalid image dimensions " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                     std::to_string(c));
  }
  pixels.assign(static_cast<std::size_t>(h) * w * c, fill);
}

Image::Image(int h, int w, int c, std::vector<float> data) : Image(h, w, c) {
  if (data.size() != pixels.size()) throw ImageError("pixel count does not match dimensions");
  pixels = std::move(data);
}

void Image::clamp() {
  for (float& v : pixels) v = std::clamp(v, 0.0f, 1.0f);
}

bool operator==(const Image& a, const Image& b) { return a.same_dims(b) && a.pixels == b.pixels; }

std::uint8_t quantize_u8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Netpbm header token, skipping whitespace and '#' comments.
std::string pnm_token(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok.push_back(static_cast<char>(b[pos++]));
  if (tok.empty()) throw ImageError("truncated netpbm header");
  return tok;
}

Image decode_pnm(const std::vector<std::uint8_t>& b) {
  std::size_t pos = 0;
  const std::string magic = pnm_token(b, pos);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw ImageError("unsupported netpbm variant " + magic);
  }
  int width = 0;
  int height = 0;
  int maxval = 0;
  try {
    width = std::stoi(pnm_token(b, pos));
    height = std::stoi(pnm_token(b, pos));
    maxval = std::stoi(pnm_token(b, pos));
  } catch (const std::logic_error&) {
    throw ImageError("malformed netpbm header");
  }
  if (maxval != 255) throw ImageError("only 8-bit netpbm (maxval 255) is supported");
  if (width <= 0 || height <= 0) throw ImageError("invalid netpbm dimensions");
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (pos + need > b.size()) throw ImageError("truncated netpbm pixel data");
  Image img(height, width, channels);
  for (std::size_t i = 0; i < need; ++i) img.pixels[i] = static_cast<float>(b[pos + i]) / 255.0f;
  return img;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
  std::ostringstream header;
  header << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + img.pixels.size());
  for (float v : img.pixels) out.push_back(quantize_u8(v));
  return out;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ImageError("image not found: " + path.string());
  const auto bytes = read_bytes(path);
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes);
  throw ImageError("unsupported image format: " + path.string());
}

void write_image(const Image& img, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  std::vector<std::uint8_t> bytes;
  if (ext == ".png") {
    bytes = encode_png(img);
  } else if (ext == ".ppm" || ext == ".pgm") {
    if ((ext == ".ppm") != (img.channels == 3)) {
      throw ImageError("extension " + ext + " does not match channel count");
    }
    bytes = encode_pnm(img);
  } else {
    throw ImageError("unsupported output extension: " + path.string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write image: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("write failed: " + path.string());
}

namespace {

struct Tap {
  int lo;
  int hi;
  float w_hi;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double ratio = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, static_cast<float>(src - lo)};
  }
  return taps;
}

}  // namespace

Image resize(const Image& img, int target_h, int target_w) {
  if (target_h <= 0 || target_w <= 0) throw ImageError("resize: target dimensions must be positive");
  if (target_h == img.height && target_w == img.width) return img;
  const auto ty = bilinear_taps(img.height, target_h);
  const auto tx = bilinear_taps(img.width, target_w);
  Image out(target_h, target_w, img.channels);
  for (int r = 0; r < target_h; ++r) {
    const Tap& y = ty[r];
    for (int c = 0; c < target_w; ++c) {
      const Tap& x = tx[c];
      for (int ch = 0; ch < img.channels; ++ch) {
        const float top = img.at(y.lo, x.lo, ch) + x.w_hi * (img.at(y.lo, x.hi, ch) - img.at(y.lo, x.lo, ch));
        const float bot = img.at(y.hi, x.lo, ch) + x.w_hi * (img.at(y.hi, x.hi, ch) - img.at(y.hi, x.lo, ch));
        out.at(r, c, ch) = std::clamp(top + y.w_hi * (bot - top), 0.0f, 1.0f);
      }
    }
  }
  return out;
}

std::pair<int, int> dims_for_shorter_side(int height, int width, int shorter) {
  if (shorter <= 0) throw ImageError("shorter side must be positive");
  if (height <= width) {
    const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(width) * shorter / height)));
    return {shorter, w};
  }
  const int h = std::max(1, static_cast<int>(std::lround(static_cast<double>(height) * shorter / width)));
  return {h, shorter};
}

Image resize_shorter_side(const Image& img, int shorter) {
  const auto [h, w] = dims_for_shorter_side(img.height, img.width, shorter);
  return resize(img, h, w);
}

Image down_up(const Image& img, int r) {
  const int shorter = std::min(img.height, img.width);
  if (r <= 0 || r > shorter) {
    throw ImageError("down_up: resolution " + std::to_string(r) + " must be in [1, " + std::to_string(shorter) + "]");
  }
  const Image small = resize_shorter_side(img, r);
  return resize(small, img.height, img.width);
}

CropOffset draw_crop_offset(int height, int width, int size, Rng& rng) {
  if (size <= 0 || size > height || size > width) {
    throw ImageError("crop size " + std::to_string(size) + " exceeds image " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  CropOffset off;
  off.row = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(height - size + 1)));
  off.col = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(width - size + 1)));
  return off;
}

Image crop(const Image& img, CropOffset offset, int size) {
  if (offset.row < 0 || offset.col < 0 || offset.row + size > img.height || offset.col + size > img.width) {
    throw ImageError("crop window outside image");
  }
  Image out(size, size, img.channels);
  for (int r = 0; r < size; ++r) {
    const float* src = &img.pixels[(static_cast<std::size_t>(offset.row + r) * img.width + offset.col) * img.channels];
    std::copy_n(src, static_cast<std::size_t>(size) * img.channels,
                &out.pixels[static_cast<std::size_t>(r) * size * img.channels]);
  }
  return out;
}

Image random_crop(const Image& img, int size, Rng& rng) {
  return crop(img, draw_crop_offset(img.height, img.width, size, rng), size);
}

Image flip_horizontal(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      for (int ch = 0; ch < img.channels; ++ch) out.at(r, img.width - 1 - c, ch) = img.at(r, c, ch);
    }
  }
  return out;
}

}  // namespace trajrest
