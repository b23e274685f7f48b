#pragma once
// Pixel-space images, 8-bit file I/O and resampling.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajrest/rng.hpp"

namespace trajrest {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// H x W x C, row-major, interleaved channels, values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f);
  Image(int h, int w, int c, std::vector<float> data);

  std::size_t size() const { return pixels.size(); }
  float& at(int row, int col, int ch) {
    return pixels[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  float at(int row, int col, int ch) const {
    return pixels[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  bool same_dims(const Image& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }
  void clamp();
};

bool operator==(const Image& a, const Image& b);

// Supported: 8-bit PNG (gray or RGB, non-interlaced), binary PGM (P5), PPM (P6).
Image read_image(const std::filesystem::path& path);
// Format chosen by extension: .png, .ppm, .pgm. Values are stored as round(v * 255).
void write_image(const Image& img, const std::filesystem::path& path);

std::uint8_t quantize_u8(float v);

// Bilinear interpolation with half-pixel centers and edge clamping.
// Same-size resize returns an exact copy.
Image resize(const Image& img, int target_h, int target_w);

// Dimensions after scaling the shorter side to `shorter`, aspect preserved.
std::pair<int, int> dims_for_shorter_side(int height, int width, int shorter);

Image resize_shorter_side(const Image& img, int shorter);

// Downsample so the shorter side equals r, then upsample back to the input size.
Image down_up(const Image& img, int r);

struct CropOffset {
  int row = 0;
  int col = 0;
};

// Draws row then column, each uniform over the valid range.
CropOffset draw_crop_offset(int height, int width, int size, Rng& rng);
Image crop(const Image& img, CropOffset offset, int size);
Image random_crop(const Image& img, int size, Rng& rng);

Image flip_horizontal(const Image& img);

// Encoders used by write_image; exposed for tests.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);

}  // namespace trajrest
