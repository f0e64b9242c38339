#pragma once

#include <cstdint>
#include <vector>

namespace ovseg {

// Dense binary raster, row-major, one byte per pixel (0 or 1).
struct BinaryMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> bits;

  static BinaryMask zeros(std::uint32_t w, std::uint32_t h);
  static BinaryMask full(std::uint32_t w, std::uint32_t h);

  std::size_t size() const { return bits.size(); }
  std::uint8_t at(std::uint32_t x, std::uint32_t y) const {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  std::uint64_t area() const;

  void validate() const;
};

// Dense soft raster with values in [0, 1], row-major.
struct SoftMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> values;

  static SoftMask constant(std::uint32_t w, std::uint32_t h, float v);

  std::size_t size() const { return values.size(); }
  float at(std::uint32_t x, std::uint32_t y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }

  void validate() const;
};

// Run-length encoding of a BinaryMask. Runs alternate between zeros and
// ones, starting with the count of leading zeros (which may be 0). Row-major
// pixel order; the OVRL magic pins that convention.
struct RleMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint32_t> runs;

  void validate() const;
};

RleMask rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const RleMask& rle);

// Threshold a soft mask: bit set iff value >= threshold.
BinaryMask binarize(const SoftMask& sigma, float threshold);

// Nearest-neighbor resampling to a new raster size.
BinaryMask resample_nearest(const BinaryMask& mask, std::uint32_t out_w, std::uint32_t out_h);

}  // namespace ovseg
