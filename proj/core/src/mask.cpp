#include "ovseg/mask.hpp"

#include <numeric>
#include <string>

#include "ovseg/errors.hpp"

namespace ovseg {

BinaryMask BinaryMask::zeros(std::uint32_t w, std::uint32_t h) {
  return BinaryMask{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
}

BinaryMask BinaryMask::full(std::uint32_t w, std::uint32_t h) {
  return BinaryMask{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 1)};
}

std::uint64_t BinaryMask::area() const {
  std::uint64_t n = 0;
  for (std::uint8_t b : bits) n += b;
  return n;
}

void BinaryMask::validate() const {
  if (width == 0 || height == 0) {
    throw validation_error("BinaryMask: width and height must be >= 1, got " +
                           std::to_string(width) + "x" + std::to_string(height));
  }
  if (bits.size() != static_cast<std::size_t>(width) * height) {
    throw validation_error("BinaryMask: bit count " + std::to_string(bits.size()) +
                           " does not equal " + std::to_string(width) + "x" +
                           std::to_string(height));
  }
  for (std::uint8_t b : bits) {
    if (b > 1) throw validation_error("BinaryMask: raster values must be 0 or 1");
  }
}

SoftMask SoftMask::constant(std::uint32_t w, std::uint32_t h, float v) {
  return SoftMask{w, h, std::vector<float>(static_cast<std::size_t>(w) * h, v)};
}

void SoftMask::validate() const {
  if (width == 0 || height == 0) {
    throw validation_error("SoftMask: width and height must be >= 1");
  }
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw validation_error("SoftMask: value count does not match dimensions");
  }
  for (float v : values) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw validation_error("SoftMask: value " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

void RleMask::validate() const {
  if (width == 0 || height == 0) {
    throw validation_error("RleMask: width and height must be >= 1");
  }
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i] == 0) {
      throw validation_error("RleMask: interior run of length 0 at index " + std::to_string(i));
    }
  }
  std::uint64_t total = std::accumulate(runs.begin(), runs.end(), std::uint64_t{0});
  std::uint64_t pixels = static_cast<std::uint64_t>(width) * height;
  if (total != pixels) {
    throw format_error("RleMask: runs sum to " + std::to_string(total) + " pixels, expected " +
                       std::to_string(pixels));
  }
}

RleMask rle_encode(const BinaryMask& mask) {
  mask.validate();
  RleMask rle{mask.width, mask.height, {}};
  std::uint8_t current = 0;  // runs always start on the zero phase
  std::uint32_t run = 0;
  for (std::uint8_t b : mask.bits) {
    if (b == current) {
      ++run;
    } else {
      rle.runs.push_back(run);
      current = b;
      run = 1;
    }
  }
  rle.runs.push_back(run);
  return rle;
}

BinaryMask rle_decode(const RleMask& rle) {
  rle.validate();
  BinaryMask mask = BinaryMask::zeros(rle.width, rle.height);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : rle.runs) {
    if (value) std::fill_n(mask.bits.begin() + pos, run, std::uint8_t{1});
    pos += run;
    value ^= 1;
  }
  return mask;
}

BinaryMask binarize(const SoftMask& sigma, float threshold) {
  if (!(threshold >= 0.0f && threshold <= 1.0f)) {
    throw validation_error("binarize: threshold must lie in [0, 1]");
  }
  BinaryMask out{sigma.width, sigma.height, {}};
  out.bits.resize(sigma.values.size());
  for (std::size_t i = 0; i < sigma.values.size(); ++i) {
    out.bits[i] = sigma.values[i] >= threshold ? 1 : 0;
  }
  return out;
}

BinaryMask resample_nearest(const BinaryMask& mask, std::uint32_t out_w, std::uint32_t out_h) {
  if (out_w == 0 || out_h == 0) {
    throw validation_error("resample_nearest: target dimensions must be >= 1");
  }
  if (out_w == mask.width && out_h == mask.height) return mask;
  BinaryMask out = BinaryMask::zeros(out_w, out_h);
  for (std::uint32_t y = 0; y < out_h; ++y) {
    // Integer pixel-center mapping: src = floor((y + 0.5) * in / out).
    std::uint32_t sy = static_cast<std::uint32_t>(
        (2ull * y + 1) * mask.height / (2ull * out_h));
    for (std::uint32_t x = 0; x < out_w; ++x) {
      std::uint32_t sx = static_cast<std::uint32_t>(
          (2ull * x + 1) * mask.width / (2ull * out_w));
      out.bits[static_cast<std::size_t>(y) * out_w + x] = mask.at(sx, sy);
    }
  }
  return out;
}

}  // namespace ovseg
