#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "omclic/errors.hpp"

namespace omclic {

/// One real-valued image channel. Row-major indexing matches ImageU8.
using ChannelMat = Eigen::MatrixXd;

/// 8-bit raster image, row-major, channel-interleaved. channels is 1 or 3.
struct ImageU8 {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  ImageU8() = default;
  ImageU8(int h, int w, int c, std::uint8_t fill = 0)
      : height(h), width(w), channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, fill) {
    if (h <= 0 || w <= 0) throw DimZero("image dims must be positive");
    if (c != 1 && c != 3) throw ChannelMismatch("channels must be 1 or 3");
  }

  std::uint8_t& at(int r, int c, int ch = 0) {
    return pixels[(static_cast<std::size_t>(r) * width + c) * channels + ch];
  }
  std::uint8_t at(int r, int c, int ch = 0) const {
    return pixels[(static_cast<std::size_t>(r) * width + c) * channels + ch];
  }

  bool same_dims(const ImageU8& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool operator==(const ImageU8& o) const = default;
};

/// Clamp to [0,255] then round half away from zero.
inline std::uint8_t quantize(double v) {
  if (v <= 0.0) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

inline ChannelMat channel_of(const ImageU8& img, int ch) {
  ChannelMat m(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) m(r, c) = img.at(r, c, ch);
  return m;
}

inline void set_channel(ImageU8& img, int ch, const ChannelMat& m) {
  if (m.rows() != img.height || m.cols() != img.width)
    throw DimMismatch("channel dims do not match image");
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) img.at(r, c, ch) = quantize(m(r, c));
}

}  // namespace omclic
