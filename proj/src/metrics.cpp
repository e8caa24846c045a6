#include "omclic/metrics.hpp"

#include <array>
#include <cmath>

namespace omclic {

namespace {

constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
constexpr double kPsnrCap = 100.0;

void require_same_dims(const ImageU8& x, const ImageU8& y) {
  if (!x.same_dims(y)) throw DimMismatch("metric inputs must share dimensions");
}

std::array<double, 11> gaussian11() {
  std::array<double, 11> w;
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5.0;
    w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// separable 11-tap valid convolution
ChannelMat gauss_filter(const ChannelMat& m) {
  static const std::array<double, 11> w = gaussian11();
  const Eigen::Index rows = m.rows(), cols = m.cols();
  ChannelMat tmp(rows, cols - 10);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c + 10 < cols; ++c) {
      double acc = 0.0;
      for (int i = 0; i < 11; ++i) acc += w[i] * m(r, c + i);
      tmp(r, c) = acc;
    }
  ChannelMat out(rows - 10, cols - 10);
  for (Eigen::Index c = 0; c < tmp.cols(); ++c)
    for (Eigen::Index r = 0; r + 10 < rows; ++r) {
      double acc = 0.0;
      for (int i = 0; i < 11; ++i) acc += w[i] * tmp(r + i, c);
      out(r, c) = acc;
    }
  return out;
}

struct SsimMeans {
  double ssim;  // mean full SSIM
  double cs;    // mean contrast-structure term
};

SsimMeans ssim_channel(const ChannelMat& x, const ChannelMat& y) {
  if (x.rows() < 11 || x.cols() < 11)
    throw MinSizeViolated("SSIM needs at least an 11x11 image");
  const ChannelMat mu_x = gauss_filter(x);
  const ChannelMat mu_y = gauss_filter(y);
  const ChannelMat xx = gauss_filter(x.cwiseProduct(x));
  const ChannelMat yy = gauss_filter(y.cwiseProduct(y));
  const ChannelMat xy = gauss_filter(x.cwiseProduct(y));

  double ssim_sum = 0.0, cs_sum = 0.0;
  for (Eigen::Index r = 0; r < mu_x.rows(); ++r)
    for (Eigen::Index c = 0; c < mu_x.cols(); ++c) {
      const double mx = mu_x(r, c), my = mu_y(r, c);
      const double vx = xx(r, c) - mx * mx;
      const double vy = yy(r, c) - my * my;
      const double cov = xy(r, c) - mx * my;
      const double cs = (2.0 * cov + kC2) / (vx + vy + kC2);
      const double lum = (2.0 * mx * my + kC1) / (mx * mx + my * my + kC1);
      ssim_sum += lum * cs;
      cs_sum += cs;
    }
  const double n = static_cast<double>(mu_x.size());
  return {ssim_sum / n, cs_sum / n};
}

ChannelMat mean_pool2(const ChannelMat& m) {
  const Eigen::Index rows = m.rows() / 2, cols = m.cols() / 2;
  ChannelMat out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      out(r, c) = 0.25 * (m(2 * r, 2 * c) + m(2 * r + 1, 2 * c) +
                          m(2 * r, 2 * c + 1) + m(2 * r + 1, 2 * c + 1));
  return out;
}

double uqi_channel(const ChannelMat& x, const ChannelMat& y) {
  constexpr int kWin = 8;
  if (x.rows() < kWin || x.cols() < kWin)
    throw MinSizeViolated("UQI needs at least an 8x8 image");
  const double n = kWin * kWin;
  double sum = 0.0;
  long count = 0;
  for (Eigen::Index r = 0; r + kWin <= x.rows(); ++r)
    for (Eigen::Index c = 0; c + kWin <= x.cols(); ++c) {
      const auto bx = x.block(r, c, kWin, kWin);
      const auto by = y.block(r, c, kWin, kWin);
      const double mx = bx.sum() / n, my = by.sum() / n;
      const double vx = bx.squaredNorm() / n - mx * mx;
      const double vy = by.squaredNorm() / n - my * my;
      const double cov = bx.cwiseProduct(by).sum() / n - mx * my;
      const double d_lum = mx * mx + my * my;
      const double d_str = vx + vy;
      const double lum = d_lum == 0.0 ? 1.0 : 2.0 * mx * my / d_lum;
      const double str = d_str == 0.0 ? 1.0 : 2.0 * cov / d_str;
      sum += lum * str;
      ++count;
    }
  return sum / static_cast<double>(count);
}

}  // namespace

double ssim(const ImageU8& x, const ImageU8& y) {
  require_same_dims(x, y);
  double acc = 0.0;
  for (int ch = 0; ch < x.channels; ++ch)
    acc += ssim_channel(channel_of(x, ch), channel_of(y, ch)).ssim;
  return acc / x.channels;
}

double msssim(const ImageU8& x, const ImageU8& y) {
  require_same_dims(x, y);
  static const std::array<double, 5> kWeights = {0.0448, 0.2856, 0.3001,
                                                 0.2363, 0.1333};
  if (std::min(x.height, x.width) < 11 * 16)
    throw MinSizeViolated("MS-SSIM needs min dimension >= 176");

  double result = 0.0;
  for (int ch = 0; ch < x.channels; ++ch) {
    ChannelMat cx = channel_of(x, ch);
    ChannelMat cy = channel_of(y, ch);
    double prod = 1.0;
    for (int s = 0; s < 5; ++s) {
      const SsimMeans m = ssim_channel(cx, cy);
      const double term = s == 4 ? m.ssim : m.cs;
      prod *= std::pow(std::max(term, 0.0), kWeights[s]);
      if (s < 4) {
        cx = mean_pool2(cx);
        cy = mean_pool2(cy);
      }
    }
    result += prod;
  }
  return result / x.channels;
}

double uqi(const ImageU8& x, const ImageU8& y) {
  require_same_dims(x, y);
  double acc = 0.0;
  for (int ch = 0; ch < x.channels; ++ch)
    acc += uqi_channel(channel_of(x, ch), channel_of(y, ch));
  return acc / x.channels;
}

double psnr(const ImageU8& x, const ImageU8& y) {
  require_same_dims(x, y);
  double se = 0.0;
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    const double d = static_cast<double>(x.pixels[i]) - y.pixels[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(x.pixels.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 20.0 * std::log10(255.0 / std::sqrt(mse)));
}

MetricsReport compare(const ImageU8& x, const ImageU8& y) {
  return {ssim(x, y), msssim(x, y), uqi(x, y), psnr(x, y)};
}

}  // namespace omclic
