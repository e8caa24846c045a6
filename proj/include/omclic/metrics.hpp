#pragma once

#include "omclic/image.hpp"

namespace omclic {

struct MetricsReport {
  double ssim = 0.0;    // [-1, 1]
  double msssim = 0.0;  // [0, 1]
  double uqi = 0.0;     // [-1, 1]
  double psnr = 0.0;    // dB, capped at 100 for identical inputs
};

/// Mean local SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01*255)^2,
/// C2=(0.03*255)^2, channels averaged.
double ssim(const ImageU8& x, const ImageU8& y);

/// 5 scales, 2x2 mean-pool downsampling, exponents
/// {0.0448, 0.2856, 0.3001, 0.2363, 0.1333}. Throws MinSizeViolated when
/// either dimension is below 11*2^4.
double msssim(const ImageU8& x, const ImageU8& y);

/// Universal Quality Index: SSIM with C1=C2=0 over 8x8 sliding windows;
/// all-zero windows contribute 1.
double uqi(const ImageU8& x, const ImageU8& y);

/// 20*log10(255/sqrt(MSE)), capped at 100.
double psnr(const ImageU8& x, const ImageU8& y);

MetricsReport compare(const ImageU8& x, const ImageU8& y);

}  // namespace omclic
