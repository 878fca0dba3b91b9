#pragma once

#include "hazediff/raster.hpp"

namespace hazediff {

// Peak signal-to-noise ratio with peak 1.0, over every sample of every
// channel.  Identical inputs yield +infinity.
double psnr(const PixelImage& a, const PixelImage& b);
double psnr(const FieldImage& a, const FieldImage& b);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

// Mean structural similarity on grayscale, Gaussian-weighted windows,
// restricted to windows that lie fully inside the image.  Throws if either
// dimension is smaller than the window.
double ssim(const PixelImage& a, const PixelImage& b, const SsimParams& params = {});

struct QualityReport {
    double psnr = 0.0;
    double ssim = 0.0;
};

QualityReport compare(const PixelImage& a, const PixelImage& b);

}  // namespace hazediff
