#pragma once

#include "hazediff/raster.hpp"

namespace hazediff {

// Rec.601 luma. A single-channel input is returned unchanged.
PixelImage grayscale(const PixelImage& img);

// Sliding-window minimum over an odd window, replicated borders.
PixelImage min_filter(const PixelImage& img, int window);

// Magnitude of the 3x3 Sobel gradient pair, replicated borders.
FieldImage sobel_magnitude(const PixelImage& img);

// Largest gradient magnitude sobel_magnitude can produce on [0,1] inputs
// (|Gx| and |Gy| are each bounded by 4). Used to put thresholds on a
// scale-free [0,1] axis.
inline constexpr double kSobelMagnitudeBound = 5.656854249492380195206754896838;

// Separable Gaussian, kernel radius ceil(3*sigma), normalized, replicated
// borders. Mass preserving on constant images.
FieldImage gaussian_blur(const FieldImage& img, double sigma);

// He/Sun guided filter: q = mean(a)*guide + mean(b) with
//   a = cov(guide,p) / (var(guide) + reg),  b = mean(p) - a*mean(guide),
// all statistics over (2*radius+1)^2 box windows with replicated borders.
FieldImage guided_filter(const FieldImage& p, const PixelImage& guide,
                         int radius, double reg);

// Box mean over (2*radius+1)^2 windows with replicated borders.
FieldImage box_mean(const FieldImage& img, int radius);

}  // namespace hazediff
