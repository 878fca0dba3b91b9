#pragma once

#include "hazediff/filters.hpp"
#include "hazediff/raster.hpp"

namespace hazediff {

// Sky mask on the 0..255 scale used by the blend step: binary {0,255} when
// generated, continuous [0,255] after feathering.
struct SkyMask {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    SkyMask() = default;
    SkyMask(int h, int w, double fill = 0.0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct DcpParams {
    double omega = 0.95;        // haze retention factor in (0,1]
    int window = 15;            // dark-channel window, odd
    int guided_radius = 60;     // guided-filter box radius
    double guided_reg = 1e-3;   // guided-filter regularizer
    double t0 = 0.1;            // transmission floor
    double tau_g = 0.05;        // sky gradient threshold, on the [0,1] gradient scale
    double tau_b = 0.7;         // sky brightness threshold
    double grad_sigma = 2.0;    // Gaussian smoothing of the gradient map
    double feather_sigma = 5.0; // sky-mask feathering

    void validate() const;
};

// Per-pixel channel minimum followed by a window minimum.
PixelImage dark_channel(const PixelImage& img, int window);

// Mean grayscale intensity over the brightest 0.1% of dark-channel pixels
// (at least one), clamped to [0.05, 1].
double estimate_airlight(const PixelImage& img, const PixelImage& dark);

// 255 where grad < tau_g and gray > tau_b, else 0.
SkyMask make_sky_mask(const PixelImage& gray, const FieldImage& grad,
                      double tau_g, double tau_b);

struct TransmissionEstimate {
    TransmissionMap tmap;     // final map, values in [t0, 1]
    SkyMask sky;              // binary mask before feathering
    SkyMask sky_smooth;       // feathered mask
    double airlight = 0.0;
    PixelImage dark;          // dark channel
    FieldImage initial;       // 1 - omega * dark / A
    FieldImage refined;       // guided-filter refinement of the initial map
};

// Full estimation pipeline: dark channel, airlight, initial transmission,
// smoothed gradient map, sky mask with feathering, guided-filter refinement,
// sky blend, and the [t0, 1] bound.
TransmissionEstimate estimate_transmission(const PixelImage& img, const DcpParams& params);

}  // namespace hazediff
