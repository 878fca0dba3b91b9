#pragma once

#include "hazediff/pist.hpp"
#include "hazediff/raster.hpp"

namespace hazediff {

struct HadtpParams {
    double kappa = 0.25;  // offset gain, >= 0
    bool enabled = true;
};

// Transmission-guided conditional input: high-transmission pixels draw from
// the intermediate denoising result, low-transmission pixels from the hazy
// input. Deterministic stand-in for the learned cross-attention.
using EnhancedCondition = FieldImage;

EnhancedCondition enhance_condition(const FieldImage& j_t, const PixelImage& hazy,
                                    const TransmissionMap& tmap);

// Patch timestep offset: round(kappa * t * (global mean - patch mean)),
// clamped so 1 <= t + dt <= T for t >= 1. Denser-than-average patches get
// a positive offset. Disabled predictor always returns 0.
int predict_offset(const TransmissionMap& tmap_patch, double tmap_global_mean,
                   int t, int T, const HadtpParams& params);

// Noise level gamma_{t+dt} for a patch running at the shifted step.
double effective_gamma(int t, int dt, const NoiseSchedule& sched);

}  // namespace hazediff
