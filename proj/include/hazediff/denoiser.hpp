#pragma once

#include "hazediff/pist.hpp"
#include "hazediff/raster.hpp"

namespace hazediff {

struct PatchOrigin {
    int row = 0;
    int col = 0;
};

// Noise-estimation contract. `noisy` is the patch being denoised;
// `condition` stacks the enhanced conditional input and the hazy patch as
// 2*C interleaved channels; `gamma_hat` is the continuous noise level the
// patch runs at; `origin` locates the patch in the full image (context for
// backends that hold full-image state). Implementations must be free of
// side effects: the sampler may evaluate patches concurrently.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual FieldImage evaluate(const FieldImage& noisy, const FieldImage& condition,
                                double gamma_hat, PatchOrigin origin) const = 0;
};

// [enhanced condition | hazy patch] as one 2*C-channel field.
FieldImage stack_condition(const FieldImage& enhanced, const PixelImage& hazy);

// Test backend holding the ground-truth scene. Recovers the exact noise a
// forward-sampled state carries by inverting the corruption around the
// intermediate target at the step matching gamma_hat.
class OracleDenoiser : public Denoiser {
public:
    OracleDenoiser(PixelImage clear, PixelImage hazy, TransmissionMap tmap,
                   NoiseSchedule sched, PistParams pist);

    FieldImage evaluate(const FieldImage& noisy, const FieldImage& condition,
                        double gamma_hat, PatchOrigin origin) const override;

private:
    PixelImage clear_;
    PixelImage hazy_;
    TransmissionMap tmap_;
    NoiseSchedule sched_;
    PistParams pist_;
};

}  // namespace hazediff
