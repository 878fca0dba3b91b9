#include "hazediff/hadtp.hpp"

#include <algorithm>
#include <cmath>

namespace hazediff {

EnhancedCondition enhance_condition(const FieldImage& j_t, const PixelImage& hazy,
                                    const TransmissionMap& tmap) {
    if (j_t.height != hazy.height || j_t.width != hazy.width ||
        j_t.channels != hazy.channels)
        throw std::invalid_argument("enhance_condition: patch shape mismatch");
    if (tmap.height != j_t.height || tmap.width != j_t.width)
        throw std::invalid_argument("enhance_condition: transmission patch shape mismatch");
    FieldImage out(j_t.height, j_t.width, j_t.channels);
    for (int y = 0; y < j_t.height; ++y) {
        for (int x = 0; x < j_t.width; ++x) {
            double t = tmap.at(y, x);
            for (int c = 0; c < j_t.channels; ++c)
                out.at(y, x, c) = t * j_t.at(y, x, c) + (1.0 - t) * hazy.at(y, x, c);
        }
    }
    return out;
}

int predict_offset(const TransmissionMap& tmap_patch, double tmap_global_mean,
                   int t, int T, const HadtpParams& params) {
    if (t < 0 || t > T)
        throw std::invalid_argument("predict_offset: t outside [0, T]");
    if (params.kappa < 0.0)
        throw std::invalid_argument("predict_offset: kappa must be >= 0");
    if (!params.enabled) return 0;
    double deficit = tmap_global_mean - tmap_patch.mean();
    long dt = std::lround(params.kappa * t * deficit);
    if (t >= 1) {
        long lo = 1 - static_cast<long>(t);       // t + dt >= 1
        long hi = static_cast<long>(T) - t;       // t + dt <= T
        dt = std::clamp(dt, lo, hi);
    }
    return static_cast<int>(dt);
}

double effective_gamma(int t, int dt, const NoiseSchedule& sched) {
    return sched.gamma_at(t + dt);
}

}  // namespace hazediff
