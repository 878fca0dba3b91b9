#include "hazediff/denoiser.hpp"

#include <cmath>
#include <utility>

namespace hazediff {

FieldImage stack_condition(const FieldImage& enhanced, const PixelImage& hazy) {
    if (enhanced.height != hazy.height || enhanced.width != hazy.width ||
        enhanced.channels != hazy.channels)
        throw std::invalid_argument("stack_condition: shape mismatch");
    int c = enhanced.channels;
    FieldImage out(enhanced.height, enhanced.width, 2 * c);
    for (int y = 0; y < enhanced.height; ++y) {
        for (int x = 0; x < enhanced.width; ++x) {
            for (int k = 0; k < c; ++k) {
                out.at(y, x, k) = enhanced.at(y, x, k);
                out.at(y, x, c + k) = hazy.at(y, x, k);
            }
        }
    }
    return out;
}

OracleDenoiser::OracleDenoiser(PixelImage clear, PixelImage hazy, TransmissionMap tmap,
                               NoiseSchedule sched, PistParams pist)
    : clear_(std::move(clear)), hazy_(std::move(hazy)), tmap_(std::move(tmap)),
      sched_(std::move(sched)), pist_(pist) {
    if (!clear_.same_shape(hazy_))
        throw std::invalid_argument("OracleDenoiser: clear/hazy shape mismatch");
    if (tmap_.height != clear_.height || tmap_.width != clear_.width)
        throw std::invalid_argument("OracleDenoiser: transmission map shape mismatch");
}

FieldImage OracleDenoiser::evaluate(const FieldImage& noisy, const FieldImage& /*condition*/,
                                    double gamma_hat, PatchOrigin origin) const {
    int p_h = noisy.height, p_w = noisy.width;
    int t_hat = sched_.step_for_gamma(gamma_hat);
    FieldImage clear_patch = to_field(crop(clear_, origin.row, origin.col, p_h, p_w));
    PixelImage hazy_patch = crop(hazy_, origin.row, origin.col, p_h, p_w);
    TransmissionMap tmap_patch = crop(tmap_, origin.row, origin.col, p_h, p_w);
    FieldImage u = intermediate_state(clear_patch, hazy_patch, tmap_patch, t_hat, pist_);

    double s = std::sqrt(gamma_hat);
    double q = std::sqrt(1.0 - gamma_hat);
    FieldImage eps(p_h, p_w, noisy.channels);
    for (std::size_t i = 0; i < eps.data.size(); ++i)
        eps.data[i] = (noisy.data[i] - s * u.data[i]) / q;
    return eps;
}

}  // namespace hazediff
