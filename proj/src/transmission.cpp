#include "hazediff/transmission.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hazediff {

void DcpParams::validate() const {
    if (!(omega > 0.0 && omega <= 1.0))
        throw std::invalid_argument("DcpParams: omega must lie in (0,1]");
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("DcpParams: window must be odd and >= 1");
    if (guided_radius < 1)
        throw std::invalid_argument("DcpParams: guided_radius must be >= 1");
    if (!(guided_reg > 0.0))
        throw std::invalid_argument("DcpParams: guided_reg must be > 0");
    if (!(t0 > 0.0 && t0 < 1.0))
        throw std::invalid_argument("DcpParams: t0 must lie in (0,1)");
    if (!(tau_g >= 0.0) || !(tau_b >= 0.0))
        throw std::invalid_argument("DcpParams: thresholds must be >= 0");
    if (!(grad_sigma > 0.0) || !(feather_sigma > 0.0))
        throw std::invalid_argument("DcpParams: sigmas must be > 0");
}

PixelImage dark_channel(const PixelImage& img, int window) {
    if (img.channels != 3)
        throw std::invalid_argument("dark_channel: 3-channel image required");
    PixelImage channel_min(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            channel_min.at(y, x) = std::min({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
    return min_filter(channel_min, window);
}

double estimate_airlight(const PixelImage& img, const PixelImage& dark) {
    if (dark.channels != 1 || dark.height != img.height || dark.width != img.width)
        throw std::invalid_argument("estimate_airlight: dark channel shape mismatch");
    std::size_t n = dark.data.size();
    std::size_t top = std::max<std::size_t>(1, n / 1000);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Brightest dark-channel pixels first; ties resolved by pixel index so
    // the selection is deterministic.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dark.data[a] > dark.data[b];
    });

    PixelImage gray = grayscale(img);
    double sum = 0.0;
    for (std::size_t i = 0; i < top; ++i) sum += gray.data[order[i]];
    double a = sum / static_cast<double>(top);
    return std::clamp(a, 0.05, 1.0);
}

SkyMask make_sky_mask(const PixelImage& gray, const FieldImage& grad,
                      double tau_g, double tau_b) {
    if (gray.height != grad.height || gray.width != grad.width ||
        gray.channels != 1 || grad.channels != 1)
        throw std::invalid_argument("make_sky_mask: shape mismatch");
    SkyMask mask(gray.height, gray.width);
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x)
            mask.at(y, x) = (grad.at(y, x) < tau_g && gray.at(y, x) > tau_b) ? 255.0 : 0.0;
    return mask;
}

TransmissionEstimate estimate_transmission(const PixelImage& img, const DcpParams& params) {
    params.validate();
    if (img.channels != 3)
        throw std::invalid_argument("estimate_transmission: 3-channel image required");

    TransmissionEstimate est;
    est.dark = dark_channel(img, params.window);
    est.airlight = estimate_airlight(img, est.dark);

    int h = img.height, w = img.width;
    est.initial = FieldImage(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            est.initial.at(y, x) = 1.0 - params.omega * est.dark.at(y, x) / est.airlight;

    PixelImage gray = grayscale(img);
    FieldImage grad = sobel_magnitude(gray);
    for (double& v : grad.data) v /= kSobelMagnitudeBound;  // scale-free thresholding
    FieldImage grad_smooth = gaussian_blur(grad, params.grad_sigma);

    est.sky = make_sky_mask(gray, grad_smooth, params.tau_g, params.tau_b);

    FieldImage mask_field(h, w, 1);
    mask_field.data = est.sky.values;
    FieldImage feathered = gaussian_blur(mask_field, params.feather_sigma);
    est.sky_smooth = SkyMask(h, w);
    est.sky_smooth.values = feathered.data;

    est.refined = guided_filter(est.initial, gray, params.guided_radius, params.guided_reg);

    // Sky blend, then the bound. The lower bound is the algorithm's floor;
    // the upper bound keeps guided-filter overshoot inside the map's range.
    est.tmap = TransmissionMap(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = est.sky_smooth.at(y, x);
            double blended =
                (s * est.initial.at(y, x) + est.refined.at(y, x) * (255.0 - s)) / 255.0;
            est.tmap.at(y, x) = std::clamp(blended, params.t0, 1.0);
        }
    }
    return est;
}

}  // namespace hazediff
