#include "hazediff/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hazediff/filters.hpp"

namespace hazediff {

namespace {

double mse(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double m) {
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> k(static_cast<std::size_t>(window));
    const double r = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        const double d = i - r;
        k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Valid-region separable weighted sum: output is (h-win+1) x (w-win+1).
std::vector<double> valid_filter(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& k) {
    const int win = static_cast<int>(k.size());
    const int ow = w - win + 1;
    const int oh = h - win + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < win; ++i)
                acc += k[static_cast<std::size_t>(i)] *
                       img[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < win; ++i)
                acc += k[static_cast<std::size_t>(i)] *
                       tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

}  // namespace

double psnr(const PixelImage& a, const PixelImage& b) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw std::invalid_argument("psnr: shape mismatch");
    return psnr_from_mse(mse(a.data, b.data));
}

double psnr(const FieldImage& a, const FieldImage& b) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw std::invalid_argument("psnr: shape mismatch");
    return psnr_from_mse(mse(a.data, b.data));
}

double ssim(const PixelImage& a, const PixelImage& b, const SsimParams& params) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw std::invalid_argument("ssim: shape mismatch");
    if (params.window < 3 || params.window % 2 == 0)
        throw std::invalid_argument("ssim: window must be odd and >= 3");
    if (a.height < params.window || a.width < params.window)
        throw std::invalid_argument("ssim: image smaller than window");

    const PixelImage ga = grayscale(a);
    const PixelImage gb = grayscale(b);
    const int h = ga.height, w = ga.width;
    const std::size_t n = static_cast<std::size_t>(h) * w;

    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = ga.data[i] * ga.data[i];
        yy[i] = gb.data[i] * gb.data[i];
        xy[i] = ga.data[i] * gb.data[i];
    }

    const std::vector<double> k = gaussian_kernel(params.window, params.sigma);
    const std::vector<double> mu_x = valid_filter(ga.data, h, w, k);
    const std::vector<double> mu_y = valid_filter(gb.data, h, w, k);
    const std::vector<double> m_xx = valid_filter(xx, h, w, k);
    const std::vector<double> m_yy = valid_filter(yy, h, w, k);
    const std::vector<double> m_xy = valid_filter(xy, h, w, k);

    const double c1 = params.k1 * params.k1;
    const double c2 = params.k2 * params.k2;
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double sxx = m_xx[i] - mu_x[i] * mu_x[i];
        const double syy = m_yy[i] - mu_y[i] * mu_y[i];
        const double sxy = m_xy[i] - mu_x[i] * mu_y[i];
        const double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * sxy + c2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (sxx + syy + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(mu_x.size());
}

QualityReport compare(const PixelImage& a, const PixelImage& b) {
    QualityReport r;
    r.psnr = psnr(a, b);
    r.ssim = ssim(a, b);
    return r;
}

}  // namespace hazediff
