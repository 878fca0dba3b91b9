#include "hazediff/filters.hpp"

#include <algorithm>
#include <cmath>

namespace hazediff {

namespace {

inline int clamp_index(int i, int n) {
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

void require_single_channel(int channels, const char* op) {
    if (channels != 1)
        throw std::invalid_argument(std::string(op) + ": expected single-channel input");
}

// Window sums over a replicate-padded copy via a summed-area table, so a
// radius larger than the image stays O(1) per pixel.
struct BoxSums {
    BoxSums(const FieldImage& img, int radius)
        : r(radius), h(img.height), w(img.width), ph(h + 2 * radius), pw(w + 2 * radius),
          integral(static_cast<std::size_t>(ph + 1) * (pw + 1), 0.0) {
        for (int y = 0; y < ph; ++y) {
            double row = 0.0;
            int sy = clamp_index(y - r, h);
            for (int x = 0; x < pw; ++x) {
                int sx = clamp_index(x - r, w);
                row += img.at(sy, sx);
                integral[idx(y + 1, x + 1)] = integral[idx(y, x + 1)] + row;
            }
        }
    }

    // Sum over the (2r+1)^2 window centered at (y, x) of the original image.
    double window(int y, int x) const {
        int y0 = y, x0 = x;                    // padded coords of window top-left
        int y1 = y + 2 * r + 1, x1 = x + 2 * r + 1;
        return integral[idx(y1, x1)] - integral[idx(y0, x1)] -
               integral[idx(y1, x0)] + integral[idx(y0, x0)];
    }

    std::size_t idx(int y, int x) const {
        return static_cast<std::size_t>(y) * (pw + 1) + x;
    }

    int r, h, w, ph, pw;
    std::vector<double> integral;
};

}  // namespace

PixelImage grayscale(const PixelImage& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3)
        throw std::invalid_argument("grayscale: expected 1 or 3 channels");
    PixelImage out(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
                           0.114 * img.at(y, x, 2);
    return out;
}

PixelImage min_filter(const PixelImage& img, int window) {
    require_single_channel(img.channels, "min_filter");
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("min_filter: window must be odd and >= 1");
    int r = window / 2;
    int h = img.height, w = img.width;

    // Separable: row minima, then column minima of those.
    PixelImage rows(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m = img.at(y, clamp_index(x - r, w));
            for (int dx = -r + 1; dx <= r; ++dx)
                m = std::min(m, img.at(y, clamp_index(x + dx, w)));
            rows.at(y, x) = m;
        }
    }
    PixelImage out(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m = rows.at(clamp_index(y - r, h), x);
            for (int dy = -r + 1; dy <= r; ++dy)
                m = std::min(m, rows.at(clamp_index(y + dy, h), x));
            out.at(y, x) = m;
        }
    }
    return out;
}

FieldImage sobel_magnitude(const PixelImage& img) {
    require_single_channel(img.channels, "sobel_magnitude");
    int h = img.height, w = img.width;
    FieldImage out(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto v = [&](int dy, int dx) {
                return img.at(clamp_index(y + dy, h), clamp_index(x + dx, w));
            };
            double gx = (v(-1, 1) + 2.0 * v(0, 1) + v(1, 1)) -
                        (v(-1, -1) + 2.0 * v(0, -1) + v(1, -1));
            double gy = (v(1, -1) + 2.0 * v(1, 0) + v(1, 1)) -
                        (v(-1, -1) + 2.0 * v(-1, 0) + v(-1, 1));
            out.at(y, x) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

FieldImage gaussian_blur(const FieldImage& img, double sigma) {
    require_single_channel(img.channels, "gaussian_blur");
    if (!(sigma > 0.0))
        throw std::invalid_argument("gaussian_blur: sigma must be > 0");
    int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        kernel[i + r] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += kernel[i + r];
    }
    for (double& k : kernel) k /= sum;

    int h = img.height, w = img.width;
    FieldImage tmp(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += kernel[i + r] * img.at(y, clamp_index(x + i, w));
            tmp.at(y, x) = acc;
        }
    }
    FieldImage out(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += kernel[i + r] * tmp.at(clamp_index(y + i, h), x);
            out.at(y, x) = acc;
        }
    }
    return out;
}

FieldImage box_mean(const FieldImage& img, int radius) {
    require_single_channel(img.channels, "box_mean");
    if (radius < 1)
        throw std::invalid_argument("box_mean: radius must be >= 1");
    BoxSums sums(img, radius);
    double count = static_cast<double>(2 * radius + 1) * (2 * radius + 1);
    FieldImage out(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(y, x) = sums.window(y, x) / count;
    return out;
}

FieldImage guided_filter(const FieldImage& p, const PixelImage& guide,
                         int radius, double reg) {
    require_single_channel(p.channels, "guided_filter");
    require_single_channel(guide.channels, "guided_filter");
    if (p.height != guide.height || p.width != guide.width)
        throw std::invalid_argument("guided_filter: input and guide dimensions differ");
    if (radius < 1)
        throw std::invalid_argument("guided_filter: radius must be >= 1");
    if (!(reg > 0.0))
        throw std::invalid_argument("guided_filter: regularizer must be > 0");

    int h = p.height, w = p.width;
    FieldImage guide_f = to_field(guide);
    FieldImage gp(h, w, 1), gg(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            gp.at(y, x) = guide.at(y, x) * p.at(y, x);
            gg.at(y, x) = guide.at(y, x) * guide.at(y, x);
        }
    }

    FieldImage mean_g = box_mean(guide_f, radius);
    FieldImage mean_p = box_mean(p, radius);
    FieldImage mean_gp = box_mean(gp, radius);
    FieldImage mean_gg = box_mean(gg, radius);

    FieldImage a(h, w, 1), b(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double mg = mean_g.at(y, x);
            double var = mean_gg.at(y, x) - mg * mg;
            double cov = mean_gp.at(y, x) - mg * mean_p.at(y, x);
            double av = cov / (var + reg);
            a.at(y, x) = av;
            b.at(y, x) = mean_p.at(y, x) - av * mg;
        }
    }

    FieldImage mean_a = box_mean(a, radius);
    FieldImage mean_b = box_mean(b, radius);
    FieldImage q(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            q.at(y, x) = mean_a.at(y, x) * guide.at(y, x) + mean_b.at(y, x);
    return q;
}

}  // namespace hazediff
