#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hazediff {

// Row-major, channel-interleaved raster with display-range values in [0,1].
struct PixelImage {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    PixelImage() = default;
    PixelImage(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    double& at(int y, int x, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const PixelImage& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    // Throws if any value is non-finite or outside [0,1].
    void validate() const;
};

// Unbounded raster for diffusion states, noise fields and gradients.
// Same layout as PixelImage; values only need to be finite.
struct FieldImage {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    FieldImage() = default;
    FieldImage(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    double& at(int y, int x, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const FieldImage& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    void validate() const;  // throws on NaN/Inf
};

// Per-pixel haze transmission. Values live in [t0, 1] once estimated;
// the struct itself only fixes the raster layout.
struct TransmissionMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    TransmissionMap() = default;
    TransmissionMap(int h, int w, double fill = 1.0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }

    double mean() const;
};

FieldImage to_field(const PixelImage& img);
PixelImage clamp01(const FieldImage& img);

PixelImage crop(const PixelImage& img, int y0, int x0, int h, int w);
FieldImage crop(const FieldImage& img, int y0, int x0, int h, int w);
TransmissionMap crop(const TransmissionMap& map, int y0, int x0, int h, int w);

}  // namespace hazediff
