#include "hazediff/raster.hpp"

namespace hazediff {

void PixelImage::validate() const {
    if (data.size() != static_cast<std::size_t>(height) * width * channels)
        throw std::invalid_argument("PixelImage: data length does not match dimensions");
    for (double v : data) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw std::invalid_argument("PixelImage: value outside [0,1]");
    }
}

void FieldImage::validate() const {
    if (data.size() != static_cast<std::size_t>(height) * width * channels)
        throw std::invalid_argument("FieldImage: data length does not match dimensions");
    for (double v : data) {
        if (!std::isfinite(v))
            throw std::invalid_argument("FieldImage: non-finite value");
    }
}

double TransmissionMap::mean() const {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

FieldImage to_field(const PixelImage& img) {
    FieldImage out;
    out.height = img.height;
    out.width = img.width;
    out.channels = img.channels;
    out.data = img.data;
    return out;
}

PixelImage clamp01(const FieldImage& img) {
    PixelImage out;
    out.height = img.height;
    out.width = img.width;
    out.channels = img.channels;
    out.data.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        double v = img.data[i];
        out.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return out;
}

namespace {

template <typename Raster>
Raster crop_raster(const Raster& img, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || h < 1 || w < 1 ||
        y0 + h > img.height || x0 + w > img.width)
        throw std::invalid_argument("crop: window outside image");
    Raster out(h, w, img.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

}  // namespace

PixelImage crop(const PixelImage& img, int y0, int x0, int h, int w) {
    return crop_raster(img, y0, x0, h, w);
}

FieldImage crop(const FieldImage& img, int y0, int x0, int h, int w) {
    return crop_raster(img, y0, x0, h, w);
}

TransmissionMap crop(const TransmissionMap& map, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || h < 1 || w < 1 ||
        y0 + h > map.height || x0 + w > map.width)
        throw std::invalid_argument("crop: window outside map");
    TransmissionMap out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(y, x) = map.at(y0 + y, x0 + x);
    return out;
}

}  // namespace hazediff
