#include "hazediff/hazesynth.hpp"

#include <algorithm>
#include <cmath>

namespace hazediff {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

PixelImage apply_asm(const HazeScene& scene) {
    const PixelImage& j = scene.clear;
    if (scene.tmap.height != j.height || scene.tmap.width != j.width)
        throw std::invalid_argument("apply_asm: clear/tmap dimensions differ");
    if (!(scene.airlight > 0.0 && scene.airlight <= 1.0))
        throw std::invalid_argument("apply_asm: airlight must lie in (0,1]");
    PixelImage out(j.height, j.width, j.channels);
    for (int y = 0; y < j.height; ++y) {
        for (int x = 0; x < j.width; ++x) {
            double t = scene.tmap.at(y, x);
            for (int c = 0; c < j.channels; ++c) {
                double v = j.at(y, x, c) * t + scene.airlight * (1.0 - t);
                out.at(y, x, c) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return out;
}

FieldImage invert_asm(const PixelImage& hazy, const TransmissionMap& tmap, double airlight) {
    if (tmap.height != hazy.height || tmap.width != hazy.width)
        throw std::invalid_argument("invert_asm: hazy/tmap dimensions differ");
    FieldImage out(hazy.height, hazy.width, hazy.channels);
    for (int y = 0; y < hazy.height; ++y) {
        for (int x = 0; x < hazy.width; ++x) {
            double t = tmap.at(y, x);
            for (int c = 0; c < hazy.channels; ++c)
                out.at(y, x, c) = (hazy.at(y, x, c) - airlight * (1.0 - t)) / t;
        }
    }
    return out;
}

FieldImage smooth_field(Rng& rng, int h, int w) {
    FieldImage f(h, w, 1, 0.0);
    const int waves = 3;
    for (int k = 0; k < waves; ++k) {
        double amp = rng.uniform(0.5, 1.0);
        double angle = rng.uniform(0.0, kTwoPi);
        double freq = rng.uniform(0.5, 2.0);  // cycles per image
        double phase = rng.uniform(0.0, kTwoPi);
        double ux = std::cos(angle) * freq, uy = std::sin(angle) * freq;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                f.at(y, x) += amp * std::cos(kTwoPi * (ux * x / w + uy * y / h) + phase);
    }
    double lo = f.data[0], hi = f.data[0];
    for (double v : f.data) { lo = std::min(lo, v); hi = std::max(hi, v); }
    double span = hi - lo;
    if (span < 1e-12) span = 1.0;
    for (double& v : f.data) v = (v - lo) / span;
    return f;
}

namespace {

// Shifts colors so the per-pixel channel minimum stays small; dark-channel
// estimation relies on that.
void suppress_channel_min(PixelImage& img) {
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double m = std::min({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) -= 0.92 * m;
        }
    }
}

void paint_shapes(Rng& rng, PixelImage& img) {
    int n = rng.uniform_int(2, 4);
    for (int s = 0; s < n; ++s) {
        bool disk = rng.uniform() < 0.5;
        double cy = rng.uniform(0.15, 0.85) * img.height;
        double cx = rng.uniform(0.15, 0.85) * img.width;
        double radius = rng.uniform(0.08, 0.22) * std::min(img.height, img.width);
        double color[3] = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        double cmin = std::min({color[0], color[1], color[2]});
        for (double& c : color) c -= 0.92 * cmin;  // keep shapes dark-channel friendly
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                bool inside = disk
                    ? (y - cy) * (y - cy) + (x - cx) * (x - cx) <= radius * radius
                    : std::abs(y - cy) <= radius && std::abs(x - cx) <= radius;
                if (inside)
                    for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[c];
            }
        }
    }
}

TransmissionMap make_tmap(Rng& rng, int size, bool half_dense) {
    FieldImage base = smooth_field(rng, size, size);
    TransmissionMap map(size, size);
    if (!half_dense) {
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                map.at(y, x) = 0.3 + 0.65 * base.at(y, x);
        return map;
    }
    // Half-dense layout: one side pushed toward low transmission with a
    // smooth sigmoid transition band.
    bool vertical = rng.uniform() < 0.5;
    double split = rng.uniform(0.35, 0.65) * size;
    double band = size / 8.0;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double pos = vertical ? x : y;
            double mix = 1.0 / (1.0 + std::exp(-(pos - split) / band));
            double sparse = 0.6 + 0.35 * base.at(y, x);
            double dense = 0.12 + 0.2 * base.at(y, x);
            map.at(y, x) = dense + (sparse - dense) * mix;
        }
    }
    return map;
}

}  // namespace

std::vector<HazeScene> make_toy_dataset(int count, int size, std::uint64_t seed) {
    if (count < 0)
        throw std::invalid_argument("make_toy_dataset: count must be >= 0");
    if (count > 0 && size < 16)
        throw std::invalid_argument("make_toy_dataset: size must be >= 16");
    Rng rng(seed);
    std::vector<HazeScene> scenes;
    scenes.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        HazeScene scene;
        scene.clear = PixelImage(size, size, 3);
        for (int c = 0; c < 3; ++c) {
            FieldImage f = smooth_field(rng, size, size);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    scene.clear.at(y, x, c) = f.at(y, x);
        }
        suppress_channel_min(scene.clear);
        paint_shapes(rng, scene.clear);
        scene.tmap = make_tmap(rng, size, i % 3 == 2);
        scene.airlight = rng.uniform(0.7, 0.95);
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

}  // namespace hazediff
