#pragma once

#include <utility>
#include <vector>

#include "hazediff/raster.hpp"

namespace hazediff {

// Overlapping p x p patch layout. Origins step by the stride; when the last
// stride-aligned origin along an axis does not reach the border, one extra
// patch is placed flush against it. Every patch lies fully inside the image
// and every pixel is covered.
struct PatchGrid {
    int image_height = 0;
    int image_width = 0;
    int patch = 0;
    int stride = 0;
    std::vector<std::pair<int, int>> origins;  // (row, col)

    int count() const { return static_cast<int>(origins.size()); }
};

PatchGrid plan_patches(int h, int w, int p, int r);

// Raw nonnegative per-patch, per-pixel weights. Aggregation normalizes per
// pixel by the sum over covering patches, so effective weights form a
// partition of unity by construction. The uniform default weighs every
// covering patch equally (1/n per pixel).
struct PatchWeights {
    int patch = 0;
    std::vector<std::vector<double>> raw;  // raw[i] is patch i's p*p weight map
};

PatchWeights make_uniform_weights(const PatchGrid& grid);

// Number of patches covering each pixel.
std::vector<int> cover_counts(const PatchGrid& grid);

struct PatchEstimate {
    int row = 0;
    int col = 0;
    FieldImage field;  // p x p, any channel count (shared across estimates)
};

// Eq-style weighted superposition of per-patch fields into a full canvas:
// per pixel, sum of raw-weighted covering estimates divided by the raw
// weight sum. Accumulation runs in ascending patch-index order.
FieldImage aggregate_noise(const std::vector<PatchEstimate>& estimates,
                           const PatchGrid& grid, const PatchWeights& weights);

}  // namespace hazediff
