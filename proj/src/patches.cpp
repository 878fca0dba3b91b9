#include "hazediff/patches.hpp"

namespace hazediff {

namespace {

std::vector<int> axis_origins(int extent, int p, int r) {
    std::vector<int> origins;
    int o = 0;
    for (; o + p <= extent; o += r) origins.push_back(o);
    if (origins.back() + p < extent) origins.push_back(extent - p);
    return origins;
}

}  // namespace

PatchGrid plan_patches(int h, int w, int p, int r) {
    if (p < 1 || p > h || p > w)
        throw std::invalid_argument("plan_patches: patch size must satisfy 1 <= p <= min(h, w)");
    if (r < 1 || r >= p)
        throw std::invalid_argument("plan_patches: stride must satisfy 1 <= r < p");
    PatchGrid grid;
    grid.image_height = h;
    grid.image_width = w;
    grid.patch = p;
    grid.stride = r;
    std::vector<int> rows = axis_origins(h, p, r);
    std::vector<int> cols = axis_origins(w, p, r);
    grid.origins.reserve(rows.size() * cols.size());
    for (int ro : rows)
        for (int co : cols)
            grid.origins.emplace_back(ro, co);
    return grid;
}

PatchWeights make_uniform_weights(const PatchGrid& grid) {
    PatchWeights w;
    w.patch = grid.patch;
    std::size_t area = static_cast<std::size_t>(grid.patch) * grid.patch;
    w.raw.assign(grid.origins.size(), std::vector<double>(area, 1.0));
    return w;
}

std::vector<int> cover_counts(const PatchGrid& grid) {
    std::vector<int> counts(static_cast<std::size_t>(grid.image_height) * grid.image_width, 0);
    for (const auto& [ro, co] : grid.origins)
        for (int y = 0; y < grid.patch; ++y)
            for (int x = 0; x < grid.patch; ++x)
                counts[static_cast<std::size_t>(ro + y) * grid.image_width + co + x]++;
    return counts;
}

FieldImage aggregate_noise(const std::vector<PatchEstimate>& estimates,
                           const PatchGrid& grid, const PatchWeights& weights) {
    if (estimates.size() != grid.origins.size())
        throw std::invalid_argument("aggregate_noise: estimate count does not match grid");
    if (weights.raw.size() != grid.origins.size() || weights.patch != grid.patch)
        throw std::invalid_argument("aggregate_noise: weights do not match grid");

    int channels = estimates.empty() ? 1 : estimates.front().field.channels;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const PatchEstimate& e = estimates[i];
        if (e.row != grid.origins[i].first || e.col != grid.origins[i].second)
            throw std::invalid_argument("aggregate_noise: estimate origin does not match grid order");
        if (e.field.height != grid.patch || e.field.width != grid.patch ||
            e.field.channels != channels)
            throw std::invalid_argument("aggregate_noise: estimate shape mismatch");
    }

    int h = grid.image_height, w = grid.image_width, p = grid.patch;
    FieldImage acc(h, w, channels, 0.0);
    std::vector<double> wsum(static_cast<std::size_t>(h) * w, 0.0);

    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const PatchEstimate& e = estimates[i];
        const std::vector<double>& raw = weights.raw[i];
        for (int y = 0; y < p; ++y) {
            for (int x = 0; x < p; ++x) {
                double rw = raw[static_cast<std::size_t>(y) * p + x];
                if (rw < 0.0)
                    throw std::invalid_argument("aggregate_noise: negative weight");
                wsum[static_cast<std::size_t>(e.row + y) * w + e.col + x] += rw;
                for (int c = 0; c < channels; ++c)
                    acc.at(e.row + y, e.col + x, c) += rw * e.field.at(y, x, c);
            }
        }
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = wsum[static_cast<std::size_t>(y) * w + x];
            if (!(s > 0.0))
                throw std::invalid_argument("aggregate_noise: pixel with zero total weight");
            for (int c = 0; c < channels; ++c)
                acc.at(y, x, c) /= s;
        }
    }
    return acc;
}

}  // namespace hazediff
