#pragma once

#include <cstdint>
#include <vector>

#include "hazediff/raster.hpp"
#include "hazediff/rng.hpp"

namespace hazediff {

// A (clear image, transmission map, airlight) triple for the atmospheric
// scattering model I = J*t + A*(1-t).
struct HazeScene {
    PixelImage clear;
    TransmissionMap tmap;
    double airlight = 0.8;
};

// Composes the scene into a hazy image, clamped to [0,1]. With inputs in
// range the composition is a convex combination, so the clamp is inert.
PixelImage apply_asm(const HazeScene& scene);

// Recovers the clear image from a hazy one given exact t and A:
// J = (I - A*(1-t)) / t. Exact where t is bounded away from zero.
FieldImage invert_asm(const PixelImage& hazy, const TransmissionMap& tmap, double airlight);

// Seeded toy scenes: smooth low-frequency color fields plus a few saturated
// geometric shapes (so the dark channel stays small, as the estimator
// assumes), smooth transmission fields in [0.1, 1] with every third scene
// given a half-dense layout, airlight in [0.7, 0.95].
std::vector<HazeScene> make_toy_dataset(int count, int size, std::uint64_t seed);

// Single smooth field in [0,1] (sum of a few random cosine waves,
// min-max normalized). Shared by the scene generator and tests.
FieldImage smooth_field(Rng& rng, int h, int w);

}  // namespace hazediff
