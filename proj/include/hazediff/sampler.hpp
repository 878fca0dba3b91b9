#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hazediff/denoiser.hpp"
#include "hazediff/hadtp.hpp"
#include "hazediff/patches.hpp"
#include "hazediff/pist.hpp"
#include "hazediff/raster.hpp"

namespace hazediff {

struct SamplerConfig {
    int patch = 64;
    int stride = 16;
    int total_steps = 1000;  // schedule length T
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int steps = 0;  // inference steps; <= 0 or >= T runs every step
    double pist_a = 0.002;
    HadtpParams hadtp;
    bool deterministic = false;  // suppress injected reverse noise
    std::uint64_t seed = 0;
    int threads = 1;  // <= 0 picks hardware concurrency
    bool record_trace = false;
};

struct TraceRow {
    int t = 0;  // global timestep the row was produced at
    int patch_index = 0;
    int dt = 0;
    double patch_mean = 0.0;  // patch transmission mean
    double gamma_hat = 0.0;
};

struct DehazeResult {
    PixelImage output;      // final state clamped to display range
    FieldImage final_state; // unclamped final diffusion state
    std::vector<int> timesteps;  // descending trajectory actually run
    std::vector<TraceRow> trace; // empty unless record_trace
};

// Descending inference trajectory. Full T..1 when steps is unset; otherwise
// `steps` values evenly spread from T down to 1 (duplicates collapsed).
std::vector<int> inference_timesteps(int T, int steps);

// Runs fn(0..n-1) across the given number of worker threads. Callers get
// determinism by writing into index-addressed slots and reducing afterwards.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Patch-based reverse diffusion over the whole canvas. `weights` may be
// null for uniform patch weighting.
DehazeResult dehaze(const PixelImage& hazy, const TransmissionMap& tmap,
                    const Denoiser& denoiser, const SamplerConfig& cfg,
                    const PatchWeights* weights = nullptr);

}  // namespace hazediff
