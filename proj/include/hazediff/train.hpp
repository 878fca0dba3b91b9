#pragma once

#include <cstdint>
#include <vector>

#include "hazediff/hazesynth.hpp"
#include "hazediff/pist.hpp"
#include "hazediff/tiny_denoiser.hpp"

namespace hazediff {

struct TrainOptions {
    int patch = 64;
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam over every TinyDenoiser tensor. step() consumes the accumulated
// gradients; the caller zeroes them between iterations.
class Adam {
public:
    Adam(TinyDenoiser& net, const TrainOptions& opts);
    void step();

private:
    TinyDenoiser& net_;
    TrainOptions opts_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

// Noise-prediction training on toy scenes: each step forward-samples a random
// patch of a random scene at a random step and takes one L1 gradient step.
// Returns the per-step loss trace.
std::vector<double> train_toy(const std::vector<HazeScene>& scenes, TinyDenoiser& net,
                              const NoiseSchedule& sched, const PistParams& pist,
                              int steps, std::uint64_t seed, const TrainOptions& opts = {});

// Central-difference check of the analytic gradients on a fixed random probe
// through a linear functional of the output (no loss kinks). Probes at least
// `probes` parameters spread across every tensor; returns the worst relative
// error. The net should carry a non-zero final layer so all paths are live.
double gradient_check(TinyDenoiser& net, std::uint64_t seed, int probes = 27,
                      double h = 1e-4);

}  // namespace hazediff
