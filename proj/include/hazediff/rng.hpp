#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "hazediff/raster.hpp"

namespace hazediff {

// Seeded random stream with pinned transforms.
//
// The bit source is std::mt19937_64 (its output sequence is fixed by the
// standard). Uniform and normal variates are derived here rather than via
// std distributions, whose sequences vary between standard libraries:
//   uniform: (x >> 11) * 2^-53                     -> [0, 1)
//   normal:  Box-Muller on two uniforms, pair cached
struct Rng {
    explicit Rng(std::uint64_t seed) : gen(seed) {}

    double uniform() {
        return static_cast<double>(gen() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Uniform integer in [lo, hi], both inclusive.
    int uniform_int(int lo, int hi) {
        double u = uniform();
        int span = hi - lo + 1;
        int k = static_cast<int>(u * span);
        if (k >= span) k = span - 1;
        return lo + k;
    }

    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare = r * std::sin(a);
        has_spare = true;
        return r * std::cos(a);
    }

    FieldImage normal_field(int h, int w, int c) {
        FieldImage out(h, w, c);
        for (double& v : out.data) v = normal();
        return out;
    }

    std::mt19937_64 gen;
    double spare = 0.0;
    bool has_spare = false;
};

}  // namespace hazediff
