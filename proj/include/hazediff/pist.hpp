#pragma once

#include <vector>

#include "hazediff/raster.hpp"

namespace hazediff {

// Per-step retention factors alpha_t and their cumulative product gamma_t,
// t = 1..T. gamma(0) == 1, so t = 0 is the noise-free end of the chain.
struct NoiseSchedule {
    std::vector<double> beta;   // beta[t-1]  = beta_t
    std::vector<double> alpha;  // alpha[t-1] = 1 - beta_t
    std::vector<double> gamma;  // gamma[t-1] = prod_{s<=t} alpha_s

    int steps() const { return static_cast<int>(alpha.size()); }

    double beta_at(int t) const { check_step(t); return beta[t - 1]; }
    double alpha_at(int t) const { check_step(t); return alpha[t - 1]; }
    double gamma_at(int t) const {
        if (t == 0) return 1.0;
        check_step(t);
        return gamma[t - 1];
    }

    // Step whose gamma is nearest to g. gamma is strictly decreasing, so a
    // value produced by this schedule maps back to its own step.
    int step_for_gamma(double g) const;

    static NoiseSchedule from_alphas(const std::vector<double>& alphas);

private:
    void check_step(int t) const {
        if (t < 1 || t > steps())
            throw std::invalid_argument("NoiseSchedule: step out of range");
    }
};

// Linear beta schedule (DDPM convention), beta_start..beta_end over T steps.
NoiseSchedule make_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

struct PistParams {
    double a = 0.002;  // transition-rate hyperparameter, >= 0
    int steps = 1000;  // total diffusion steps T
};

// Interpolation weight W(t, tau) = cos(t/T * pi/2) * exp(-a * t * tau).
// W(0, .) = 1 and W(T, .) = 0 exactly.
double pist_weight(int t, double tau, const PistParams& params);

// Intermediate target U_t = W * clear + (1 - W) * hazy, W taken per pixel
// from the transmission map and shared across channels.
FieldImage intermediate_state(const FieldImage& clear, const PixelImage& hazy,
                              const TransmissionMap& tmap, int t,
                              const PistParams& params);

// Forward corruption J_t = sqrt(gamma_t) * U_t + sqrt(1 - gamma_t) * noise.
FieldImage forward_sample(const FieldImage& u_t, int t,
                          const NoiseSchedule& sched, const FieldImage& noise);

// One reverse update with explicit coefficients:
//   out = (j - (1 - alpha)/sqrt(1 - gamma) * eps_hat) / sqrt(alpha)
//         + sqrt(1 - alpha) * injected
// injected == nullptr means deterministic mode (zero injected noise).
FieldImage reverse_update(const FieldImage& j, const FieldImage& eps_hat,
                          double alpha, double gamma,
                          const FieldImage* injected);

// Reverse update at schedule step t (alpha_t, gamma_t). t must be >= 1.
FieldImage reverse_step(const FieldImage& j_t, const FieldImage& eps_hat, int t,
                        const NoiseSchedule& sched,
                        const FieldImage* injected = nullptr);

// Mean absolute difference over all elements (the L1 training objective).
double pist_loss(const FieldImage& eps_hat, const FieldImage& eps_true);

}  // namespace hazediff
