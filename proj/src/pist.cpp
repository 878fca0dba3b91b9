#include "hazediff/pist.hpp"

#include <cmath>

namespace hazediff {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

int NoiseSchedule::step_for_gamma(double g) const {
    int lo = 1, hi = steps();
    while (lo < hi) {  // first t with gamma_at(t) <= g, gamma decreasing
        int mid = (lo + hi) / 2;
        if (gamma_at(mid) <= g) hi = mid;
        else lo = mid + 1;
    }
    if (lo > 1 && std::abs(gamma_at(lo - 1) - g) < std::abs(gamma_at(lo) - g))
        return lo - 1;
    return lo;
}

NoiseSchedule NoiseSchedule::from_alphas(const std::vector<double>& alphas) {
    if (alphas.empty())
        throw std::invalid_argument("NoiseSchedule: empty alpha list");
    NoiseSchedule s;
    s.alpha = alphas;
    s.beta.resize(alphas.size());
    s.gamma.resize(alphas.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 1.0))
            throw std::invalid_argument("NoiseSchedule: alpha_t must lie in (0,1)");
        s.beta[i] = 1.0 - alphas[i];
        prod *= alphas[i];
        s.gamma[i] = prod;
    }
    return s;
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 1)
        throw std::invalid_argument("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
    std::vector<double> alphas(T);
    for (int t = 1; t <= T; ++t) {
        double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        double beta = beta_start + (beta_end - beta_start) * frac;
        alphas[t - 1] = 1.0 - beta;
    }
    return NoiseSchedule::from_alphas(alphas);
}

double pist_weight(int t, double tau, const PistParams& params) {
    if (t < 0 || t > params.steps)
        throw std::invalid_argument("pist_weight: t outside [0, T]");
    if (params.a < 0.0)
        throw std::invalid_argument("pist_weight: a must be >= 0");
    // cos(pi/2) only underflows to ~6e-17 in floating point; pin the
    // boundary so U_T reproduces the hazy image bit-exactly.
    if (t == params.steps) return 0.0;
    double ratio = static_cast<double>(t) / params.steps;
    double cosine = std::cos(ratio * (kPi / 2.0));
    return cosine * std::exp(-params.a * t * tau);
}

FieldImage intermediate_state(const FieldImage& clear, const PixelImage& hazy,
                              const TransmissionMap& tmap, int t,
                              const PistParams& params) {
    if (clear.height != hazy.height || clear.width != hazy.width ||
        clear.channels != hazy.channels)
        throw std::invalid_argument("intermediate_state: clear/hazy shape mismatch");
    if (tmap.height != clear.height || tmap.width != clear.width)
        throw std::invalid_argument("intermediate_state: transmission map shape mismatch");
    FieldImage out(clear.height, clear.width, clear.channels);
    for (int y = 0; y < clear.height; ++y) {
        for (int x = 0; x < clear.width; ++x) {
            double w = pist_weight(t, tmap.at(y, x), params);
            for (int c = 0; c < clear.channels; ++c)
                out.at(y, x, c) = w * clear.at(y, x, c) + (1.0 - w) * hazy.at(y, x, c);
        }
    }
    return out;
}

FieldImage forward_sample(const FieldImage& u_t, int t,
                          const NoiseSchedule& sched, const FieldImage& noise) {
    if (!u_t.same_shape(noise))
        throw std::invalid_argument("forward_sample: noise shape mismatch");
    double gamma = sched.gamma_at(t);  // validates 0 <= t <= T
    double s = std::sqrt(gamma);
    double q = std::sqrt(1.0 - gamma);
    FieldImage out(u_t.height, u_t.width, u_t.channels);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = s * u_t.data[i] + q * noise.data[i];
    return out;
}

FieldImage reverse_update(const FieldImage& j, const FieldImage& eps_hat,
                          double alpha, double gamma,
                          const FieldImage* injected) {
    if (!j.same_shape(eps_hat))
        throw std::invalid_argument("reverse_update: eps_hat shape mismatch");
    if (injected && !j.same_shape(*injected))
        throw std::invalid_argument("reverse_update: injected noise shape mismatch");
    double coef = (1.0 - alpha) / std::sqrt(1.0 - gamma);
    double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    double noise_scale = std::sqrt(1.0 - alpha);
    FieldImage out(j.height, j.width, j.channels);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double v = (j.data[i] - coef * eps_hat.data[i]) * inv_sqrt_alpha;
        if (injected) v += noise_scale * injected->data[i];
        out.data[i] = v;
    }
    return out;
}

FieldImage reverse_step(const FieldImage& j_t, const FieldImage& eps_hat, int t,
                        const NoiseSchedule& sched, const FieldImage* injected) {
    if (t < 1)
        throw std::invalid_argument("reverse_step: no step below t = 1");
    return reverse_update(j_t, eps_hat, sched.alpha_at(t), sched.gamma_at(t), injected);
}

double pist_loss(const FieldImage& eps_hat, const FieldImage& eps_true) {
    if (!eps_hat.same_shape(eps_true))
        throw std::invalid_argument("pist_loss: shape mismatch");
    if (eps_hat.data.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < eps_hat.data.size(); ++i)
        sum += std::abs(eps_hat.data[i] - eps_true.data[i]);
    return sum / static_cast<double>(eps_hat.data.size());
}

}  // namespace hazediff
