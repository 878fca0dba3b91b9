#include "hazediff/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hazediff/hadtp.hpp"
#include "hazediff/rng.hpp"

namespace hazediff {

Adam::Adam(TinyDenoiser& net, const TrainOptions& opts) : net_(net), opts_(opts) {
    for (const ParamTensor& t : net.tensors()) {
        m_.emplace_back(t.count(), 0.0);
        v_.emplace_back(t.count(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    std::vector<ParamTensor>& tensors = net_.tensors();
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        ParamTensor& t = tensors[ti];
        std::vector<double>& m = m_[ti];
        std::vector<double>& v = v_[ti];
        for (std::size_t i = 0; i < t.count(); ++i) {
            const double g = t.grad[i];
            m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
            v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            t.value[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
        }
    }
}

std::vector<double> train_toy(const std::vector<HazeScene>& scenes, TinyDenoiser& net,
                              const NoiseSchedule& sched, const PistParams& pist,
                              int steps, std::uint64_t seed, const TrainOptions& opts) {
    if (scenes.empty()) throw std::invalid_argument("train_toy: no scenes");
    if (steps < 0) throw std::invalid_argument("train_toy: steps must be >= 0");

    struct Prepared {
        FieldImage clear;
        PixelImage hazy;
        TransmissionMap tmap;
    };
    std::vector<Prepared> prep;
    prep.reserve(scenes.size());
    for (const HazeScene& s : scenes) {
        if (s.clear.channels != net.channels())
            throw std::invalid_argument("train_toy: scene channel count mismatch");
        prep.push_back({to_field(s.clear), apply_asm(s), s.tmap});
    }

    Rng rng(seed);
    Adam adam(net, opts);
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(steps));

    for (int step = 0; step < steps; ++step) {
        const Prepared& s = prep[static_cast<std::size_t>(rng.uniform_int(
            0, static_cast<int>(prep.size()) - 1))];
        const int p = std::min({opts.patch, s.hazy.height, s.hazy.width});
        const int row = s.hazy.height > p ? rng.uniform_int(0, s.hazy.height - p) : 0;
        const int col = s.hazy.width > p ? rng.uniform_int(0, s.hazy.width - p) : 0;

        const FieldImage clear = crop(s.clear, row, col, p, p);
        const PixelImage hazy = crop(s.hazy, row, col, p, p);
        const TransmissionMap tmap = crop(s.tmap, row, col, p, p);

        const int t = rng.uniform_int(1, sched.steps());
        const FieldImage u_t = intermediate_state(clear, hazy, tmap, t, pist);
        const FieldImage eps = rng.normal_field(p, p, net.channels());
        const FieldImage j_t = forward_sample(u_t, t, sched, eps);
        const FieldImage cond = stack_condition(enhance_condition(j_t, hazy, tmap), hazy);

        TinyCache cache;
        const FieldImage eps_hat = net.forward(j_t, cond, sched.gamma_at(t), &cache);
        losses.push_back(pist_loss(eps_hat, eps));

        FieldImage grad_out(p, p, net.channels());
        const double inv_n = 1.0 / static_cast<double>(grad_out.size());
        for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
            const double d = eps_hat.data[i] - eps.data[i];
            grad_out.data[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
        }
        net.zero_grads();
        net.backward(cache, grad_out);
        adam.step();
    }
    return losses;
}

double gradient_check(TinyDenoiser& net, std::uint64_t seed, int probes, double h) {
    Rng rng(seed);
    const int c = net.channels();
    const int size = 8;
    const FieldImage noisy = rng.normal_field(size, size, c);
    FieldImage cond(size, size, 2 * c);
    for (double& v : cond.data) v = rng.uniform();
    const double gamma_hat = 0.37;
    FieldImage functional = rng.normal_field(size, size, c);
    const double inv_n = 1.0 / static_cast<double>(functional.size());
    for (double& v : functional.data) v *= inv_n;

    auto phi = [&]() {
        const FieldImage out = net.forward(noisy, cond, gamma_hat, nullptr);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.data.size(); ++i)
            acc += out.data[i] * functional.data[i];
        return acc;
    };

    net.zero_grads();
    TinyCache cache;
    net.forward(noisy, cond, gamma_hat, &cache);
    net.backward(cache, functional);

    std::vector<ParamTensor>& tensors = net.tensors();
    const int per_tensor =
        (probes + static_cast<int>(tensors.size()) - 1) / static_cast<int>(tensors.size());

    double worst = 0.0;
    for (ParamTensor& t : tensors) {
        std::vector<std::size_t> picked;
        for (int k = 0; k < per_tensor && picked.size() < t.count(); ++k) {
            std::size_t idx;
            do {
                idx = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<int>(t.count()) - 1));
            } while (std::find(picked.begin(), picked.end(), idx) != picked.end());
            picked.push_back(idx);
        }
        for (std::size_t idx : picked) {
            const double saved = t.value[idx];
            t.value[idx] = saved + h;
            const double plus = phi();
            t.value[idx] = saved - h;
            const double minus = phi();
            t.value[idx] = saved;
            const double fd = (plus - minus) / (2.0 * h);
            const double g = t.grad[idx];
            const double denom = std::max({std::fabs(fd), std::fabs(g), 1e-8});
            worst = std::max(worst, std::fabs(fd - g) / denom);
        }
    }
    return worst;
}

}  // namespace hazediff
