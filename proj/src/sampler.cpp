#include "hazediff/sampler.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hazediff/rng.hpp"

namespace hazediff {

std::vector<int> inference_timesteps(int T, int steps) {
    if (T < 1) throw std::invalid_argument("inference_timesteps: T must be >= 1");
    std::vector<int> ts;
    if (steps <= 0 || steps >= T) {
        ts.reserve(static_cast<std::size_t>(T));
        for (int t = T; t >= 1; --t) ts.push_back(t);
        return ts;
    }
    for (int k = 0; k < steps; ++k) {
        const double f = steps == 1 ? 0.0 : static_cast<double>(k) / (steps - 1);
        const int t = static_cast<int>(std::lround(T - f * (T - 1)));
        if (ts.empty() || t < ts.back()) ts.push_back(t);
    }
    return ts;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (threads == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto worker = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = threads < n ? threads : n;
    pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

namespace {

struct PatchContext {
    const PatchGrid& grid;
    std::vector<TransmissionMap> tmaps;
    std::vector<double> tmap_means;
    std::vector<PixelImage> hazy_patches;
};

PatchContext make_context(const PatchGrid& grid, const PixelImage& hazy,
                          const TransmissionMap& tmap) {
    PatchContext ctx{grid, {}, {}, {}};
    ctx.tmaps.reserve(grid.origins.size());
    ctx.tmap_means.reserve(grid.origins.size());
    ctx.hazy_patches.reserve(grid.origins.size());
    for (const auto& [row, col] : grid.origins) {
        TransmissionMap tp = crop(tmap, row, col, grid.patch, grid.patch);
        ctx.tmap_means.push_back(tp.mean());
        ctx.tmaps.push_back(std::move(tp));
        ctx.hazy_patches.push_back(crop(hazy, row, col, grid.patch, grid.patch));
    }
    return ctx;
}

}  // namespace

DehazeResult dehaze(const PixelImage& hazy, const TransmissionMap& tmap,
                    const Denoiser& denoiser, const SamplerConfig& cfg,
                    const PatchWeights* weights) {
    hazy.validate();
    if (tmap.height != hazy.height || tmap.width != hazy.width)
        throw std::invalid_argument("dehaze: transmission map size mismatch");

    const int h = hazy.height, w = hazy.width, c = hazy.channels;
    const NoiseSchedule sched = make_schedule(cfg.total_steps, cfg.beta_start, cfg.beta_end);
    const int T = sched.steps();

    const PatchGrid grid = plan_patches(h, w, cfg.patch, cfg.stride);
    const PatchWeights uniform = weights ? PatchWeights{} : make_uniform_weights(grid);
    const PatchWeights& wts = weights ? *weights : uniform;
    const PatchContext ctx = make_context(grid, hazy, tmap);
    const int npatch = grid.count();
    const double global_mean = tmap.mean();

    Rng rng(cfg.seed);

    // W(T, .) == 0 makes U_T the hazy observation itself, so the chain can
    // start from the input without ground truth.
    FieldImage state = to_field(hazy);
    {
        const double g = sched.gamma_at(T);
        const double sg = std::sqrt(g), sn = std::sqrt(1.0 - g);
        if (cfg.deterministic) {
            for (double& v : state.data) v *= sg;
        } else {
            const FieldImage eps = rng.normal_field(h, w, c);
            for (std::size_t i = 0; i < state.data.size(); ++i)
                state.data[i] = sg * state.data[i] + sn * eps.data[i];
        }
    }

    DehazeResult result;
    result.timesteps = inference_timesteps(T, cfg.steps);
    const std::vector<int>& ts = result.timesteps;

    std::vector<PatchEstimate> estimates(static_cast<std::size_t>(npatch));
    for (int i = 0; i < npatch; ++i) {
        estimates[static_cast<std::size_t>(i)].row = grid.origins[static_cast<std::size_t>(i)].first;
        estimates[static_cast<std::size_t>(i)].col = grid.origins[static_cast<std::size_t>(i)].second;
    }

    for (std::size_t si = 0; si < ts.size(); ++si) {
        const int t = ts[si];
        const int t_next = si + 1 < ts.size() ? ts[si + 1] : 0;
        const int jump = t - t_next;

        // All random draws happen here, on one thread, in a fixed order, so
        // the worker count cannot change the stream.
        FieldImage xi;
        if (!cfg.deterministic) xi = rng.normal_field(h, w, c);
        const FieldImage* xi_ptr = cfg.deterministic ? nullptr : &xi;

        const EnhancedCondition enhanced = enhance_condition(state, hazy, tmap);

        std::vector<int> offsets(static_cast<std::size_t>(npatch), 0);
        bool any_offset = false;
        if (cfg.hadtp.enabled) {
            for (int i = 0; i < npatch; ++i) {
                const int dt = predict_offset(ctx.tmaps[static_cast<std::size_t>(i)],
                                              global_mean, t, T, cfg.hadtp);
                offsets[static_cast<std::size_t>(i)] = dt;
                if (dt != 0) any_offset = true;
            }
        }

        if (cfg.record_trace) {
            for (int i = 0; i < npatch; ++i) {
                TraceRow row;
                row.t = t;
                row.patch_index = i;
                row.dt = offsets[static_cast<std::size_t>(i)];
                row.patch_mean = ctx.tmap_means[static_cast<std::size_t>(i)];
                row.gamma_hat = sched.gamma_at(t + row.dt);
                result.trace.push_back(row);
            }
        }

        if (!any_offset) {
            // Offsets are uniformly zero (or the predictor is off): estimate
            // noise per patch, blend the estimates, take one global step.
            const double gamma_t = sched.gamma_at(t);
            parallel_for(npatch, cfg.threads, [&](int i) {
                const auto& [row, col] = grid.origins[static_cast<std::size_t>(i)];
                const FieldImage noisy = crop(state, row, col, grid.patch, grid.patch);
                const FieldImage cond = stack_condition(
                    crop(enhanced, row, col, grid.patch, grid.patch),
                    ctx.hazy_patches[static_cast<std::size_t>(i)]);
                estimates[static_cast<std::size_t>(i)].field =
                    denoiser.evaluate(noisy, cond, gamma_t, PatchOrigin{row, col});
            });
            const FieldImage eps_hat = aggregate_noise(estimates, grid, wts);
            const double alpha_eff = t_next == t - 1
                                         ? sched.alpha_at(t)
                                         : sched.gamma_at(t) / sched.gamma_at(t_next);
            state = reverse_update(state, eps_hat, alpha_eff, gamma_t, xi_ptr);
        } else {
            // Patches run at shifted steps: each takes its own reverse update
            // and the updated states are blended back into the canvas.
            parallel_for(npatch, cfg.threads, [&](int i) {
                const auto& [row, col] = grid.origins[static_cast<std::size_t>(i)];
                const int dt = offsets[static_cast<std::size_t>(i)];
                const int t_hat = t + dt;
                int t_hat_next = t_hat - jump;
                if (t_hat_next < 0) t_hat_next = 0;
                const double gamma_hat = sched.gamma_at(t_hat);
                const FieldImage noisy = crop(state, row, col, grid.patch, grid.patch);
                const FieldImage cond = stack_condition(
                    crop(enhanced, row, col, grid.patch, grid.patch),
                    ctx.hazy_patches[static_cast<std::size_t>(i)]);
                const FieldImage eps_hat =
                    denoiser.evaluate(noisy, cond, gamma_hat, PatchOrigin{row, col});
                const double alpha_eff = t_hat_next == t_hat - 1
                                             ? sched.alpha_at(t_hat)
                                             : sched.gamma_at(t_hat) / sched.gamma_at(t_hat_next);
                FieldImage xi_patch;
                const FieldImage* xi_patch_ptr = nullptr;
                if (xi_ptr) {
                    xi_patch = crop(*xi_ptr, row, col, grid.patch, grid.patch);
                    xi_patch_ptr = &xi_patch;
                }
                estimates[static_cast<std::size_t>(i)].field =
                    reverse_update(noisy, eps_hat, alpha_eff, gamma_hat, xi_patch_ptr);
            });
            state = aggregate_noise(estimates, grid, wts);
        }
    }

    result.final_state = state;
    result.output = clamp01(state);
    return result;
}

}  // namespace hazediff
