#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hazediff/denoiser.hpp"
#include "hazediff/hazesynth.hpp"
#include "hazediff/imageio.hpp"
#include "hazediff/metrics.hpp"
#include "hazediff/patches.hpp"
#include "hazediff/pist.hpp"
#include "hazediff/rng.hpp"
#include "hazediff/sampler.hpp"
#include "hazediff/tiny_denoiser.hpp"
#include "hazediff/train.hpp"
#include "hazediff/transmission.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace hazediff;

namespace {

// ---------------------------------------------------------------- helpers

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Human-facing status lines; machine artifacts keep full precision.
std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string run_id_for(const std::string& command, const ordered_json& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(command + cfg.dump())));
    return command + "-" + buf;
}

// PSNR serialized as a number, or the string "inf" when MSE was zero.
ordered_json psnr_json(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void write_json(const std::string& path, const ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

// ------------------------------------------------------------- run config

struct RunConfig {
    std::uint64_t seed = 0;
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double pist_a = 0.002;
    bool hadtp_enabled = true;
    double kappa = 0.25;
    int patch = 64;
    int stride = 16;
    int steps = 0;
    bool deterministic = false;
    DcpParams dcp;
};

void reject_unknown(const ordered_json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    if (!obj.is_object()) throw std::runtime_error("config: " + where + " must be an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw std::runtime_error("config: unknown key \"" + item.key() + "\" in " + where);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    ordered_json j = ordered_json::parse(in);
    reject_unknown(j, {"seed", "schedule", "pist", "hadtp", "sampler", "dcp"}, "top level");

    RunConfig cfg;
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        reject_unknown(s, {"T", "beta_start", "beta_end"}, "schedule");
        if (s.contains("T")) cfg.T = s["T"].get<int>();
        if (s.contains("beta_start")) cfg.beta_start = s["beta_start"].get<double>();
        if (s.contains("beta_end")) cfg.beta_end = s["beta_end"].get<double>();
    }
    if (j.contains("pist")) {
        const auto& s = j["pist"];
        reject_unknown(s, {"a"}, "pist");
        if (s.contains("a")) cfg.pist_a = s["a"].get<double>();
    }
    if (j.contains("hadtp")) {
        const auto& s = j["hadtp"];
        reject_unknown(s, {"enabled", "kappa"}, "hadtp");
        if (s.contains("enabled")) cfg.hadtp_enabled = s["enabled"].get<bool>();
        if (s.contains("kappa")) cfg.kappa = s["kappa"].get<double>();
    }
    if (j.contains("sampler")) {
        const auto& s = j["sampler"];
        reject_unknown(s, {"patch", "stride", "steps", "deterministic"}, "sampler");
        if (s.contains("patch")) cfg.patch = s["patch"].get<int>();
        if (s.contains("stride")) cfg.stride = s["stride"].get<int>();
        if (s.contains("steps")) cfg.steps = s["steps"].get<int>();
        if (s.contains("deterministic")) cfg.deterministic = s["deterministic"].get<bool>();
    }
    if (j.contains("dcp")) {
        const auto& s = j["dcp"];
        reject_unknown(s,
                       {"omega", "window", "t0", "guided_radius", "guided_reg", "tau_g",
                        "tau_b", "grad_sigma", "feather_sigma"},
                       "dcp");
        if (s.contains("omega")) cfg.dcp.omega = s["omega"].get<double>();
        if (s.contains("window")) cfg.dcp.window = s["window"].get<int>();
        if (s.contains("t0")) cfg.dcp.t0 = s["t0"].get<double>();
        if (s.contains("guided_radius")) cfg.dcp.guided_radius = s["guided_radius"].get<int>();
        if (s.contains("guided_reg")) cfg.dcp.guided_reg = s["guided_reg"].get<double>();
        if (s.contains("tau_g")) cfg.dcp.tau_g = s["tau_g"].get<double>();
        if (s.contains("tau_b")) cfg.dcp.tau_b = s["tau_b"].get<double>();
        if (s.contains("grad_sigma")) cfg.dcp.grad_sigma = s["grad_sigma"].get<double>();
        if (s.contains("feather_sigma")) cfg.dcp.feather_sigma = s["feather_sigma"].get<double>();
    }
    return cfg;
}

ordered_json config_json(const RunConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["schedule"] = {{"T", cfg.T}, {"beta_start", cfg.beta_start}, {"beta_end", cfg.beta_end}};
    j["pist"] = {{"a", cfg.pist_a}};
    j["hadtp"] = {{"enabled", cfg.hadtp_enabled}, {"kappa", cfg.kappa}};
    j["sampler"] = {{"patch", cfg.patch},
                    {"stride", cfg.stride},
                    {"steps", cfg.steps},
                    {"deterministic", cfg.deterministic}};
    j["dcp"] = {{"omega", cfg.dcp.omega},
                {"window", cfg.dcp.window},
                {"t0", cfg.dcp.t0},
                {"guided_radius", cfg.dcp.guided_radius},
                {"guided_reg", cfg.dcp.guided_reg},
                {"tau_g", cfg.dcp.tau_g},
                {"tau_b", cfg.dcp.tau_b},
                {"grad_sigma", cfg.dcp.grad_sigma},
                {"feather_sigma", cfg.dcp.feather_sigma}};
    return j;
}

ordered_json dcp_json(const DcpParams& p) {
    ordered_json j;
    j["omega"] = p.omega;
    j["window"] = p.window;
    j["t0"] = p.t0;
    j["guided_radius"] = p.guided_radius;
    j["guided_reg"] = p.guided_reg;
    j["tau_g"] = p.tau_g;
    j["tau_b"] = p.tau_b;
    j["grad_sigma"] = p.grad_sigma;
    j["feather_sigma"] = p.feather_sigma;
    return j;
}

// Option values win over the config file; config file wins over defaults.
// An option "applies" only when the user passed it on the command line.
template <typename T>
void maybe(const CLI::Option* opt, T& dst, const T& staged) {
    if (opt && opt->count() > 0) dst = staged;
}

// ----------------------------------------------------------- subcommands

struct ScheduleDumpArgs {
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double pist_a = 0.002;
    std::vector<double> taus;
    std::string out = "-";
};

int run_schedule_dump(const ScheduleDumpArgs& args) {
    const NoiseSchedule sched = make_schedule(args.T, args.beta_start, args.beta_end);
    const PistParams pist{args.pist_a, args.T};
    std::vector<double> taus = args.taus;
    if (taus.empty()) taus = {0.2, 0.5, 0.8};

    std::string csv = "t,beta,alpha,gamma";
    for (double tau : taus) {
        char label[32];  // short label; data columns keep full precision
        std::snprintf(label, sizeof(label), ",W@tau=%g", tau);
        csv += label;
    }
    csv += "\n";
    for (int t = 1; t <= sched.steps(); ++t) {
        csv += std::to_string(t);
        csv += "," + fmt_double(sched.beta_at(t));
        csv += "," + fmt_double(sched.alpha_at(t));
        csv += "," + fmt_double(sched.gamma_at(t));
        for (double tau : taus) csv += "," + fmt_double(pist_weight(t, tau, pist));
        csv += "\n";
    }
    if (args.out == "-")
        std::cout << csv;
    else
        write_text(args.out, csv);
    return 0;
}

struct PatchesPlanArgs {
    int height = 0;
    int width = 0;
    int patch = 64;
    int stride = 16;
    std::string out = "-";
};

int run_patches_plan(const PatchesPlanArgs& args) {
    const PatchGrid grid = plan_patches(args.height, args.width, args.patch, args.stride);
    const std::vector<int> cover = cover_counts(grid);
    int cmin = cover.empty() ? 0 : cover[0], cmax = cmin;
    for (int c : cover) {
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    ordered_json j;
    j["height"] = grid.image_height;
    j["width"] = grid.image_width;
    j["patch"] = grid.patch;
    j["stride"] = grid.stride;
    j["count"] = grid.count();
    ordered_json origins = ordered_json::array();
    for (const auto& [r, c] : grid.origins) origins.push_back({r, c});
    j["origins"] = origins;
    j["cover_min"] = cmin;
    j["cover_max"] = cmax;
    j["weights"] = "uniform";
    if (args.out == "-")
        std::cout << j.dump(2) << "\n";
    else
        write_json(args.out, j);
    return 0;
}

struct TmapArgs {
    std::string input;
    std::string output;
    std::string dark_out;
    std::string sky_out;
    std::string json_out;
};

int run_tmap(const TmapArgs& args, const RunConfig& cfg) {
    const PixelImage hazy = read_image(args.input);
    const TransmissionEstimate est = estimate_transmission(hazy, cfg.dcp);
    write_tmap_pgm(args.output, est.tmap);
    if (!args.dark_out.empty()) write_image(args.dark_out, est.dark);
    if (!args.sky_out.empty()) {
        PixelImage sky(est.sky_smooth.height, est.sky_smooth.width, 1);
        for (std::size_t i = 0; i < sky.data.size(); ++i)
            sky.data[i] = est.sky_smooth.values[i] / 255.0;
        write_image(args.sky_out, sky);
    }
    ordered_json j;
    j["input"] = args.input;
    j["airlight"] = est.airlight;
    j["params"] = dcp_json(cfg.dcp);
    const std::string json_path = args.json_out.empty() ? args.output + ".json" : args.json_out;
    write_json(json_path, j);
    std::cout << "tmap: " << args.output << " (airlight " << fmt_short(est.airlight) << ")\n";
    return 0;
}

struct SynthArgs {
    std::string clear;
    std::string tmap;
    double airlight = -1.0;
    std::string output;
    std::string tmap_out;
    std::string json_out;
};

int run_synth(const SynthArgs& args, const RunConfig& cfg) {
    HazeScene scene;
    scene.clear = read_image(args.clear);
    Rng rng(cfg.seed);
    std::string tmap_source;
    if (!args.tmap.empty()) {
        scene.tmap = read_tmap_pgm(args.tmap);
        tmap_source = args.tmap;
    } else {
        // No map given: draw a smooth random one away from the t0 floor.
        const FieldImage base = smooth_field(rng, scene.clear.height, scene.clear.width);
        scene.tmap = TransmissionMap(scene.clear.height, scene.clear.width);
        for (std::size_t i = 0; i < scene.tmap.values.size(); ++i)
            scene.tmap.values[i] = 0.3 + 0.65 * base.data[i];
        tmap_source = "generated";
    }
    scene.airlight = args.airlight >= 0.0 ? args.airlight : rng.uniform(0.7, 0.95);

    const PixelImage hazy = apply_asm(scene);
    write_image(args.output, hazy);
    if (!args.tmap_out.empty()) write_tmap_pgm(args.tmap_out, scene.tmap);

    ordered_json j;
    j["clear"] = args.clear;
    j["tmap"] = tmap_source;
    j["airlight"] = scene.airlight;
    j["seed"] = cfg.seed;
    const std::string json_path = args.json_out.empty() ? args.output + ".json" : args.json_out;
    write_json(json_path, j);
    std::cout << "synth: " << args.output << " (airlight " << fmt_short(scene.airlight)
              << ")\n";
    return 0;
}

struct DehazeArgs {
    std::string input;
    std::string tmap;
    std::string clear;
    std::string model;
    std::string backend = "oracle";
    std::string hadtp = "on";
    std::string output = "out";
    std::string trace_dir;
    int threads = 1;
};

int run_dehaze(const DehazeArgs& args, const RunConfig& cfg) {
    const PixelImage hazy = read_image(args.input);

    TransmissionMap tmap;
    std::string tmap_source;
    if (!args.tmap.empty()) {
        tmap = read_tmap_pgm(args.tmap);
        tmap_source = args.tmap;
        if (tmap.height != hazy.height || tmap.width != hazy.width)
            throw std::runtime_error("transmission map dimensions (" +
                                     std::to_string(tmap.height) + "x" +
                                     std::to_string(tmap.width) + ") do not match input (" +
                                     std::to_string(hazy.height) + "x" +
                                     std::to_string(hazy.width) + ")");
    } else {
        tmap = estimate_transmission(hazy, cfg.dcp).tmap;
        tmap_source = "estimated";
    }

    const NoiseSchedule sched = make_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
    const PistParams pist{cfg.pist_a, cfg.T};

    std::unique_ptr<Denoiser> backend;
    PixelImage clear;
    if (args.backend == "oracle") {
        if (args.clear.empty())
            throw std::runtime_error("oracle backend requires --clear (ground-truth image)");
        clear = read_image(args.clear);
        backend = std::make_unique<OracleDenoiser>(clear, hazy, tmap, sched, pist);
    } else if (args.backend == "tiny" || args.backend == "external") {
        if (args.model.empty())
            throw std::runtime_error(args.backend + " backend requires --model");
        backend = std::make_unique<TinyDenoiser>(TinyDenoiser::load(args.model));
        if (!args.clear.empty()) clear = read_image(args.clear);
    } else {
        throw std::runtime_error("unknown backend " + args.backend);
    }

    SamplerConfig scfg;
    scfg.patch = cfg.patch;
    scfg.stride = cfg.stride;
    scfg.total_steps = cfg.T;
    scfg.beta_start = cfg.beta_start;
    scfg.beta_end = cfg.beta_end;
    scfg.steps = cfg.steps;
    scfg.pist_a = cfg.pist_a;
    scfg.hadtp.enabled = cfg.hadtp_enabled;
    scfg.hadtp.kappa = cfg.kappa;
    scfg.deterministic = cfg.deterministic;
    scfg.seed = cfg.seed;
    scfg.threads = args.threads;
    scfg.record_trace = true;

    // The run id covers everything that shapes the output, and nothing
    // execution-specific (thread count must not move the artifacts).
    ordered_json cfg_echo = config_json(cfg);
    cfg_echo["command"] = "dehaze";
    cfg_echo["input"] = args.input;
    cfg_echo["tmap"] = tmap_source;
    cfg_echo["backend"] = args.backend;
    if (!args.clear.empty()) cfg_echo["clear"] = args.clear;
    if (!args.model.empty()) cfg_echo["model"] = args.model;

    const std::string rid = run_id_for("dehaze", cfg_echo);
    const fs::path run_dir = fs::path(args.output) / rid;
    const fs::path trace_dir =
        args.trace_dir.empty() ? run_dir / "trace" : fs::path(args.trace_dir);
    fs::create_directories(run_dir);
    fs::create_directories(trace_dir);

    const DehazeResult result = dehaze(hazy, tmap, *backend, scfg);

    write_image((run_dir / "result.png").string(), result.output);
    write_tmap_pgm((run_dir / "tmap.pgm").string(), tmap);
    write_json((run_dir / "config.json").string(), cfg_echo);

    {
        std::string csv = "step,t\n";
        for (std::size_t i = 0; i < result.timesteps.size(); ++i)
            csv += std::to_string(i) + "," + std::to_string(result.timesteps[i]) + "\n";
        write_text((trace_dir / "timesteps.csv").string(), csv);

        std::string hcsv = "t,patch,dt,patch_tmap_mean,gamma_hat\n";
        for (const TraceRow& row : result.trace)
            hcsv += std::to_string(row.t) + "," + std::to_string(row.patch_index) + "," +
                    std::to_string(row.dt) + "," + fmt_double(row.patch_mean) + "," +
                    fmt_double(row.gamma_hat) + "\n";
        write_text((trace_dir / "hadtp.csv").string(), hcsv);
    }

    ordered_json report;
    report["run_id"] = rid;
    report["input"] = args.input;
    report["backend"] = args.backend;
    report["patches"] = plan_patches(hazy.height, hazy.width, cfg.patch, cfg.stride).count();
    report["steps_run"] = result.timesteps.size();
    if (clear.height > 0) {
        const QualityReport q = compare(result.output, clear);
        report["psnr"] = psnr_json(q.psnr);
        report["ssim"] = q.ssim;
    }
    write_json((run_dir / "report.json").string(), report);

    std::cout << run_dir.string() << "\n";
    return 0;
}

struct TrainToyArgs {
    int scenes = 16;
    int size = 64;
    int steps = 2000;
    std::string out_model;
    std::string loss_csv;
    int features = 32;
    int patch = 48;
    double lr = 2e-4;
};

int run_train_toy(const TrainToyArgs& args, const RunConfig& cfg) {
    if (args.out_model.empty()) throw std::runtime_error("train-toy requires --out-model");
    const std::vector<HazeScene> scenes = make_toy_dataset(args.scenes, args.size, cfg.seed);
    const NoiseSchedule sched = make_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
    const PistParams pist{cfg.pist_a, cfg.T};

    TinyDenoiser net(3, args.features, cfg.seed);
    TrainOptions opts;
    opts.patch = args.patch;
    opts.lr = args.lr;
    const std::vector<double> losses =
        train_toy(scenes, net, sched, pist, args.steps, cfg.seed + 1, opts);
    net.save(args.out_model);

    if (!args.loss_csv.empty()) {
        std::string csv = "step,loss\n";
        for (std::size_t i = 0; i < losses.size(); ++i)
            csv += std::to_string(i) + "," + fmt_double(losses[i]) + "\n";
        write_text(args.loss_csv, csv);
    }

    const std::size_t window = std::max<std::size_t>(1, losses.size() / 10);
    double early = 0.0, late = 0.0;
    for (std::size_t i = 0; i < window; ++i) early += losses[i];
    for (std::size_t i = losses.size() - window; i < losses.size(); ++i) late += losses[i];
    early /= static_cast<double>(window);
    late /= static_cast<double>(window);
    std::cout << "train-toy: " << args.out_model << " loss " << fmt_short(early) << " -> "
              << fmt_short(late) << "\n";
    return 0;
}

struct EvalArgs {
    std::string ref;
    std::string test;
    std::string out = "-";
};

bool is_image_file(const fs::path& p) {
    const std::string ext = p.extension().string();
    return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

int run_eval(const EvalArgs& args) {
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> pairs;
    if (fs::is_directory(args.ref) && fs::is_directory(args.test)) {
        std::map<std::string, std::string> ref_files;
        for (const auto& entry : fs::directory_iterator(args.ref))
            if (entry.is_regular_file() && is_image_file(entry.path()))
                ref_files[entry.path().filename().string()] = entry.path().string();
        std::vector<std::pair<std::string, std::string>> test_files;
        for (const auto& entry : fs::directory_iterator(args.test))
            if (entry.is_regular_file() && is_image_file(entry.path()))
                test_files.emplace_back(entry.path().filename().string(),
                                        entry.path().string());
        std::sort(test_files.begin(), test_files.end());
        for (const auto& [name, path] : test_files) {
            auto it = ref_files.find(name);
            if (it != ref_files.end()) pairs.push_back({name, {it->second, path}});
        }
        if (pairs.empty()) throw std::runtime_error("eval: no filename pairs between directories");
    } else {
        pairs.push_back({fs::path(args.test).filename().string(), {args.ref, args.test}});
    }

    ordered_json out;
    ordered_json items = ordered_json::array();
    double psnr_sum = 0.0, ssim_sum = 0.0;
    bool psnr_inf = false;
    for (const auto& [name, paths] : pairs) {
        const PixelImage ref = read_image(paths.first);
        const PixelImage test = read_image(paths.second);
        const QualityReport q = compare(ref, test);
        ordered_json item;
        item["name"] = name;
        item["psnr"] = psnr_json(q.psnr);
        item["ssim"] = q.ssim;
        items.push_back(item);
        if (std::isinf(q.psnr))
            psnr_inf = true;
        else
            psnr_sum += q.psnr;
        ssim_sum += q.ssim;
    }
    out["pairs"] = items;
    out["count"] = pairs.size();
    out["mean_psnr"] =
        psnr_inf ? ordered_json("inf")
                 : ordered_json(psnr_sum / static_cast<double>(pairs.size()));
    out["mean_ssim"] = ssim_sum / static_cast<double>(pairs.size());
    if (args.out == "-")
        std::cout << out.dump(2) << "\n";
    else
        write_json(args.out, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hazediff: physics-guided patch diffusion dehazing toolkit"};
    app.option_defaults()->always_capture_default(true);
    app.require_subcommand(1);

    // Staging variables shared by config-aware subcommands; merged after parse.
    RunConfig staged;
    std::string config_path;

    auto add_config_flags = [&](CLI::App* sub, bool with_sampler) {
        std::map<std::string, CLI::Option*> opts;
        opts["config"] = sub->add_option("--config", config_path,
                                         "JSON config file (flags override file values)");
        opts["seed"] = sub->add_option("--seed", staged.seed, "random seed");
        opts["T"] = sub->add_option("--T", staged.T, "total diffusion steps");
        opts["beta_start"] = sub->add_option("--beta-start", staged.beta_start,
                                             "schedule beta at t=1");
        opts["beta_end"] = sub->add_option("--beta-end", staged.beta_end,
                                           "schedule beta at t=T");
        opts["pist_a"] = sub->add_option("--pist-a", staged.pist_a,
                                         "transition-rate hyperparameter a");
        if (with_sampler) {
            opts["patch"] = sub->add_option("--patch", staged.patch, "patch size");
            opts["stride"] = sub->add_option("--stride", staged.stride, "patch stride");
            opts["steps"] = sub->add_option("--steps", staged.steps,
                                            "inference steps (0 = every step)");
            opts["kappa"] = sub->add_option("--kappa", staged.kappa, "HADTP offset gain");
        }
        return opts;
    };
    auto add_dcp_flags = [&](CLI::App* sub) {
        std::map<std::string, CLI::Option*> opts;
        opts["omega"] = sub->add_option("--omega", staged.dcp.omega, "haze retention factor");
        opts["window"] = sub->add_option("--window", staged.dcp.window, "dark-channel window");
        opts["t0"] = sub->add_option("--t0", staged.dcp.t0, "transmission floor");
        opts["guided_radius"] = sub->add_option("--guided-radius", staged.dcp.guided_radius,
                                                "guided-filter radius");
        opts["guided_reg"] = sub->add_option("--guided-reg", staged.dcp.guided_reg,
                                             "guided-filter regularizer");
        opts["tau_g"] = sub->add_option("--tau-g", staged.dcp.tau_g,
                                        "sky gradient threshold");
        opts["tau_b"] = sub->add_option("--tau-b", staged.dcp.tau_b,
                                        "sky brightness threshold");
        opts["grad_sigma"] = sub->add_option("--grad-sigma", staged.dcp.grad_sigma,
                                             "gradient smoothing sigma");
        opts["feather_sigma"] = sub->add_option("--feather-sigma", staged.dcp.feather_sigma,
                                                "sky-mask feathering sigma");
        return opts;
    };
    auto merge_config = [&](const std::map<std::string, CLI::Option*>& opts) {
        RunConfig cfg;
        const RunConfig flags = staged;  // values after parse
        if (opts.count("config") && opts.at("config")->count() > 0) cfg = load_config(config_path);
        auto take = [&](const char* key, auto member) {
            auto it = opts.find(key);
            if (it != opts.end() && it->second->count() > 0) cfg.*member = flags.*member;
        };
        take("seed", &RunConfig::seed);
        take("T", &RunConfig::T);
        take("beta_start", &RunConfig::beta_start);
        take("beta_end", &RunConfig::beta_end);
        take("pist_a", &RunConfig::pist_a);
        take("patch", &RunConfig::patch);
        take("stride", &RunConfig::stride);
        take("steps", &RunConfig::steps);
        take("kappa", &RunConfig::kappa);
        auto take_dcp = [&](const char* key, auto member) {
            auto it = opts.find(key);
            if (it != opts.end() && it->second->count() > 0) cfg.dcp.*member = flags.dcp.*member;
        };
        take_dcp("omega", &DcpParams::omega);
        take_dcp("window", &DcpParams::window);
        take_dcp("t0", &DcpParams::t0);
        take_dcp("guided_radius", &DcpParams::guided_radius);
        take_dcp("guided_reg", &DcpParams::guided_reg);
        take_dcp("tau_g", &DcpParams::tau_g);
        take_dcp("tau_b", &DcpParams::tau_b);
        take_dcp("grad_sigma", &DcpParams::grad_sigma);
        take_dcp("feather_sigma", &DcpParams::feather_sigma);
        return cfg;
    };

    // schedule dump
    ScheduleDumpArgs sched_args;
    CLI::App* schedule = app.add_subcommand("schedule", "noise schedule utilities");
    schedule->require_subcommand(1);
    CLI::App* dump = schedule->add_subcommand("dump", "emit the schedule as CSV");
    dump->add_option("--T", sched_args.T, "total diffusion steps");
    dump->add_option("--beta-start", sched_args.beta_start, "schedule beta at t=1");
    dump->add_option("--beta-end", sched_args.beta_end, "schedule beta at t=T");
    dump->add_option("--pist-a", sched_args.pist_a, "transition-rate hyperparameter a");
    dump->add_option("--tau", sched_args.taus,
                     "transmission values for the W columns (default 0.2 0.5 0.8)");
    dump->add_option("--out", sched_args.out, "output file or - for standard output");

    // patches plan
    PatchesPlanArgs patch_args;
    CLI::App* patches_cmd = app.add_subcommand("patches", "patch layout utilities");
    patches_cmd->require_subcommand(1);
    CLI::App* plan = patches_cmd->add_subcommand("plan", "dump the patch grid as JSON");
    plan->add_option("--height", patch_args.height, "image height")->required();
    plan->add_option("--width", patch_args.width, "image width")->required();
    plan->add_option("--patch", patch_args.patch, "patch size");
    plan->add_option("--stride", patch_args.stride, "patch stride");
    plan->add_option("--out", patch_args.out, "output file or - for standard output");

    // tmap
    TmapArgs tmap_args;
    CLI::App* tmap_cmd = app.add_subcommand("tmap", "estimate a transmission map");
    tmap_cmd->add_option("--input", tmap_args.input, "hazy input image")->required();
    tmap_cmd->add_option("--output", tmap_args.output, "output map (PGM)")->required();
    tmap_cmd->add_option("--dark", tmap_args.dark_out, "also write the dark channel");
    tmap_cmd->add_option("--sky", tmap_args.sky_out, "also write the feathered sky mask");
    tmap_cmd->add_option("--json", tmap_args.json_out,
                         "sidecar JSON path (default: <output>.json)");
    auto tmap_opts = add_config_flags(tmap_cmd, false);
    auto tmap_dcp = add_dcp_flags(tmap_cmd);
    tmap_opts.insert(tmap_dcp.begin(), tmap_dcp.end());

    // synth
    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("synth", "compose a hazy image");
    synth_cmd->add_option("--clear", synth_args.clear, "clear input image")->required();
    synth_cmd->add_option("--tmap", synth_args.tmap,
                          "transmission map (PGM); generated when absent");
    synth_cmd->add_option("--airlight", synth_args.airlight,
                          "airlight in [0,1]; drawn from the seed when negative");
    synth_cmd->add_option("--output", synth_args.output, "hazy output image")->required();
    synth_cmd->add_option("--out-tmap", synth_args.tmap_out, "write the map that was used");
    synth_cmd->add_option("--json", synth_args.json_out,
                          "scene JSON path (default: <output>.json)");
    auto synth_opts = add_config_flags(synth_cmd, false);

    // dehaze
    DehazeArgs dehaze_args;
    CLI::App* dehaze_cmd = app.add_subcommand("dehaze", "run the reverse diffusion sampler");
    dehaze_cmd->add_option("--input", dehaze_args.input, "hazy input image")->required();
    dehaze_cmd->add_option("--tmap", dehaze_args.tmap,
                           "transmission map (PGM); estimated when absent");
    dehaze_cmd->add_option("--backend", dehaze_args.backend, "oracle, tiny or external")
        ->check(CLI::IsMember({"oracle", "tiny", "external"}));
    dehaze_cmd->add_option("--clear", dehaze_args.clear,
                           "ground-truth image (required by oracle; enables metrics)");
    dehaze_cmd->add_option("--model", dehaze_args.model,
                           "named-tensor model file (tiny/external backends)");
    dehaze_cmd->add_option("--hadtp", dehaze_args.hadtp, "per-patch timestep retargeting")
        ->check(CLI::IsMember({"on", "off"}));
    CLI::Option* det_flag = dehaze_cmd->add_flag("--deterministic", staged.deterministic,
                                                 "suppress injected reverse noise");
    dehaze_cmd->add_option("--output", dehaze_args.output, "output directory root");
    dehaze_cmd->add_option("--trace-dir", dehaze_args.trace_dir,
                           "trace directory (default: <run dir>/trace)");
    dehaze_cmd->add_option("--threads", dehaze_args.threads,
                           "patch evaluation threads (0 = hardware)");
    auto dehaze_opts = add_config_flags(dehaze_cmd, true);

    // train-toy
    TrainToyArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train-toy", "train the tiny denoiser on toy scenes");
    train_cmd->add_option("--scenes", train_args.scenes, "number of toy scenes");
    train_cmd->add_option("--size", train_args.size, "toy scene size");
    train_cmd->add_option("--steps", train_args.steps, "optimization steps");
    train_cmd->add_option("--out-model", train_args.out_model, "model output path")->required();
    train_cmd->add_option("--loss-csv", train_args.loss_csv, "per-step loss trace CSV");
    train_cmd->add_option("--features", train_args.features, "conv feature width");
    train_cmd->add_option("--patch", train_args.patch, "training crop size");
    train_cmd->add_option("--lr", train_args.lr, "Adam learning rate");
    auto train_opts = add_config_flags(train_cmd, false);

    // eval
    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM quality report");
    eval_cmd->add_option("--ref", eval_args.ref, "reference image or directory")->required();
    eval_cmd->add_option("--test", eval_args.test, "test image or directory")->required();
    eval_cmd->add_option("--out", eval_args.out, "output file or - for standard output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help() << std::flush;
        return 1;
    }

    try {
        if (dump->parsed()) return run_schedule_dump(sched_args);
        if (plan->parsed()) return run_patches_plan(patch_args);
        if (tmap_cmd->parsed()) return run_tmap(tmap_args, merge_config(tmap_opts));
        if (synth_cmd->parsed()) return run_synth(synth_args, merge_config(synth_opts));
        if (dehaze_cmd->parsed()) {
            RunConfig cfg = merge_config(dehaze_opts);
            if (dehaze_cmd->count("--hadtp") > 0) cfg.hadtp_enabled = dehaze_args.hadtp == "on";
            maybe(det_flag, cfg.deterministic, staged.deterministic);
            return run_dehaze(dehaze_args, cfg);
        }
        if (train_cmd->parsed()) return run_train_toy(train_args, merge_config(train_opts));
        if (eval_cmd->parsed()) return run_eval(eval_args);
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
