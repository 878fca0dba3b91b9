#include "hazediff/tiny_denoiser.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include <json.hpp>

#include "hazediff/rng.hpp"
#include "hazediff/tensor.hpp"

namespace hazediff {

namespace {

using Planes = std::vector<std::vector<double>>;

Planes make_planes(int count, int h, int w) {
    return Planes(static_cast<std::size_t>(count),
                  std::vector<double>(static_cast<std::size_t>(h) * w, 0.0));
}

void planarize(const FieldImage& img, Planes& planes, int first_plane) {
    const int h = img.height, w = img.width, c = img.channels;
    for (int ch = 0; ch < c; ++ch) {
        std::vector<double>& plane = planes[static_cast<std::size_t>(first_plane + ch)];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                plane[static_cast<std::size_t>(y) * w + x] = img.at(y, x, ch);
    }
}

// out[oc] += sum_ic conv3x3(in[ic]); bias term must already be in out.
void conv_accumulate(const Planes& in, int h, int w, const std::vector<double>& weight,
                     int out_ch, int in_ch, Planes& out) {
    for (int oc = 0; oc < out_ch; ++oc) {
        std::vector<double>& dst_plane = out[static_cast<std::size_t>(oc)];
        for (int ic = 0; ic < in_ch; ++ic) {
            const std::vector<double>& src_plane = in[static_cast<std::size_t>(ic)];
            for (int ky = -1; ky <= 1; ++ky) {
                const int ys = ky < 0 ? -ky : 0;
                const int ye = ky > 0 ? h - ky : h;
                for (int kx = -1; kx <= 1; ++kx) {
                    const double wgt =
                        weight[static_cast<std::size_t>(((oc * in_ch + ic) * 3 + ky + 1) * 3 +
                                                        kx + 1)];
                    const int xs = kx < 0 ? -kx : 0;
                    const int xe = kx > 0 ? w - kx : w;
                    for (int y = ys; y < ye; ++y) {
                        const double* src = src_plane.data() +
                                            static_cast<std::size_t>(y + ky) * w + (xs + kx);
                        double* dst = dst_plane.data() + static_cast<std::size_t>(y) * w + xs;
                        for (int x = 0; x < xe - xs; ++x) dst[x] += wgt * src[x];
                    }
                }
            }
        }
    }
}

void conv_forward(const Planes& in, int h, int w, const ParamTensor& weight,
                  const ParamTensor& bias, const ParamTensor& emb,
                  const std::vector<double>& e, int out_ch, int in_ch, Planes& out) {
    out = make_planes(out_ch, h, w);
    for (int oc = 0; oc < out_ch; ++oc) {
        double b = bias.value[static_cast<std::size_t>(oc)];
        for (int k = 0; k < TinyDenoiser::kEmbedFeatures; ++k)
            b += emb.value[static_cast<std::size_t>(oc) * TinyDenoiser::kEmbedFeatures + k] *
                 e[static_cast<std::size_t>(k)];
        std::vector<double>& plane = out[static_cast<std::size_t>(oc)];
        for (double& v : plane) v = b;
    }
    conv_accumulate(in, h, w, weight.value, out_ch, in_ch, out);
}

// Gradients of one conv level.  din may be null for the first level.
void conv_backward(const Planes& in, int h, int w, ParamTensor& weight, ParamTensor& bias,
                   ParamTensor& emb, const std::vector<double>& e, const Planes& dout,
                   int out_ch, int in_ch, Planes* din) {
    if (din) *din = make_planes(in_ch, h, w);
    for (int oc = 0; oc < out_ch; ++oc) {
        const std::vector<double>& dout_plane = dout[static_cast<std::size_t>(oc)];
        double dsum = 0.0;
        for (double v : dout_plane) dsum += v;
        bias.grad[static_cast<std::size_t>(oc)] += dsum;
        for (int k = 0; k < TinyDenoiser::kEmbedFeatures; ++k)
            emb.grad[static_cast<std::size_t>(oc) * TinyDenoiser::kEmbedFeatures + k] +=
                dsum * e[static_cast<std::size_t>(k)];

        for (int ic = 0; ic < in_ch; ++ic) {
            const std::vector<double>& src_plane = in[static_cast<std::size_t>(ic)];
            for (int ky = -1; ky <= 1; ++ky) {
                const int ys = ky < 0 ? -ky : 0;
                const int ye = ky > 0 ? h - ky : h;
                for (int kx = -1; kx <= 1; ++kx) {
                    const std::size_t widx =
                        static_cast<std::size_t>(((oc * in_ch + ic) * 3 + ky + 1) * 3 + kx + 1);
                    const int xs = kx < 0 ? -kx : 0;
                    const int xe = kx > 0 ? w - kx : w;
                    double wacc = 0.0;
                    for (int y = ys; y < ye; ++y) {
                        const double* src = src_plane.data() +
                                            static_cast<std::size_t>(y + ky) * w + (xs + kx);
                        const double* dop = dout_plane.data() +
                                            static_cast<std::size_t>(y) * w + xs;
                        for (int x = 0; x < xe - xs; ++x) wacc += dop[x] * src[x];
                    }
                    weight.grad[widx] += wacc;
                    if (din) {
                        const double wgt = weight.value[widx];
                        std::vector<double>& din_plane = (*din)[static_cast<std::size_t>(ic)];
                        for (int y = ys; y < ye; ++y) {
                            double* dst = din_plane.data() +
                                          static_cast<std::size_t>(y + ky) * w + (xs + kx);
                            const double* dop = dout_plane.data() +
                                                static_cast<std::size_t>(y) * w + xs;
                            for (int x = 0; x < xe - xs; ++x) dst[x] += wgt * dop[x];
                        }
                    }
                }
            }
        }
    }
}

void relu_inplace(Planes& z, Planes& a) {
    a = z;
    for (auto& plane : a)
        for (double& v : plane)
            if (v < 0.0) v = 0.0;
}

ParamTensor make_param(const std::string& name, std::vector<int> shape) {
    ParamTensor t;
    t.name = name;
    t.shape = std::move(shape);
    std::size_t n = 1;
    for (int d : t.shape) n *= static_cast<std::size_t>(d);
    t.value.assign(n, 0.0);
    t.grad.assign(n, 0.0);
    return t;
}

void he_init(ParamTensor& t, int fan_in, Rng& rng) {
    const double scale = std::sqrt(2.0 / fan_in);
    for (double& v : t.value) v = scale * rng.normal();
}

void small_init(ParamTensor& t, Rng& rng) {
    for (double& v : t.value) v = 0.01 * rng.normal();
}

}  // namespace

TinyDenoiser::TinyDenoiser(int channels, int features, std::uint64_t seed, bool zero_final)
    : channels_(channels), features_(features) {
    if (channels < 1 || features < 1)
        throw std::invalid_argument("TinyDenoiser: channels and features must be positive");
    const int in_ch = 3 * channels;
    tensors_.push_back(make_param("conv1.weight", {features, in_ch, 3, 3}));
    tensors_.push_back(make_param("conv1.bias", {features}));
    tensors_.push_back(make_param("emb1.weight", {features, kEmbedFeatures}));
    tensors_.push_back(make_param("conv2.weight", {features, features, 3, 3}));
    tensors_.push_back(make_param("conv2.bias", {features}));
    tensors_.push_back(make_param("emb2.weight", {features, kEmbedFeatures}));
    tensors_.push_back(make_param("conv3.weight", {channels, features, 3, 3}));
    tensors_.push_back(make_param("conv3.bias", {channels}));
    tensors_.push_back(make_param("emb3.weight", {channels, kEmbedFeatures}));

    Rng rng(seed);
    he_init(tensor("conv1.weight"), in_ch * 9, rng);
    small_init(tensor("emb1.weight"), rng);
    he_init(tensor("conv2.weight"), features * 9, rng);
    small_init(tensor("emb2.weight"), rng);
    if (!zero_final) {
        he_init(tensor("conv3.weight"), features * 9, rng);
        small_init(tensor("emb3.weight"), rng);
    }
}

ParamTensor& TinyDenoiser::tensor(const std::string& name) {
    for (ParamTensor& t : tensors_)
        if (t.name == name) return t;
    throw std::logic_error("TinyDenoiser: unknown tensor " + name);
}

const ParamTensor& TinyDenoiser::tensor(const std::string& name) const {
    for (const ParamTensor& t : tensors_)
        if (t.name == name) return t;
    throw std::logic_error("TinyDenoiser: unknown tensor " + name);
}

std::size_t TinyDenoiser::param_count() const {
    std::size_t n = 0;
    for (const ParamTensor& t : tensors_) n += t.count();
    return n;
}

void TinyDenoiser::zero_grads() {
    for (ParamTensor& t : tensors_)
        for (double& g : t.grad) g = 0.0;
}

std::vector<double> TinyDenoiser::gamma_embedding(double gamma_hat) {
    std::vector<double> e(kEmbedFeatures);
    for (int k = 0; k < kEmbedFeatures / 2; ++k) {
        const double omega = 3.14159265358979323846 * std::pow(2.0, k);
        e[static_cast<std::size_t>(2 * k)] = std::sin(omega * gamma_hat);
        e[static_cast<std::size_t>(2 * k + 1)] = std::cos(omega * gamma_hat);
    }
    return e;
}

FieldImage TinyDenoiser::forward(const FieldImage& noisy, const FieldImage& condition,
                                 double gamma_hat, TinyCache* cache) const {
    if (noisy.channels != channels_)
        throw std::invalid_argument("TinyDenoiser: noisy channel count mismatch");
    if (condition.channels != 2 * channels_)
        throw std::invalid_argument("TinyDenoiser: condition must stack two images");
    if (condition.height != noisy.height || condition.width != noisy.width)
        throw std::invalid_argument("TinyDenoiser: condition size mismatch");

    const int h = noisy.height, w = noisy.width;
    const int in_ch = 3 * channels_;
    Planes input = make_planes(in_ch, h, w);
    planarize(noisy, input, 0);
    planarize(condition, input, channels_);
    const std::vector<double> e = gamma_embedding(gamma_hat);

    Planes z1, a1, z2, a2, out;
    conv_forward(input, h, w, tensor("conv1.weight"), tensor("conv1.bias"),
                 tensor("emb1.weight"), e, features_, in_ch, z1);
    relu_inplace(z1, a1);
    conv_forward(a1, h, w, tensor("conv2.weight"), tensor("conv2.bias"),
                 tensor("emb2.weight"), e, features_, features_, z2);
    relu_inplace(z2, a2);
    conv_forward(a2, h, w, tensor("conv3.weight"), tensor("conv3.bias"),
                 tensor("emb3.weight"), e, channels_, features_, out);

    FieldImage result(h, w, channels_);
    for (int c = 0; c < channels_; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                result.at(y, x, c) = out[static_cast<std::size_t>(c)]
                                        [static_cast<std::size_t>(y) * w + x];

    if (cache) {
        cache->height = h;
        cache->width = w;
        cache->embed = e;
        cache->input = std::move(input);
        cache->z1 = std::move(z1);
        cache->a1 = std::move(a1);
        cache->z2 = std::move(z2);
        cache->a2 = std::move(a2);
        cache->out = std::move(out);
    }
    return result;
}

void TinyDenoiser::backward(const TinyCache& cache, const FieldImage& grad_out) {
    const int h = cache.height, w = cache.width;
    if (grad_out.height != h || grad_out.width != w || grad_out.channels != channels_)
        throw std::invalid_argument("TinyDenoiser: grad_out shape mismatch");

    Planes dout3 = make_planes(channels_, h, w);
    planarize(grad_out, dout3, 0);

    Planes da2, da1;
    conv_backward(cache.a2, h, w, tensor("conv3.weight"), tensor("conv3.bias"),
                  tensor("emb3.weight"), cache.embed, dout3, channels_, features_, &da2);
    for (int c = 0; c < features_; ++c) {
        const std::vector<double>& z = cache.z2[static_cast<std::size_t>(c)];
        std::vector<double>& d = da2[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < d.size(); ++i)
            if (z[i] <= 0.0) d[i] = 0.0;
    }
    conv_backward(cache.a1, h, w, tensor("conv2.weight"), tensor("conv2.bias"),
                  tensor("emb2.weight"), cache.embed, da2, features_, features_, &da1);
    for (int c = 0; c < features_; ++c) {
        const std::vector<double>& z = cache.z1[static_cast<std::size_t>(c)];
        std::vector<double>& d = da1[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < d.size(); ++i)
            if (z[i] <= 0.0) d[i] = 0.0;
    }
    conv_backward(cache.input, h, w, tensor("conv1.weight"), tensor("conv1.bias"),
                  tensor("emb1.weight"), cache.embed, da1, features_, 3 * channels_, nullptr);
}

FieldImage TinyDenoiser::evaluate(const FieldImage& noisy, const FieldImage& condition,
                                  double gamma_hat, PatchOrigin) const {
    return forward(noisy, condition, gamma_hat, nullptr);
}

void TinyDenoiser::save(const std::string& path) const {
    std::vector<NamedTensor> out;
    for (const ParamTensor& t : tensors_) {
        NamedTensor nt;
        nt.name = t.name;
        nt.shape = t.shape;
        nt.values = t.value;
        out.push_back(std::move(nt));
    }
    nlohmann::ordered_json meta;
    meta["arch"] = "tiny";
    meta["channels"] = channels_;
    meta["features"] = features_;
    save_tensors(path, out, meta.dump());
}

TinyDenoiser TinyDenoiser::load(const std::string& path) {
    TensorFile file = load_tensors(path);
    nlohmann::json meta = nlohmann::json::parse(file.meta_json);
    if (meta.value("arch", "") != "tiny")
        throw std::runtime_error(path + ": not a tiny denoiser model");
    TinyDenoiser net(meta.at("channels").get<int>(), meta.at("features").get<int>(), 0, true);
    for (ParamTensor& t : net.tensors_) {
        bool found = false;
        for (const NamedTensor& nt : file.tensors) {
            if (nt.name != t.name) continue;
            if (nt.shape != t.shape)
                throw std::runtime_error(path + ": shape mismatch for " + t.name);
            t.value = nt.values;
            found = true;
            break;
        }
        if (!found) throw std::runtime_error(path + ": missing tensor " + t.name);
    }
    return net;
}

}  // namespace hazediff
