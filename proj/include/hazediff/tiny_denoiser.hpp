#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazediff/denoiser.hpp"
#include "hazediff/raster.hpp"

namespace hazediff {

// One learnable tensor with its gradient accumulator.
struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;

    std::size_t count() const { return value.size(); }
};

// Activations retained by forward() so backward() can run without recompute.
// Planar layout: plane[c] is a row-major h*w buffer.
struct TinyCache {
    int height = 0;
    int width = 0;
    std::vector<double> embed;
    std::vector<std::vector<double>> input;
    std::vector<std::vector<double>> z1, a1, z2, a2, out;
};

// Small conv net predicting per-pixel noise from the noisy state and the
// stacked condition (enhanced blend + hazy observation).  Three 3x3 zero-pad
// conv levels; each level's bias is shifted by a learned linear map of a
// sinusoidal embedding of gamma_hat, so the response can vary with noise level.
class TinyDenoiser final : public Denoiser {
public:
    static constexpr int kEmbedFeatures = 16;

    // zero_final: start the last conv at zero so the initial prediction is 0.
    // Pass false to randomize it (useful when probing gradients end to end).
    TinyDenoiser(int channels, int features, std::uint64_t seed, bool zero_final = true);

    FieldImage evaluate(const FieldImage& noisy, const FieldImage& condition,
                        double gamma_hat, PatchOrigin origin) const override;

    // cache may be null when no backward pass will follow.
    FieldImage forward(const FieldImage& noisy, const FieldImage& condition,
                       double gamma_hat, TinyCache* cache) const;

    // Accumulates parameter gradients for d(loss)/d(output) = grad_out.
    void backward(const TinyCache& cache, const FieldImage& grad_out);

    std::vector<ParamTensor>& tensors() { return tensors_; }
    const std::vector<ParamTensor>& tensors() const { return tensors_; }
    std::size_t param_count() const;
    void zero_grads();

    int channels() const { return channels_; }
    int features() const { return features_; }

    void save(const std::string& path) const;
    static TinyDenoiser load(const std::string& path);

    static std::vector<double> gamma_embedding(double gamma_hat);

private:
    int channels_;
    int features_;
    std::vector<ParamTensor> tensors_;

    ParamTensor& tensor(const std::string& name);
    const ParamTensor& tensor(const std::string& name) const;
};

}  // namespace hazediff
