#pragma once

#include "phasescout/ae/layers.hpp"
#include "phasescout/ae/tensor_buffer.hpp"

#include <cstdint>
#include <vector>

namespace phasescout::ae {

/// Activation `from` (0 = model input, k = output of layer k-1) is added to the
/// input of layer `to` before that layer runs.
struct Shortcut {
    int from = 0;
    int to = 0;
};

struct AEModel {
    std::vector<Layer> layers;
    std::vector<Shortcut> shortcuts;
    std::vector<int> inputShape;
    int latentIndex = 0;         ///< activation index of the latent code z
    std::uint64_t version = 0;   ///< bumped on every parameter update

    int param_count() const;
    std::vector<int> latent_shape() const;
    /// Shapes of every activation; throws DomainError if layers or shortcuts do not fit.
    std::vector<std::vector<int>> activation_shapes() const;
    void validate() const;
};

struct ArchitectureConfig {
    int filters = 64;
    int kernel = 3;
    int poolSize = 2;
    bool shortcuts = true;
};

/// conv+relu, pool, conv+relu, pool | upsample, conv+relu, upsample, conv.
/// Shortcuts feed the first pool output into the first decoder conv and the
/// first relu output into the output conv. Spatial extents must be divisible by poolSize^2.
AEModel build_autoencoder(const std::vector<int>& inputShape, const ArchitectureConfig& arch, std::uint64_t seed);

struct ForwardCache {
    const AEModel* model = nullptr;
    std::uint64_t version = 0;
    std::vector<TensorBuffer> acts;  ///< acts[0] = x, acts[k+1] = output of layer k
    std::vector<LayerCache> caches;
};

struct ForwardResult {
    TensorBuffer xBar;
    ForwardCache cache;
};

ForwardResult ae_forward(const AEModel& model, const TensorBuffer& x);
TensorBuffer latent(const AEModel& model, const TensorBuffer& x);

/// L(x, xBar) = sum_v (x_v - xBar_v)^2 / D over all D entries.
double reconstruction_loss(const TensorBuffer& x, const TensorBuffer& xBar);

struct Gradients {
    std::vector<LayerGrad> layers;
    double loss = 0.0;
};

/// Reverse-mode gradient of reconstruction_loss(x, ae_forward(model, x)).
Gradients backward(const AEModel& model, const TensorBuffer& x, const ForwardCache& cache);

}  // namespace phasescout::ae
