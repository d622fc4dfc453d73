#pragma once

#include "phasescout/ae/tensor_buffer.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace phasescout::ae {

enum class LayerKind : std::uint8_t { Conv = 0, Relu = 1, MaxPool = 2, Upsample = 3 };

std::string to_string(LayerKind k);

/// Conv layers are cross-correlations with "same" zero padding; kernels are
/// kernel x kernel for images and 1 x kernel for signals. Pool and upsample use
/// a window of poolSize along every spatial dim.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int spatialRank = 1;
    int inChannels = 0;  ///< conv only
    int filters = 64;    ///< conv only
    int kernel = 3;
    int poolSize = 2;

    void validate() const;
};

struct Layer {
    LayerSpec spec;
    Eigen::MatrixXd weight;  ///< filters x (inChannels * kh * kw); column order (c, dy, dx)
    Eigen::VectorXd bias;    ///< filters

    explicit Layer(LayerSpec spec = {});
    int param_count() const { return static_cast<int>(weight.size() + bias.size()); }
    /// Glorot-uniform weights in +-sqrt(6 / (fanIn + fanOut)), zero bias.
    void init(std::mt19937_64& rng);
};

/// Forward intermediate state needed by the backward pass.
struct LayerCache {
    std::vector<int> inShape;
    Eigen::MatrixXd cols;      ///< conv: im2col of the input
    std::vector<int> argmax;   ///< pool: flat input index of each output element
    std::vector<char> mask;    ///< relu: input > 0
};

struct LayerGrad {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
};

/// Output shape for an input shape; throws DomainError on mismatch.
std::vector<int> output_shape(const LayerSpec& spec, const std::vector<int>& inShape);

TensorBuffer layer_forward(const Layer& layer, const TensorBuffer& x, LayerCache* cache = nullptr);

/// Gradient with respect to the layer input; parameter gradients are added to `grad`.
TensorBuffer layer_backward(const Layer& layer, const LayerCache& cache, const TensorBuffer& gradOut,
                            LayerGrad* grad);

}  // namespace phasescout::ae
