#include "phasescout/ae/model.hpp"

#include "phasescout/errors.hpp"

namespace phasescout::ae {

int AEModel::param_count() const {
    int n = 0;
    for (const auto& l : layers) n += l.param_count();
    return n;
}

std::vector<std::vector<int>> AEModel::activation_shapes() const {
    std::vector<std::vector<int>> shapes{inputShape};
    for (std::size_t k = 0; k < layers.size(); ++k) {
        for (const auto& s : shortcuts)
            if (s.to == static_cast<int>(k) && shapes.at(s.from) != shapes.back())
                throw DomainError("shortcut connects activations of different shapes");
        shapes.push_back(output_shape(layers[k].spec, shapes.back()));
    }
    return shapes;
}

std::vector<int> AEModel::latent_shape() const { return activation_shapes().at(latentIndex); }

void AEModel::validate() const {
    if (layers.empty()) throw DomainError("AEModel: no layers");
    for (const auto& s : shortcuts)
        if (s.from < 0 || s.to < 0 || s.to >= static_cast<int>(layers.size()) || s.from > s.to)
            throw DomainError("AEModel: shortcut indices out of order");
    if (latentIndex < 0 || latentIndex > static_cast<int>(layers.size()))
        throw DomainError("AEModel: latent index out of range");
    const auto shapes = activation_shapes();
    if (shapes.back() != inputShape) throw DomainError("AEModel: output shape differs from input shape");
}

AEModel build_autoencoder(const std::vector<int>& inputShape, const ArchitectureConfig& arch, std::uint64_t seed) {
    if (inputShape.size() < 2 || inputShape.size() > 3) throw DomainError("build_autoencoder: input must be (C, W) or (C, H, W)");
    const int rank = static_cast<int>(inputShape.size()) - 1;
    const int C = inputShape[0];
    const int div = arch.poolSize * arch.poolSize;
    for (int k = 1; k <= rank; ++k)
        if (inputShape[k] % div != 0)
            throw DomainError("build_autoencoder: spatial extent must be divisible by " + std::to_string(div));

    auto conv = [&](int in, int out) {
        LayerSpec s;
        s.kind = LayerKind::Conv;
        s.spatialRank = rank;
        s.inChannels = in;
        s.filters = out;
        s.kernel = arch.kernel;
        return Layer(s);
    };
    auto simple = [&](LayerKind kind) {
        LayerSpec s;
        s.kind = kind;
        s.spatialRank = rank;
        s.poolSize = arch.poolSize;
        s.kernel = arch.kernel;
        return Layer(s);
    };
    const int F = arch.filters;
    AEModel m;
    m.inputShape = inputShape;
    m.layers = {conv(C, F),
                simple(LayerKind::Relu),
                simple(LayerKind::MaxPool),
                conv(F, F),
                simple(LayerKind::Relu),
                simple(LayerKind::MaxPool),
                simple(LayerKind::Upsample),
                conv(F, F),
                simple(LayerKind::Relu),
                simple(LayerKind::Upsample),
                conv(F, C)};
    m.latentIndex = 6;
    if (arch.shortcuts) m.shortcuts = {{3, 7}, {2, 10}};
    std::mt19937_64 rng(seed);
    for (auto& l : m.layers) l.init(rng);
    m.validate();
    return m;
}

ForwardResult ae_forward(const AEModel& model, const TensorBuffer& x) {
    x.check();
    if (x.shape != model.inputShape)
        throw DomainError("ae_forward: input shape " + x.shape_string() + " does not match the model");
    ForwardResult r;
    r.cache.model = &model;
    r.cache.version = model.version;
    r.cache.acts.reserve(model.layers.size() + 1);
    r.cache.caches.resize(model.layers.size());
    r.cache.acts.push_back(x);
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const TensorBuffer* in = &r.cache.acts.back();
        TensorBuffer sum;
        for (const auto& s : model.shortcuts) {
            if (s.to != static_cast<int>(k)) continue;
            if (sum.data.empty()) sum = *in;
            const TensorBuffer& add = r.cache.acts[s.from];
            if (!same_shape(add, sum)) throw DomainError("ae_forward: shortcut shape mismatch");
            for (std::size_t v = 0; v < sum.size(); ++v) sum.data[v] += add.data[v];
        }
        if (!sum.data.empty()) in = &sum;
        r.cache.acts.push_back(layer_forward(model.layers[k], *in, &r.cache.caches[k]));
    }
    r.xBar = r.cache.acts.back();
    return r;
}

TensorBuffer latent(const AEModel& model, const TensorBuffer& x) {
    return ae_forward(model, x).cache.acts.at(model.latentIndex);
}

double reconstruction_loss(const TensorBuffer& x, const TensorBuffer& xBar) {
    if (!same_shape(x, xBar) || x.size() != xBar.size()) throw DomainError("reconstruction_loss: shape mismatch");
    if (x.size() == 0) throw DomainError("reconstruction_loss: empty input");
    double s = 0.0;
    for (std::size_t v = 0; v < x.size(); ++v) {
        const double e = x.data[v] - xBar.data[v];
        s += e * e;
    }
    return s / static_cast<double>(x.size());
}

Gradients backward(const AEModel& model, const TensorBuffer& x, const ForwardCache& cache) {
    if (cache.model != &model || cache.version != model.version || cache.acts.size() != model.layers.size() + 1 ||
        cache.acts.front().data != x.data)
        throw InvariantError("backward: forward cache does not belong to this model and input");
    const int n = static_cast<int>(model.layers.size());
    const TensorBuffer& xBar = cache.acts.back();
    Gradients g;
    g.loss = reconstruction_loss(x, xBar);
    g.layers.resize(n);

    // gradient with respect to every activation
    std::vector<TensorBuffer> dActs(n + 1);
    const double scale = 2.0 / static_cast<double>(x.size());
    dActs[n] = TensorBuffer(xBar.shape);
    for (std::size_t v = 0; v < x.size(); ++v) dActs[n].data[v] = scale * (xBar.data[v] - x.data[v]);
    auto accumulate = [](TensorBuffer& dst, const TensorBuffer& src) {
        if (dst.data.empty()) {
            dst = src;
            return;
        }
        for (std::size_t v = 0; v < dst.size(); ++v) dst.data[v] += src.data[v];
    };
    for (int k = n - 1; k >= 0; --k) {
        if (dActs[k + 1].data.empty()) dActs[k + 1] = TensorBuffer(cache.acts[k + 1].shape);
        TensorBuffer dIn = layer_backward(model.layers[k], cache.caches[k], dActs[k + 1], &g.layers[k]);
        for (const auto& s : model.shortcuts)
            if (s.to == k) accumulate(dActs[s.from], dIn);
        accumulate(dActs[k], dIn);
    }
    for (int k = 0; k < n; ++k) {
        const Layer& l = model.layers[k];
        if (l.spec.kind != LayerKind::Conv) continue;
        if (g.layers[k].weight.size() == 0) g.layers[k].weight = Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols());
        if (g.layers[k].bias.size() == 0) g.layers[k].bias = Eigen::VectorXd::Zero(l.bias.size());
    }
    return g;
}

}  // namespace phasescout::ae
