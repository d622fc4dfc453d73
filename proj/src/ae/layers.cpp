#include "phasescout/ae/layers.hpp"

#include "phasescout/errors.hpp"
#include "phasescout/random.hpp"

#include <cmath>
#include <limits>

namespace phasescout::ae {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string to_string(LayerKind k) {
    switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Upsample: return "upsample";
    }
    return "?";
}

void LayerSpec::validate() const {
    if (spatialRank != 1 && spatialRank != 2) throw DomainError("LayerSpec: spatial rank must be 1 or 2");
    if (kind == LayerKind::Conv) {
        if (inChannels < 1 || filters < 1) throw DomainError("LayerSpec: conv channels must be positive");
        if (kernel < 1 || kernel % 2 == 0) throw DomainError("LayerSpec: kernel must be odd");
    }
    if ((kind == LayerKind::MaxPool || kind == LayerKind::Upsample) && poolSize < 1)
        throw DomainError("LayerSpec: pool size must be positive");
}

Layer::Layer(LayerSpec s) : spec(s) {
    spec.validate();
    if (spec.kind == LayerKind::Conv) {
        const int kh = spec.spatialRank == 2 ? spec.kernel : 1;
        weight = Eigen::MatrixXd::Zero(spec.filters, spec.inChannels * kh * spec.kernel);
        bias = Eigen::VectorXd::Zero(spec.filters);
    }
}

void Layer::init(std::mt19937_64& rng) {
    if (spec.kind != LayerKind::Conv) return;
    const int area = (spec.spatialRank == 2 ? spec.kernel : 1) * spec.kernel;
    const double limit = std::sqrt(6.0 / (spec.inChannels * area + spec.filters * area));
    for (long c = 0; c < weight.cols(); ++c)
        for (long r = 0; r < weight.rows(); ++r) weight(r, c) = uniform(rng, -limit, limit);
    bias.setZero();
}

std::vector<int> output_shape(const LayerSpec& spec, const std::vector<int>& in) {
    if (static_cast<int>(in.size()) != spec.spatialRank + 1)
        throw DomainError("layer " + to_string(spec.kind) + ": input rank does not match layer");
    std::vector<int> out = in;
    switch (spec.kind) {
    case LayerKind::Conv:
        if (in[0] != spec.inChannels)
            throw DomainError("conv: expected " + std::to_string(spec.inChannels) + " input channels, got " +
                              std::to_string(in[0]));
        out[0] = spec.filters;
        break;
    case LayerKind::Relu: break;
    case LayerKind::MaxPool:
        for (std::size_t k = 1; k < in.size(); ++k) {
            if (in[k] % spec.poolSize != 0) throw DomainError("maxpool: pool size does not divide spatial extent");
            out[k] = in[k] / spec.poolSize;
        }
        break;
    case LayerKind::Upsample:
        for (std::size_t k = 1; k < in.size(); ++k) out[k] = in[k] * spec.poolSize;
        break;
    }
    return out;
}

namespace {

struct Geometry {
    int C, H, W, kh, kw;
};

Geometry conv_geometry(const LayerSpec& s, const std::vector<int>& in) {
    const int H = s.spatialRank == 2 ? in[1] : 1;
    return {in[0], H, in.back(), s.spatialRank == 2 ? s.kernel : 1, s.kernel};
}

Eigen::MatrixXd im2col(const std::vector<double>& x, const Geometry& g) {
    const int ph = g.kh / 2, pw = g.kw / 2;
    Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(static_cast<long>(g.C) * g.kh * g.kw, static_cast<long>(g.H) * g.W);
    for (int c = 0; c < g.C; ++c)
        for (int dy = 0; dy < g.kh; ++dy)
            for (int dx = 0; dx < g.kw; ++dx) {
                const long row = (static_cast<long>(c) * g.kh + dy) * g.kw + dx;
                for (int y = 0; y < g.H; ++y) {
                    const int sy = y + dy - ph;
                    if (sy < 0 || sy >= g.H) continue;
                    for (int xx = 0; xx < g.W; ++xx) {
                        const int sx = xx + dx - pw;
                        if (sx < 0 || sx >= g.W) continue;
                        cols(row, static_cast<long>(y) * g.W + xx) = x[(static_cast<std::size_t>(c) * g.H + sy) * g.W + sx];
                    }
                }
            }
    return cols;
}

void col2im(const Eigen::MatrixXd& cols, const Geometry& g, std::vector<double>& dx) {
    const int ph = g.kh / 2, pw = g.kw / 2;
    dx.assign(static_cast<std::size_t>(g.C) * g.H * g.W, 0.0);
    for (int c = 0; c < g.C; ++c)
        for (int dy = 0; dy < g.kh; ++dy)
            for (int ddx = 0; ddx < g.kw; ++ddx) {
                const long row = (static_cast<long>(c) * g.kh + dy) * g.kw + ddx;
                for (int y = 0; y < g.H; ++y) {
                    const int sy = y + dy - ph;
                    if (sy < 0 || sy >= g.H) continue;
                    for (int xx = 0; xx < g.W; ++xx) {
                        const int sx = xx + ddx - pw;
                        if (sx < 0 || sx >= g.W) continue;
                        dx[(static_cast<std::size_t>(c) * g.H + sy) * g.W + sx] += cols(row, static_cast<long>(y) * g.W + xx);
                    }
                }
            }
}

}  // namespace

TensorBuffer layer_forward(const Layer& layer, const TensorBuffer& x, LayerCache* cache) {
    x.check();
    const LayerSpec& s = layer.spec;
    TensorBuffer y(output_shape(s, x.shape));
    if (cache) cache->inShape = x.shape;
    switch (s.kind) {
    case LayerKind::Conv: {
        const Geometry g = conv_geometry(s, x.shape);
        Eigen::MatrixXd cols = im2col(x.data, g);
        Eigen::Map<RowMat> out(y.data.data(), s.filters, static_cast<long>(g.H) * g.W);
        out.noalias() = layer.weight * cols;
        out.colwise() += layer.bias;
        if (cache) cache->cols = std::move(cols);
        break;
    }
    case LayerKind::Relu: {
        if (cache) cache->mask.assign(x.size(), 0);
        for (std::size_t k = 0; k < x.size(); ++k) {
            const bool on = x.data[k] > 0.0;
            y.data[k] = on ? x.data[k] : 0.0;
            if (cache) cache->mask[k] = on;
        }
        break;
    }
    case LayerKind::MaxPool: {
        const int C = x.channels(), H = x.height(), W = x.width();
        const int ph = s.spatialRank == 2 ? s.poolSize : 1, pw = s.poolSize;
        const int Ho = H / ph, Wo = W / pw;
        if (cache) cache->argmax.assign(y.size(), 0);
        for (int c = 0; c < C; ++c)
            for (int yo = 0; yo < Ho; ++yo)
                for (int xo = 0; xo < Wo; ++xo) {
                    double best = -std::numeric_limits<double>::infinity();
                    int arg = -1;
                    for (int dy = 0; dy < ph; ++dy)
                        for (int dx = 0; dx < pw; ++dx) {
                            const int idx = (c * H + yo * ph + dy) * W + xo * pw + dx;
                            if (arg < 0 || x.data[idx] > best) {
                                best = x.data[idx];
                                arg = idx;
                            }
                        }
                    const int o = (c * Ho + yo) * Wo + xo;
                    y.data[o] = best;
                    if (cache) cache->argmax[o] = arg;
                }
        break;
    }
    case LayerKind::Upsample: {
        const int C = x.channels(), H = x.height(), W = x.width();
        const int fh = s.spatialRank == 2 ? s.poolSize : 1, fw = s.poolSize;
        const int Ho = H * fh, Wo = W * fw;
        for (int c = 0; c < C; ++c)
            for (int yo = 0; yo < Ho; ++yo)
                for (int xo = 0; xo < Wo; ++xo) y.data[(c * Ho + yo) * Wo + xo] = x.data[(c * H + yo / fh) * W + xo / fw];
        break;
    }
    }
    return y;
}

TensorBuffer layer_backward(const Layer& layer, const LayerCache& cache, const TensorBuffer& gradOut, LayerGrad* grad) {
    const LayerSpec& s = layer.spec;
    if (cache.inShape.empty()) throw InvariantError("layer_backward: empty forward cache");
    if (gradOut.shape != output_shape(s, cache.inShape)) throw InvariantError("layer_backward: stale forward cache");
    TensorBuffer dx(cache.inShape);
    switch (s.kind) {
    case LayerKind::Conv: {
        const Geometry g = conv_geometry(s, cache.inShape);
        const long n = static_cast<long>(g.H) * g.W;
        if (cache.cols.cols() != n) throw InvariantError("layer_backward: stale conv cache");
        Eigen::Map<const RowMat> G(gradOut.data.data(), s.filters, n);
        if (grad) {
            if (grad->weight.size() == 0) grad->weight = Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
            if (grad->bias.size() == 0) grad->bias = Eigen::VectorXd::Zero(layer.bias.size());
            grad->weight.noalias() += G * cache.cols.transpose();
            grad->bias += G.rowwise().sum();
        }
        const Eigen::MatrixXd dcols = layer.weight.transpose() * G;
        col2im(dcols, g, dx.data);
        break;
    }
    case LayerKind::Relu:
        if (cache.mask.size() != dx.size()) throw InvariantError("layer_backward: stale relu cache");
        for (std::size_t k = 0; k < dx.size(); ++k) dx.data[k] = cache.mask[k] ? gradOut.data[k] : 0.0;
        break;
    case LayerKind::MaxPool:
        if (cache.argmax.size() != gradOut.size()) throw InvariantError("layer_backward: stale pool cache");
        for (std::size_t o = 0; o < gradOut.size(); ++o) dx.data[cache.argmax[o]] += gradOut.data[o];
        break;
    case LayerKind::Upsample: {
        const int C = dx.channels(), H = dx.height(), W = dx.width();
        const int fh = s.spatialRank == 2 ? s.poolSize : 1, fw = s.poolSize;
        const int Ho = H * fh, Wo = W * fw;
        for (int c = 0; c < C; ++c)
            for (int yo = 0; yo < Ho; ++yo)
                for (int xo = 0; xo < Wo; ++xo)
                    dx.data[(c * H + yo / fh) * W + xo / fw] += gradOut.data[(c * Ho + yo) * Wo + xo];
        break;
    }
    }
    return dx;
}

}  // namespace phasescout::ae
