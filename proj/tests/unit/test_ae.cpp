#include "phasescout/ae/checkpoint.hpp"
#include "phasescout/ae/layers.hpp"
#include "phasescout/ae/model.hpp"
#include "phasescout/ae/train.hpp"
#include "phasescout/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace phasescout;
using namespace phasescout::ae;

namespace {

TensorBuffer random_buffer(const std::vector<int>& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    TensorBuffer t(shape);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& x : t.data) x = u(rng);
    return t;
}

/// Straightforward nested-loop reference for every layer kind.
TensorBuffer naive_layer(const Layer& l, const TensorBuffer& x) {
    const LayerSpec& s = l.spec;
    const int C = x.channels(), H = x.height(), W = x.width();
    const bool img = s.spatialRank == 2;
    auto at = [&](int c, int y, int xx) { return x.data[(static_cast<std::size_t>(c) * H + y) * W + xx]; };
    switch (s.kind) {
    case LayerKind::Conv: {
        const int kh = img ? s.kernel : 1, kw = s.kernel;
        std::vector<int> shape = x.shape;
        shape[0] = s.filters;
        TensorBuffer y(shape);
        for (int f = 0; f < s.filters; ++f)
            for (int yy = 0; yy < H; ++yy)
                for (int xx = 0; xx < W; ++xx) {
                    double v = l.bias(f);
                    for (int c = 0; c < C; ++c)
                        for (int dy = 0; dy < kh; ++dy)
                            for (int dx = 0; dx < kw; ++dx) {
                                const int sy = yy + dy - kh / 2, sx = xx + dx - kw / 2;
                                if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                                v += l.weight(f, (c * kh + dy) * kw + dx) * at(c, sy, sx);
                            }
                    y.data[(static_cast<std::size_t>(f) * H + yy) * W + xx] = v;
                }
        return y;
    }
    case LayerKind::Relu: {
        TensorBuffer y = x;
        for (double& v : y.data) v = std::max(v, 0.0);
        return y;
    }
    case LayerKind::MaxPool: {
        const int p = s.poolSize, ph = img ? p : 1;
        std::vector<int> shape = x.shape;
        if (img) shape[1] /= p;
        shape.back() /= p;
        TensorBuffer y(shape);
        const int Ho = H / ph, Wo = W / p;
        for (int c = 0; c < C; ++c)
            for (int yy = 0; yy < Ho; ++yy)
                for (int xx = 0; xx < Wo; ++xx) {
                    double m = -INFINITY;
                    for (int dy = 0; dy < ph; ++dy)
                        for (int dx = 0; dx < p; ++dx) m = std::max(m, at(c, yy * ph + dy, xx * p + dx));
                    y.data[(static_cast<std::size_t>(c) * Ho + yy) * Wo + xx] = m;
                }
        return y;
    }
    case LayerKind::Upsample: {
        const int p = s.poolSize, ph = img ? p : 1;
        std::vector<int> shape = x.shape;
        if (img) shape[1] *= p;
        shape.back() *= p;
        TensorBuffer y(shape);
        for (int c = 0; c < C; ++c)
            for (int yy = 0; yy < H * ph; ++yy)
                for (int xx = 0; xx < W * p; ++xx)
                    y.data[(static_cast<std::size_t>(c) * H * ph + yy) * W * p + xx] = at(c, yy / ph, xx / p);
        return y;
    }
    }
    return {};
}

TensorBuffer naive_forward(const AEModel& m, const TensorBuffer& x) {
    std::vector<TensorBuffer> acts{x};
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
        TensorBuffer in = acts.back();
        for (const auto& s : m.shortcuts)
            if (s.to == static_cast<int>(k))
                for (std::size_t v = 0; v < in.size(); ++v) in.data[v] += acts[s.from].data[v];
        acts.push_back(naive_layer(m.layers[k], in));
    }
    return acts.back();
}

double naive_loss(const TensorBuffer& a, const TensorBuffer& b) {
    double s = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) s += (a.data[v] - b.data[v]) * (a.data[v] - b.data[v]);
    return s / static_cast<double>(a.size());
}

void set_kernel(Layer& l, std::vector<double> k, double bias) {
    l.weight.setZero();
    for (std::size_t i = 0; i < k.size(); ++i) l.weight(0, static_cast<long>(i)) = k[i];
    l.bias.setConstant(bias);
}

/// Every conv a centred delta with zero bias.
AEModel identity_model(const std::vector<int>& shape) {
    ArchitectureConfig arch;
    arch.filters = shape[0];
    arch.shortcuts = false;
    AEModel m = build_autoencoder(shape, arch, 1);
    for (auto& l : m.layers) {
        if (l.spec.kind != LayerKind::Conv) continue;
        l.weight.setZero();
        l.bias.setZero();
        const int kh = l.spec.spatialRank == 2 ? l.spec.kernel : 1, kw = l.spec.kernel;
        for (int f = 0; f < l.spec.filters; ++f) l.weight(f, (f * kh + kh / 2) * kw + kw / 2) = 1.0;
    }
    return m;
}

/// Norm-wise relative error between analytic and central-difference gradients, worst over layers.
double fd_error(AEModel m, const TensorBuffer& x, double h = 1e-5) {
    const auto fwd = ae_forward(m, x);
    const Gradients g = backward(m, x, fwd.cache);
    double worst = 0.0;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        if (m.layers[l].spec.kind != LayerKind::Conv) continue;
        auto numeric = [&](double& p) {
            const double keep = p;
            p = keep + h;
            const double up = reconstruction_loss(x, ae_forward(m, x).xBar);
            p = keep - h;
            const double dn = reconstruction_loss(x, ae_forward(m, x).xBar);
            p = keep;
            return (up - dn) / (2 * h);
        };
        Eigen::MatrixXd fw(m.layers[l].weight.rows(), m.layers[l].weight.cols());
        Eigen::VectorXd fb(m.layers[l].bias.size());
        for (long r = 0; r < fw.rows(); ++r)
            for (long c = 0; c < fw.cols(); ++c) fw(r, c) = numeric(m.layers[l].weight(r, c));
        for (long r = 0; r < fb.size(); ++r) fb(r) = numeric(m.layers[l].bias(r));
        const double ew = (fw - g.layers[l].weight).norm() / std::max(fw.norm() + g.layers[l].weight.norm(), 1e-12);
        const double eb = (fb - g.layers[l].bias).norm() / std::max(fb.norm() + g.layers[l].bias.norm(), 1e-12);
        worst = std::max({worst, ew, eb});
    }
    return worst;
}

/// Relative error of the input and parameter gradients of one layer for the loss sum(r * y).
double layer_fd_error(const Layer& layer, const TensorBuffer& x, std::mt19937_64& rng, double h = 1e-6) {
    LayerCache cache;
    const TensorBuffer y = layer_forward(layer, x, &cache);
    const TensorBuffer r = random_buffer(y.shape, rng);
    LayerGrad g;
    const TensorBuffer dx = layer_backward(layer, cache, r, &g);
    auto objective = [&](const Layer& l, const TensorBuffer& in) {
        const TensorBuffer out = layer_forward(l, in);
        double s = 0.0;
        for (std::size_t v = 0; v < out.size(); ++v) s += r.data[v] * out.data[v];
        return s;
    };
    Eigen::VectorXd num(x.size()), ana(x.size());
    TensorBuffer xp = x;
    for (std::size_t v = 0; v < x.size(); ++v) {
        xp.data[v] = x.data[v] + h;
        const double up = objective(layer, xp);
        xp.data[v] = x.data[v] - h;
        const double dn = objective(layer, xp);
        xp.data[v] = x.data[v];
        num(v) = (up - dn) / (2 * h);
        ana(v) = dx.data[v];
    }
    double err = (num - ana).norm() / std::max(num.norm() + ana.norm(), 1e-12);
    if (layer.spec.kind == LayerKind::Conv) {
        Layer lp = layer;
        Eigen::MatrixXd fw(layer.weight.rows(), layer.weight.cols());
        for (long i = 0; i < fw.rows(); ++i)
            for (long j = 0; j < fw.cols(); ++j) {
                lp.weight(i, j) = layer.weight(i, j) + h;
                const double up = objective(lp, x);
                lp.weight(i, j) = layer.weight(i, j) - h;
                const double dn = objective(lp, x);
                lp.weight(i, j) = layer.weight(i, j);
                fw(i, j) = (up - dn) / (2 * h);
            }
        err = std::max(err, (fw - g.weight).norm() / std::max(fw.norm() + g.weight.norm(), 1e-12));
    }
    return err;
}

}  // namespace

TEST_SUITE("ae") {

TEST_CASE("layer_forward examples") {
    LayerSpec cs;
    cs.kind = LayerKind::Conv;
    cs.inChannels = 1;
    cs.filters = 1;
    Layer conv(cs);
    set_kernel(conv, {1, 0, -1}, 0.0);
    CHECK(layer_forward(conv, TensorBuffer({1, 4}, {1, 2, 3, 4})).data == std::vector<double>{-2, -2, -2, 3});

    LayerSpec ps;
    ps.kind = LayerKind::MaxPool;
    CHECK(layer_forward(Layer(ps), TensorBuffer({1, 4}, {1, 3, 2, 5})).data == std::vector<double>{3, 5});
    LayerSpec rs;
    rs.kind = LayerKind::Relu;
    CHECK(layer_forward(Layer(rs), TensorBuffer({1, 2}, {-1, 2})).data == std::vector<double>{0, 2});
    LayerSpec us;
    us.kind = LayerKind::Upsample;
    CHECK(layer_forward(Layer(us), TensorBuffer({1, 2}, {7, 8})).data == std::vector<double>{7, 7, 8, 8});

    CHECK_THROWS_AS(layer_forward(conv, TensorBuffer({2, 4})), DomainError);
    CHECK_THROWS_AS(layer_forward(Layer(ps), TensorBuffer({1, 5})), DomainError);
    LayerSpec even = cs;
    even.kernel = 2;
    CHECK_THROWS_AS(Layer{even}, DomainError);
}

TEST_CASE("every layer matches the nested-loop reference") {
    std::mt19937_64 rng(17);
    for (int rank : {1, 2}) {
        const std::vector<int> shape = rank == 1 ? std::vector<int>{3, 8} : std::vector<int>{2, 4, 6};
        const TensorBuffer x = random_buffer(shape, rng);
        for (LayerKind k : {LayerKind::Conv, LayerKind::Relu, LayerKind::MaxPool, LayerKind::Upsample}) {
            LayerSpec s;
            s.kind = k;
            s.spatialRank = rank;
            s.inChannels = shape[0];
            s.filters = 4;
            s.kernel = rank == 1 ? 5 : 3;
            Layer l(s);
            l.init(rng);
            if (k == LayerKind::Conv)
                for (long f = 0; f < l.bias.size(); ++f) l.bias(f) = 0.1 * (f + 1);
            const TensorBuffer a = layer_forward(l, x), b = naive_layer(l, x);
            REQUIRE(a.shape == b.shape);
            for (std::size_t v = 0; v < a.size(); ++v) CHECK(a.data[v] == doctest::Approx(b.data[v]).epsilon(1e-13));
        }
    }
}

TEST_CASE("forward pass hand trace on a 4-length toy model") {
    ArchitectureConfig arch;
    arch.filters = 1;
    AEModel m = build_autoencoder({1, 4}, arch, 3);
    set_kernel(m.layers[0], {0, 1, 0}, 0.5);
    set_kernel(m.layers[3], {0, 1, 0}, -1.0);
    set_kernel(m.layers[7], {1, 1, 1}, 0.0);
    set_kernel(m.layers[10], {0, 1, 0}, 0.25);
    const TensorBuffer x({1, 4}, {1, 2, 3, 4});
    // conv0 -> (1.5, 2.5, 3.5, 4.5); pool -> (2.5, 4.5); conv1 -> (1.5, 3.5); pool -> (3.5)
    // upsample (3.5, 3.5) + shortcut (2.5, 4.5) -> conv2 (14, 14); upsample + shortcut (1.5 .. 4.5) + 0.25
    const auto with = ae_forward(m, x);
    CHECK(with.xBar.data == std::vector<double>{15.75, 16.75, 17.75, 18.75});
    CHECK(latent(m, x).data == std::vector<double>{3.5});
    m.shortcuts.clear();
    CHECK(ae_forward(m, x).xBar.data == std::vector<double>{7.25, 7.25, 7.25, 7.25});
}

TEST_CASE("identity model reproduces block-constant inputs") {
    for (const auto& shape : {std::vector<int>{1, 16}, std::vector<int>{2, 8, 8}}) {
        const AEModel m = identity_model(shape);
        TensorBuffer x(shape);
        for (std::size_t v = 0; v < x.size(); ++v) {
            const int w = static_cast<int>(v % shape.back()), row = static_cast<int>(v / shape.back());
            x.data[v] = 1.0 + (w / 4) + 0.5 * ((row % (shape.size() == 3 ? shape[1] : 1)) / 4) + (v >= x.size() / 2);
        }
        const auto f = ae_forward(m, x);
        CHECK(f.xBar.data == x.data);
        const Gradients g = backward(m, x, f.cache);
        CHECK(g.loss == 0.0);
        for (const auto& lg : g.layers) {
            if (lg.weight.size()) CHECK(lg.weight.cwiseAbs().maxCoeff() <= 1e-12);
            if (lg.bias.size()) CHECK(lg.bias.cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("architecture arithmetic and shapes") {
    std::mt19937_64 rng(1);
    for (const auto& shape : {std::vector<int>{1, 100}, std::vector<int>{1, 64}, std::vector<int>{4, 64},
                              std::vector<int>{4, 8, 8}, std::vector<int>{1, 100, 100}}) {
        const AEModel m = build_autoencoder(shape, {}, 5);
        auto lat = shape;
        lat[0] = 64;
        for (std::size_t k = 1; k < lat.size(); ++k) lat[k] /= 4;
        CHECK(m.latent_shape() == lat);
        if (shape.size() == 2 || shape[1] <= 8) {
            const TensorBuffer x = random_buffer(shape, rng);
            CHECK(ae_forward(m, x).xBar.shape == shape);
        }
    }
    CHECK_THROWS_AS(build_autoencoder({1, 10}, {}, 1), DomainError);
    AEModel bad = build_autoencoder({1, 8}, {}, 1);
    bad.shortcuts.push_back({1, 7});
    CHECK_THROWS_AS(bad.validate(), DomainError);
    const AEModel m = build_autoencoder({1, 8}, {}, 1);
    CHECK_THROWS_AS(ae_forward(m, TensorBuffer({1, 12})), DomainError);
}

TEST_CASE("shortcuts change outputs but not shapes") {
    std::mt19937_64 rng(2);
    ArchitectureConfig on, off;
    off.shortcuts = false;
    const AEModel a = build_autoencoder({2, 16}, on, 9), b = build_autoencoder({2, 16}, off, 9);
    const TensorBuffer x = random_buffer({2, 16}, rng);
    const auto ya = ae_forward(a, x).xBar, yb = ae_forward(b, x).xBar;
    CHECK(ya.shape == yb.shape);
    CHECK(ya.data != yb.data);
}

TEST_CASE("forward pass matches the reference on random models") {
    std::mt19937_64 rng(4);
    for (const auto& shape : {std::vector<int>{3, 12}, std::vector<int>{2, 8, 4}}) {
        ArchitectureConfig arch;
        arch.filters = 5;
        const AEModel m = build_autoencoder(shape, arch, 21);
        const TensorBuffer x = random_buffer(shape, rng);
        const auto a = ae_forward(m, x).xBar, b = naive_forward(m, x);
        for (std::size_t v = 0; v < a.size(); ++v) CHECK(a.data[v] == doctest::Approx(b.data[v]).epsilon(1e-12));
    }
}

TEST_CASE("reconstruction loss") {
    CHECK(reconstruction_loss(TensorBuffer({1, 2}, {1, 0}), TensorBuffer({1, 2}, {0, 0})) == 0.5);
    const TensorBuffer z({1, 3}, {1, 2, 3});
    CHECK(reconstruction_loss(z, z) == 0.0);
    std::mt19937_64 rng(8);
    const TensorBuffer a = random_buffer({3, 5, 4}, rng), b = random_buffer({3, 5, 4}, rng);
    CHECK(reconstruction_loss(a, b) == doctest::Approx(naive_loss(a, b)).epsilon(1e-12));
    CHECK_THROWS_AS(reconstruction_loss(a, z), DomainError);
}

TEST_CASE("bias gradient of the output conv is the summed residual") {
    std::mt19937_64 rng(6);
    ArchitectureConfig arch;
    arch.filters = 3;
    const AEModel m = build_autoencoder({2, 8}, arch, 4);
    const TensorBuffer x = random_buffer({2, 8}, rng);
    const auto f = ae_forward(m, x);
    const Gradients g = backward(m, x, f.cache);
    for (int c = 0; c < 2; ++c) {
        double s = 0.0;
        for (int w = 0; w < 8; ++w) s += 2.0 / 16.0 * (f.xBar.data[c * 8 + w] - x.data[c * 8 + w]);
        CHECK(g.layers.back().bias(c) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("each layer kind passes a finite-difference check") {
    std::mt19937_64 rng(12);
    for (int rank : {1, 2})
        for (LayerKind k : {LayerKind::Conv, LayerKind::Relu, LayerKind::MaxPool, LayerKind::Upsample}) {
            LayerSpec s;
            s.kind = k;
            s.spatialRank = rank;
            s.inChannels = 2;
            s.filters = 3;
            Layer l(s);
            l.init(rng);
            const TensorBuffer x = random_buffer(rank == 1 ? std::vector<int>{2, 8} : std::vector<int>{2, 4, 6}, rng);
            CHECK(layer_fd_error(l, x, rng) < 1e-6);
        }
}

TEST_CASE("model gradients agree with finite differences on random shapes") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(seed);
        const int rank = seed % 2 ? 1 : 2;
        std::uniform_int_distribution<int> ch(1, 3), ext(1, 3), filt(2, 4);
        std::vector<int> shape{ch(rng), 4 * ext(rng)};
        if (rank == 2) shape.push_back(4 * ext(rng));
        ArchitectureConfig arch;
        arch.filters = filt(rng);
        arch.kernel = seed % 3 == 0 ? 5 : 3;
        arch.shortcuts = (seed / 2) % 2 == 0;
        AEModel m = build_autoencoder(shape, arch, seed);
        for (auto& l : m.layers)
            for (long f = 0; f < l.bias.size(); ++f) l.bias(f) = 0.05 * (f % 3) - 0.02;
        const TensorBuffer x = random_buffer(shape, rng, 0.0, 1.0);
        const double err = fd_error(m, x);
        INFO("seed " << seed << " shape " << x.shape_string() << " shortcuts " << arch.shortcuts);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("stale caches are rejected") {
    std::mt19937_64 rng(1);
    AEModel m = build_autoencoder({1, 8}, {}, 1);
    const TensorBuffer x = random_buffer({1, 8}, rng);
    const auto f = ae_forward(m, x);
    ++m.version;
    CHECK_THROWS_AS(backward(m, x, f.cache), InvariantError);
    const AEModel other = build_autoencoder({1, 8}, {}, 1);
    CHECK_THROWS_AS(backward(other, x, ae_forward(m, x).cache), InvariantError);
    LayerCache empty;
    CHECK_THROWS_AS(layer_backward(m.layers[1], empty, x, nullptr), InvariantError);
}

TEST_CASE("training: overfit, stability, determinism, order independence") {
    std::mt19937_64 rng(5);
    // one 100-length spectrum-like sample
    TensorBuffer spec({1, 100});
    double norm = 0.0;
    for (int k = 0; k < 40; ++k) norm += std::exp(-0.3 * k) * std::exp(-0.3 * k);
    for (int k = 0; k < 40; ++k) spec.data[k] = std::exp(-0.3 * k) / std::sqrt(norm);
    TrainConfig cfg;
    cfg.epochs = 500;
    const auto r = train(build_autoencoder({1, 100}, {}, 1), {spec}, cfg);
    CHECK(r.lossCurve.size() <= 500);
    CHECK(*std::min_element(r.lossCurve.begin(), r.lossCurve.end()) < 1e-4);
    CHECK(mean_loss(r.model, {spec}) < 1e-4);

    std::vector<TensorBuffer> data;
    for (int k = 0; k < 64; ++k) data.push_back(random_buffer({1, 16}, rng, 0.0, 1.0));
    ArchitectureConfig small;
    small.filters = 8;
    TrainConfig c2;
    c2.epochs = 50;
    const AEModel init = build_autoencoder({1, 16}, small, 2);
    const auto a = train(init, data, c2);
    CHECK(a.lossCurve.size() == 50);
    for (double l : a.lossCurve) CHECK(std::isfinite(l));
    const auto b = train(init, data, c2);
    CHECK(a.lossCurve == b.lossCurve);
    std::vector<TensorBuffer> shuffled = data;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto c = train(init, shuffled, c2);
    CHECK(a.lossCurve == c.lossCurve);
    c2.seed = 99;
    CHECK(train(init, data, c2).lossCurve != a.lossCurve);

    CHECK_THROWS_AS(train(init, {}, c2), DomainError);
    CHECK_THROWS_AS(train(init, {TensorBuffer({1, 8})}, c2), DomainError);
    TrainConfig badCfg;
    badCfg.learningRate = 0.0;
    CHECK_THROWS_AS(badCfg.validate(), DomainError);
}

TEST_CASE("training flags divergence") {
    std::mt19937_64 rng(7);
    std::vector<TensorBuffer> data;
    for (int k = 0; k < 8; ++k) data.push_back(random_buffer({1, 8}, rng, 0.0, 1.0));
    ArchitectureConfig arch;
    arch.filters = 8;
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.learningRate = 50.0;
    const auto r = train(build_autoencoder({1, 8}, arch, 3), data, cfg);
    MESSAGE("losses " << r.initialLoss << " -> " << (r.lossCurve.empty() ? 0.0 : r.lossCurve.back()));
    if (r.diverged) CHECK(r.lossCurve.back() > 10 * r.initialLoss);
    CHECK(r.lossCurve.size() <= 30);
}

TEST_CASE("checkpoint round trip") {
    std::mt19937_64 rng(3);
    for (const auto& shape : {std::vector<int>{2, 12}, std::vector<int>{3, 4, 8}}) {
        ArchitectureConfig arch;
        arch.filters = 6;
        AEModel m = build_autoencoder(shape, arch, 8);
        const auto bytes = serialize_model(m);
        CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "AEMODEL1");
        const AEModel back = deserialize_model(bytes);
        const TensorBuffer x = random_buffer(shape, rng);
        CHECK(ae_forward(back, x).xBar.data == ae_forward(m, x).xBar.data);
        CHECK(back.latentIndex == m.latentIndex);
        CHECK(serialize_model(back) == bytes);

        auto broken = bytes;
        broken[0] = 'X';
        CHECK_THROWS_AS(deserialize_model(broken), RecordError);
        auto cut = bytes;
        cut.resize(cut.size() - 5);
        CHECK_THROWS_AS(deserialize_model(cut), RecordError);
        auto extra = bytes;
        extra.push_back(0);
        CHECK_THROWS_AS(deserialize_model(extra), RecordError);
    }
}

}  // TEST_SUITE
