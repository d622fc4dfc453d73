#include "phasescout/ae/train.hpp"

#include "phasescout/errors.hpp"
#include "phasescout/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace phasescout::ae {

void TrainConfig::validate() const {
    if (epochs < 1) throw DomainError("TrainConfig: epochs must be positive");
    if (batchSize < 1) throw DomainError("TrainConfig: batch size must be positive");
    if (!(learningRate > 0.0)) throw DomainError("TrainConfig: learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw DomainError("TrainConfig: Adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw DomainError("TrainConfig: epsilon must be positive");
}

double mean_loss(const AEModel& model, const std::vector<TensorBuffer>& data) {
    if (data.empty()) throw DomainError("mean_loss: empty dataset");
    double s = 0.0;
    for (const auto& x : data) s += reconstruction_loss(x, ae_forward(model, x).xBar);
    return s / static_cast<double>(data.size());
}

namespace {

struct AdamState {
    std::vector<Eigen::MatrixXd> mW, vW;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;

    explicit AdamState(const AEModel& m) {
        for (const auto& l : m.layers) {
            mW.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
            vW.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
            mb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
            vb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
        }
    }
};

template <class P, class G>
void adam_update(P& param, const G& grad, P& m, P& v, const TrainConfig& c, double corr1, double corr2) {
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    param.array() -= c.learningRate * (m.array() / corr1) / ((v.array() / corr2).sqrt() + c.epsilon);
}

}  // namespace

TrainResult train(const AEModel& initial, const std::vector<TensorBuffer>& dataset, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw DomainError("train: empty dataset");
    initial.validate();
    for (const auto& x : dataset)
        if (x.shape != initial.inputShape) throw DomainError("train: dataset shape does not match the model");

    std::vector<const TensorBuffer*> data;
    for (const auto& x : dataset) data.push_back(&x);
    std::sort(data.begin(), data.end(), [](const TensorBuffer* a, const TensorBuffer* b) { return a->data < b->data; });
    std::vector<TensorBuffer> ordered;
    for (const auto* p : data) ordered.push_back(*p);

    TrainResult r;
    AEModel model = initial;
    r.initialLoss = mean_loss(model, ordered);
    r.model = model;
    double best = r.initialLoss;
    AdamState adam(model);
    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(ordered.size());
    const int n = static_cast<int>(ordered.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        for (int k = n - 1; k > 0; --k) std::swap(order[k], order[uniform_index(rng, static_cast<std::uint64_t>(k) + 1)]);
        for (int start = 0; start < n; start += cfg.batchSize) {
            const int stop = std::min(n, start + cfg.batchSize);
            std::vector<LayerGrad> sum(model.layers.size());
            for (int b = start; b < stop; ++b) {
                const TensorBuffer& x = ordered[order[b]];
                const auto fwd = ae_forward(model, x);
                const Gradients g = backward(model, x, fwd.cache);
                for (std::size_t l = 0; l < sum.size(); ++l) {
                    if (model.layers[l].spec.kind != LayerKind::Conv) continue;
                    if (sum[l].weight.size() == 0) {
                        sum[l] = g.layers[l];
                    } else {
                        sum[l].weight += g.layers[l].weight;
                        sum[l].bias += g.layers[l].bias;
                    }
                }
            }
            const double inv = 1.0 / (stop - start);
            ++adam.step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
            for (std::size_t l = 0; l < sum.size(); ++l) {
                Layer& layer = model.layers[l];
                if (layer.spec.kind != LayerKind::Conv) continue;
                const Eigen::MatrixXd gw = sum[l].weight * inv;
                const Eigen::VectorXd gb = sum[l].bias * inv;
                adam_update(layer.weight, gw, adam.mW[l], adam.vW[l], cfg, c1, c2);
                adam_update(layer.bias, gb, adam.mb[l], adam.vb[l], cfg, c1, c2);
            }
            ++model.version;
        }
        const double loss = mean_loss(model, ordered);
        r.lossCurve.push_back(loss);
        if (!std::isfinite(loss) || (r.initialLoss > 0.0 && loss > 10.0 * r.initialLoss)) {
            r.diverged = true;
            break;
        }
        if (loss < best) {
            best = loss;
            r.bestEpoch = epoch;
            r.model = model;
        }
    }
    return r;
}

}  // namespace phasescout::ae
