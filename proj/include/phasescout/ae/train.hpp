#pragma once

#include "phasescout/ae/model.hpp"

#include <cstdint>
#include <vector>

namespace phasescout::ae {

struct TrainConfig {
    int epochs = 200;
    int batchSize = 16;
    double learningRate = 1e-3;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct TrainResult {
    AEModel model;                  ///< parameters of the epoch with the lowest loss
    std::vector<double> lossCurve;  ///< mean training loss after every epoch
    double initialLoss = 0.0;       ///< mean loss before the first update
    int bestEpoch = -1;             ///< -1 when no epoch improved on the initial model
    bool diverged = false;          ///< stopped because loss exceeded 10x the initial loss
};

/// Mean reconstruction loss over a dataset.
double mean_loss(const AEModel& model, const std::vector<TensorBuffer>& data);

/// Adam on mini-batches. Samples are put in a canonical order and shuffled with
/// a seeded Fisher-Yates pass each epoch, so the result depends only on the seed
/// and the set of samples.
TrainResult train(const AEModel& model, const std::vector<TensorBuffer>& dataset, const TrainConfig& config);

}  // namespace phasescout::ae
