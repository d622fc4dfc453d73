#pragma once

#include "phasescout/ae/model.hpp"
#include "phasescout/ae/train.hpp"
#include "phasescout/pipeline/cache.hpp"
#include "phasescout/pipeline/lossmap.hpp"

#include <functional>
#include <string>
#include <vector>

namespace phasescout::pipeline {

/// Inputs of every cell in grid index order; cells without a record are left empty.
std::vector<ae::TensorBuffer> extract_all(const LoadedCache& cache, InputKind kind, int multiple = 4);

struct RegionTraining {
    ae::TrainResult result;
    int samples = 0;        ///< converged region cells used for training
    int skippedFlagged = 0; ///< region cells left out because their DMRG did not converge
};

/// Train a fresh autoencoder on the converged cells of `region`.
/// Throws RefusalError when the region is empty or holds only flagged records.
RegionTraining train_region(const LoadedCache& cache, const std::vector<ae::TensorBuffer>& inputs,
                            const CellMask& region, const ae::ArchitectureConfig& arch, const ae::TrainConfig& cfg,
                            std::uint64_t initSeed);

struct DiscoverConfig {
    InputKind kind = InputKind::ES;
    ae::ArchitectureConfig arch;
    ae::TrainConfig train;
    int maxIterations = 4;
    int firstBlock = 3;     ///< side of the first training block at the grid origin
    int minRegion = 1;      ///< smallest anomalous component considered for a new region
    int jobs = 1;
};

struct IterationResult {
    int iteration = 0;  ///< 1-based; also the phase id assigned in this iteration
    CellMask region;
    RegionTraining training;
    LossMap lossMap;
    double threshold = 0.0;
    PhaseLabeling labelsAfter;
    RegionProposal next;
};

struct DiscoverResult {
    PhaseLabeling labeling;
    std::vector<IterationResult> iterations;
    bool oscillation = false;  ///< stopped because a proposed region repeated an earlier one
    std::string diagnostic;
};

using IterationCallback = std::function<void(const IterationResult&)>;

/// Train, evaluate, label, propose; repeat until no anomalous cells remain or maxIterations is hit.
/// Requires a complete cache.
DiscoverResult discover_phases(const SweepGrid& grid, const LoadedCache& cache, const DiscoverConfig& cfg,
                               const IterationCallback& onIteration = {});

/// Seed used to initialize and train the model of a given 0-based iteration.
std::uint64_t iteration_seed(const DiscoverConfig& cfg, int iteration);

}  // namespace phasescout::pipeline
