#include "phasescout/pipeline/discover.hpp"

#include "phasescout/errors.hpp"

namespace phasescout::pipeline {

std::vector<ae::TensorBuffer> extract_all(const LoadedCache& cache, InputKind kind, int multiple) {
    std::vector<ae::TensorBuffer> out(cache.records.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        if (cache.records[k]) out[k] = extract_input(*cache.records[k], kind, multiple);
    return out;
}

RegionTraining train_region(const LoadedCache& cache, const std::vector<ae::TensorBuffer>& inputs,
                            const CellMask& region, const ae::ArchitectureConfig& arch, const ae::TrainConfig& cfg,
                            std::uint64_t initSeed) {
    if (region.size() != inputs.size() || region.size() != cache.records.size())
        throw DomainError("train_region: region does not match the grid");
    RegionTraining t;
    std::vector<ae::TensorBuffer> data;
    for (std::size_t k = 0; k < region.size(); ++k) {
        if (!region[k]) continue;
        const auto& r = cache.at(static_cast<int>(k));
        if (!r.convergence.converged) {
            ++t.skippedFlagged;
            continue;
        }
        data.push_back(inputs[k]);
    }
    if (data.empty())
        throw RefusalError(t.skippedFlagged ? "train_region: region holds only non-converged records"
                                            : "train_region: empty region");
    t.samples = static_cast<int>(data.size());
    const ae::AEModel model = ae::build_autoencoder(data.front().shape, arch, initSeed);
    t.result = ae::train(model, data, cfg);
    return t;
}

std::uint64_t iteration_seed(const DiscoverConfig& cfg, int iteration) {
    return cfg.train.seed + 1000003ull * static_cast<std::uint64_t>(iteration);
}

DiscoverResult discover_phases(const SweepGrid& grid, const LoadedCache& cache, const DiscoverConfig& cfg,
                               const IterationCallback& onIteration) {
    if (!cache.complete()) throw RefusalError("discover_phases: cache is incomplete");
    if (cfg.maxIterations < 1) throw DomainError("discover_phases: max iterations must be positive");
    const auto inputs = extract_all(cache, cfg.kind, cfg.arch.poolSize * cfg.arch.poolSize);

    DiscoverResult out;
    out.labeling = PhaseLabeling(grid.cells());
    CellMask region = origin_block(grid, cfg.firstBlock);
    std::vector<CellMask> seen;
    for (int it = 0; it < cfg.maxIterations; ++it) {
        for (const auto& s : seen)
            if (s == region) {
                out.oscillation = true;
                out.diagnostic = "proposed region repeats an earlier training region; stopping";
                return out;
            }
        seen.push_back(region);

        IterationResult r;
        r.iteration = it + 1;
        r.region = region;
        ae::TrainConfig tc = cfg.train;
        tc.seed = iteration_seed(cfg, it);
        r.training = train_region(cache, inputs, region, cfg.arch, tc, tc.seed);
        r.lossMap = evaluate_loss_map(r.training.result.model, grid, inputs, region, cfg.kind, cfg.jobs);
        r.threshold = anomaly_threshold(r.lossMap);
        assign_labels(out.labeling, r.lossMap, r.threshold, it + 1, it + 1);
        r.labelsAfter = out.labeling;
        if (out.labeling.unassigned() > 0)
            r.next = propose_region(r.lossMap, out.labeling, r.threshold, cfg.minRegion);
        if (onIteration) onIteration(r);
        out.iterations.push_back(r);
        if (r.next.empty()) break;
        region = r.next.region;
    }
    return out;
}

}  // namespace phasescout::pipeline
