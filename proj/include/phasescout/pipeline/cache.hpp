#pragma once

#include "phasescout/pipeline/grid.hpp"
#include "phasescout/pipeline/record.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace phasescout::pipeline {

struct CellStatus {
    int iu = 0, iv = 0;
    bool cached = false;     ///< a valid record was already present
    bool replaced = false;   ///< an unreadable or stale record was overwritten
    bool converged = false;
    double energy = 0.0;
};

struct SweepSummary {
    int computed = 0;
    int cached = 0;
    int replaced = 0;
    std::vector<std::pair<int, int>> flagged;  ///< cells whose DMRG did not converge
};

using CellCallback = std::function<void(const CellStatus&)>;

/// True when the record was produced for exactly this grid cell, model and DMRG configuration.
bool record_matches(const GroundStateRecord& r, const SweepGrid& grid, int iu, int iv);

/// Ground state for one cell, computed from scratch.
GroundStateRecord compute_cell(const SweepGrid& grid, int iu, int iv);

/// Fill `store` with one record per cell, skipping cells that already hold a
/// valid matching record, and rewrite `store/manifest.txt`. The callback is
/// invoked once per cell, serialized.
SweepSummary sweep_groundstates(const SweepGrid& grid, const std::string& store, int jobs = 1,
                                const CellCallback& onCell = {});

struct LoadedCache {
    std::vector<std::optional<GroundStateRecord>> records;  ///< grid index order
    std::vector<std::pair<int, int>> missing;               ///< absent, corrupt or stale cells

    bool complete() const { return missing.empty(); }
    const GroundStateRecord& at(int index) const;
};

LoadedCache load_cache(const SweepGrid& grid, const std::string& store);

std::string manifest_path(const std::string& store);

}  // namespace phasescout::pipeline
