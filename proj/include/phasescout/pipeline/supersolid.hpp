#pragma once

#include "phasescout/pipeline/cache.hpp"

#include <vector>

namespace phasescout::pipeline {

/// A cell is a supersolid candidate when the long-distance superfluid
/// correlator, the density-wave order parameter and the structure factor all
/// exceed these values.
struct SupersolidThresholds {
    double superfluid = 0.1;
    double densityWave = 0.05;
    double structure = 0.02;
};

struct SupersolidRow {
    int iu = 0, iv = 0;
    double U = 0.0, V = 0.0;
    double oSF = 0.0, oDW = 0.0, S = 0.0;  ///< double-sum order parameters and structure factor
    double rSF = 0.0, rDW = 0.0;           ///< long-distance correlator values
    bool converged = false;
    bool candidate = false;
};

std::vector<SupersolidRow> supersolid_probe(const SweepGrid& grid, const LoadedCache& cache, const CellMask& region,
                                            const SupersolidThresholds& thresholds = {});

struct HoleRow {
    int holes = 0;
    int N = 0;
    double energy = 0.0;
    double S = 0.0;
    double oSF = 0.0, oDW = 0.0;
    bool converged = false;
};

/// Ground states at N = L - h for h = 0..maxHoles, each measured for S, O_SF, O_DW.
std::vector<HoleRow> hole_study(const model::ModelParams& params, const dmrg::DmrgConfig& config, int maxHoles = 4,
                                int jobs = 1);

}  // namespace phasescout::pipeline
