#pragma once

#include "phasescout/model/ebh.hpp"
#include "phasescout/tn/mps.hpp"

#include <cstdint>
#include <vector>

namespace phasescout::dmrg {

struct DmrgConfig {
    int chiMax = 50;
    int maxSweeps = 30;
    /// Absolute per-sweep energy change that counts as converged; <= 0 means 1e-9 * L.
    double energyTol = 0.0;
    int lanczosIters = 40;
    double lanczosTol = 1e-10;
    /// Density-matrix mixer: strength * decay^sweep for the first `mixerSweeps` sweeps.
    double mixerStrength = 0.02;
    double mixerDecay = 0.5;
    int mixerSweeps = 5;
    double svMin = 1e-12;
    std::uint64_t seed = 1;

    void validate() const;
    double energy_tol(int L) const { return energyTol > 0.0 ? energyTol : 1e-9 * L; }
    double mixer_at(int sweep) const;
};

struct ConvergenceReport {
    std::vector<double> energyPerSweep;
    std::vector<double> energyPerHalfSweep;
    double finalEnergy = 0.0;
    double discardedWeightMax = 0.0;  ///< largest truncation in the final sweep
    bool converged = false;
    int sweepsUsed = 0;
    int lanczosUnconverged = 0;  ///< eigensolves that hit the iteration cap
};

struct DmrgResult {
    tn::MPSState state;
    ConvergenceReport report;
};

/// Starting occupations in the N-particle sector: |1...1> when V <= U and
/// |2020...> otherwise, then particles added at the edges or removed from the
/// middle until the total is N.
std::vector<int> initial_occupations(const model::ModelParams& params, int N);

/// Two-site finite DMRG in the fixed targetN sector. The returned state is canonical.
DmrgResult run_dmrg(const model::ModelParams& params, const DmrgConfig& config, int targetN,
                    const tn::MPSState* initial = nullptr);

}  // namespace phasescout::dmrg
