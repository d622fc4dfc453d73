#pragma once

#include "phasescout/tn/block_tensor.hpp"

#include <vector>

namespace phasescout::tn {

/// Schmidt values of one bipartition, sorted descending, with the particle
/// number of the left half that each value belongs to.
struct SchmidtSpectrum {
    std::vector<double> values;
    std::vector<int> sectorLabels;

    /// Throws InvariantError unless sorted, non-negative and sum of squares is 1 (1e-10).
    void validate() const;
    std::size_t size() const { return values.size(); }
};

/// A virtual bond in Vidal form: its charge leg plus the singular values of
/// every sector, each sector's values descending (aligned with the leg order).
struct Bond {
    ChargeLeg leg;
    std::vector<std::vector<double>> values;

    static Bond trivial(int charge);
    SchmidtSpectrum spectrum() const;
};

struct TruncatedSplit {
    BlockTensor left;   ///< row legs + new bond (Out); isometric
    Bond bond;          ///< kept singular values, renormalized
    BlockTensor right;  ///< new bond (In) + column legs; isometric rows
    double discardedWeight = 0.0;

    SchmidtSpectrum spectrum() const { return bond.spectrum(); }
};

/// One singular value (or density-matrix weight) competing for a slot.
struct Candidate {
    double value;
    int charge;
    int intra;
};

/// Deterministic global truncation: descending value, ties by (charge, intra).
/// Keeps at most `chiMax`, never values with value < cutoff, and at least one.
std::vector<Candidate> select_kept(std::vector<Candidate> all, int chiMax, double cutoff);

/// Splits `theta` between its first `rowLegs` legs and the rest. Keeps the
/// globally largest singular values across charge sectors, at most chiMax, and
/// drops any below svMin (relative to the norm of theta).
TruncatedSplit block_svd_truncate(const BlockTensor& theta, int rowLegs, int chiMax,
                                  double svMin = 1e-12);

/// S = -sum lambda^2 log2 lambda^2 with 0 log 0 = 0. Input must be normalized.
double entanglement_entropy(const SchmidtSpectrum& spectrum);

}  // namespace phasescout::tn
