#pragma once

#include "phasescout/tn/mps.hpp"

#include <Eigen/Dense>

#include <map>
#include <vector>

namespace phasescout::tn {

/// One nonzero entry W[from][to] of a site's operator-valued MPO matrix. `op` only
/// connects sigma -> sigma + shift, so every entry carries a definite charge.
struct MpoTerm {
    int from = 0;
    int to = 0;
    int shift = 0;
    Eigen::MatrixXd op;  ///< op(sigma', sigma) = <sigma'|op|sigma>
};

/// Matrix product operator with bond dimension D. H = e_0^T W_0 ... W_{L-1} e_{D-1}.
/// Channel c carries charge `channelCharge[c]` (bra minus ket particle number
/// accumulated to the left of the bond).
struct Mpo {
    int L = 0;
    int d = 0;
    int D = 0;
    std::vector<int> channelCharge;
    std::vector<std::vector<MpoTerm>> sites;
};

/// MPO environment on one bond: per channel, matrices keyed by the ket charge
/// q, shaped (dim(q + channelCharge) x dim(q)).
struct Environment {
    std::vector<std::map<int, Eigen::MatrixXd>> channels;
};

/// Per-leg degeneracy lookup used by environment updates.
int sector_dim(const ChargeLeg& leg, int charge);

Environment left_boundary(const Mpo& mpo);
Environment right_boundary(const Mpo& mpo, int totalParticles);

/// Grow a left environment across `site` (legs vL, sigma, vR).
Environment extend_left(const Environment& env, const BlockTensor& site, const Mpo& mpo, int index);
/// Grow a right environment across `site`.
Environment extend_right(const Environment& env, const BlockTensor& site, const Mpo& mpo, int index);

/// <psi|H|psi> by contracting all sites from the left. The state need not be canonical.
double mpo_expectation(const Mpo& mpo, const MPSState& state);

}  // namespace phasescout::tn
