#pragma once

#include "phasescout/tn/block_tensor.hpp"
#include "phasescout/tn/svd.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace phasescout::tn {

/// Finite open-boundary MPS in Vidal form.
///
/// Site tensors are stored right-canonical, B_i = Gamma_i Lambda_i, with legs
/// (left bond In, physical In, right bond Out). The left bond of site i carries
/// the number of particles on sites 0..i-1, so the last bond carries N.
/// `bonds[b - 1]` holds Lambda on the cut between site b-1 and site b, b = 1..L-1.
///
/// When `canonical` is false only `sites` is meaningful: the state is the plain
/// product of the site tensors and `bonds` may be stale.
struct MPSState {
    int L = 0;
    int d = 0;
    int chiMax = 0;
    int totalParticles = 0;
    std::vector<BlockTensor> sites;
    std::vector<Bond> bonds;
    bool canonical = false;

    /// Gamma_i = B_i Lambda_i^{-1}.
    BlockTensor gamma(int site) const;
    /// Lambda on the left of `site` (trivial for site 0).
    Bond left_bond(int site) const;
    /// Lambda on the right of `site` (trivial for the last site).
    Bond right_bond(int site) const;
    int max_bond_dim() const;
};

/// Theta = Lambda^{[i-1]} Gamma_i Lambda^{[i]} as a dense (chiLeft, d, chiRight) array,
/// row-major, virtual indices ordered by (charge, descending value).
struct ThetaTensor {
    int site = 0;
    int chiLeft = 0;
    int d = 0;
    int chiRight = 0;
    std::vector<double> data;

    double at(int a, int sigma, int b) const {
        return data[(static_cast<std::size_t>(a) * d + sigma) * chiRight + b];
    }
};

MPSState product_state(std::span<const int> occupations, int d, int chiMax);

/// Random (non-canonical) state in the N-particle sector with bond sectors of
/// dimension up to `chi`. Intended for tests and oracle comparisons.
MPSState random_state(int L, int d, int N, int chi, std::uint64_t seed);

/// Restore the Vidal gauge: left sweep of QR factorizations, then a right-to-left
/// SVD sweep that records exact Schmidt values. Truncates to state.chiMax.
MPSState canonicalize(const MPSState& state, double svMin = 1e-12);

SchmidtSpectrum schmidt_spectrum(const MPSState& state, int bond);
ThetaTensor theta_tensor(const MPSState& state, int site);

/// <O_site> from the single-site pseudo-wavefunction. `op(row, col)` = <row|O|col>.
double expect_local(const MPSState& state, int site, const Eigen::MatrixXd& op);

/// <A_i S_{i+1} ... S_{j-1} B_j> for i < j; S defaults to the identity.
double correlate_pair(const MPSState& state, int i, int j, const Eigen::MatrixXd& opA,
                      const Eigen::MatrixXd& opB,
                      const std::optional<Eigen::MatrixXd>& stringOp = std::nullopt);

/// |<a|b>|.
double overlap(const MPSState& a, const MPSState& b);

/// Charge-homogeneous pieces of a local operator: op = sum_s piece_s where piece_s
/// raises the occupation by s. Each piece is a rank-2 BlockTensor (bra In, ket Out).
std::vector<BlockTensor> operator_pieces(const Eigen::MatrixXd& op);

/// Left environment helpers used by correlators: env legs are (bra In, ket Out).
BlockTensor left_boundary_env(const MPSState& state, int site);
BlockTensor transfer_step(const BlockTensor& env, const BlockTensor& site, const BlockTensor* op);

}  // namespace phasescout::tn
