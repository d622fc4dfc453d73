#pragma once

#include "phasescout/model/ebh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace phasescout::dmrg {

/// Fock states of L sites with occupations 0..nMax summing to N, in
/// lexicographic order.
struct SectorBasis {
    int L = 0;
    int nMax = 0;
    int N = 0;
    std::vector<std::vector<int>> states;

    static SectorBasis build(int L, int nMax, int N, std::size_t maxDim = 200000);
    std::size_t dim() const { return states.size(); }
    /// Index of an occupation vector, or -1 when it is outside the sector.
    long index(const std::vector<int>& occ) const;

private:
    std::unordered_map<std::uint64_t, long> lookup_;
    std::uint64_t code(const std::vector<int>& occ) const;
};

Eigen::SparseMatrix<double> sector_hamiltonian(const model::ModelParams& params, const SectorBasis& basis);

struct ExactResult {
    double energy = 0.0;
    Eigen::VectorXd state;
    SectorBasis basis;
};

/// Lowest eigenpair of the open-chain Hamiltonian in the N-particle sector.
/// Refuses (RefusalError) when the sector dimension exceeds `maxDim`.
ExactResult exact_diag_oracle(const model::ModelParams& params, int N, std::size_t maxDim = 200000);

}  // namespace phasescout::dmrg
