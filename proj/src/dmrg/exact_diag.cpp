#include "phasescout/dmrg/exact_diag.hpp"

#include "phasescout/dmrg/lanczos.hpp"
#include "phasescout/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace phasescout::dmrg {

namespace {

void enumerate(int site, int left, std::vector<int>& occ, const SectorBasis& b,
               std::vector<std::vector<int>>& out, std::size_t maxDim) {
    if (site == b.L) {
        if (left == 0) {
            if (out.size() >= maxDim) throw RefusalError("exact_diag: sector dimension exceeds limit");
            out.push_back(occ);
        }
        return;
    }
    const int remaining = b.L - site - 1;
    for (int n = 0; n <= std::min(b.nMax, left); ++n) {
        if (left - n > remaining * b.nMax) continue;
        occ[site] = n;
        enumerate(site + 1, left - n, occ, b, out, maxDim);
    }
}

}  // namespace

std::uint64_t SectorBasis::code(const std::vector<int>& occ) const {
    std::uint64_t c = 0;
    for (int n : occ) c = c * static_cast<std::uint64_t>(nMax + 1) + static_cast<std::uint64_t>(n);
    return c;
}

SectorBasis SectorBasis::build(int L, int nMax, int N, std::size_t maxDim) {
    if (L < 1 || nMax < 1) throw DomainError("SectorBasis: invalid shape");
    if (N < 0 || N > L * nMax) throw DomainError("SectorBasis: unreachable particle number");
    if (std::pow(nMax + 1.0, L) > 1.8e19) throw RefusalError("SectorBasis: chain too long for state codes");
    SectorBasis b;
    b.L = L;
    b.nMax = nMax;
    b.N = N;
    std::vector<int> occ(L, 0);
    enumerate(0, N, occ, b, b.states, maxDim);
    for (std::size_t k = 0; k < b.states.size(); ++k) b.lookup_.emplace(b.code(b.states[k]), static_cast<long>(k));
    return b;
}

long SectorBasis::index(const std::vector<int>& occ) const {
    if (static_cast<int>(occ.size()) != L) return -1;
    for (int n : occ)
        if (n < 0 || n > nMax) return -1;
    auto it = lookup_.find(code(occ));
    return it == lookup_.end() ? -1 : it->second;
}

Eigen::SparseMatrix<double> sector_hamiltonian(const model::ModelParams& p, const SectorBasis& basis) {
    std::vector<Eigen::Triplet<double>> trip;
    const int L = basis.L;
    for (std::size_t k = 0; k < basis.dim(); ++k) {
        const auto& s = basis.states[k];
        double diag = 0.0;
        for (int i = 0; i < L; ++i) {
            diag += 0.5 * p.U * s[i] * (s[i] - 1);
            if (i + 1 < L) diag += p.V * s[i] * s[i + 1];
        }
        trip.emplace_back(k, k, diag);
        if (p.t == 0.0) continue;
        for (int i = 0; i + 1 < L; ++i) {
            // b+_i b_{i+1} and b+_{i+1} b_i
            for (int dir = 0; dir < 2; ++dir) {
                const int to = dir == 0 ? i : i + 1;
                const int from = dir == 0 ? i + 1 : i;
                if (s[from] == 0 || s[to] == basis.nMax) continue;
                auto t = s;
                const double amp = std::sqrt(static_cast<double>(s[from])) * std::sqrt(s[to] + 1.0);
                t[from] -= 1;
                t[to] += 1;
                const long j = basis.index(t);
                trip.emplace_back(j, k, -p.t * amp);
            }
        }
    }
    Eigen::SparseMatrix<double> H(basis.dim(), basis.dim());
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

ExactResult exact_diag_oracle(const model::ModelParams& p, int N, std::size_t maxDim) {
    p.validate();
    ExactResult r;
    r.basis = SectorBasis::build(p.L, p.nMax, N, maxDim);
    const auto H = sector_hamiltonian(p, r.basis);
    const long n = static_cast<long>(r.basis.dim());
    if (n <= 3000) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(H)};
        r.energy = es.eigenvalues()(0);
        r.state = es.eigenvectors().col(0);
        return r;
    }
    // restarted Lanczos for larger sectors
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    for (long k = 0; k < n; ++k) v(k) += 1e-3 * std::sin(0.37 * k);
    LinearMap apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = H * x; };
    LanczosResult res;
    for (int restart = 0; restart < 200; ++restart) {
        res = lanczos_ground(apply, v, 120, 1e-13);
        v = res.vector;
        if (res.converged) break;
    }
    if (!res.converged) throw RefusalError("exact_diag: Lanczos did not converge");
    r.energy = res.energy;
    r.state = res.vector;
    return r;
}

}  // namespace phasescout::dmrg
