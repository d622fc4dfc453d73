#include "phasescout/tn/mps.hpp"

#include "phasescout/errors.hpp"
#include "phasescout/random.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>

namespace phasescout::tn {

namespace {

BlockTensor site_tensor(const ChargeLeg& left, int d, const ChargeLeg& right) {
    return BlockTensor({left.dir == LegDir::In ? left : left.flipped(), ChargeLeg::physical(d),
                        right.dir == LegDir::Out ? right : right.flipped()},
                       0);
}

void scale_rows(RowMatrixMap m, const std::vector<double>& s) {
    for (int r = 0; r < m.rows(); ++r) m.row(r) *= s[r];
}

void check_site(const MPSState& s, int site) {
    if (site < 0 || site >= s.L) throw DomainError("site index out of range");
}

}  // namespace

// ------------------------------------------------------------------ MPSState

Bond MPSState::left_bond(int site) const {
    if (site == 0) return Bond::trivial(0);
    return bonds.at(site - 1);
}

Bond MPSState::right_bond(int site) const {
    if (site == L - 1) return Bond::trivial(totalParticles);
    return bonds.at(site);
}

BlockTensor MPSState::gamma(int site) const {
    check_site(*this, site);
    if (!canonical) throw InvariantError("gamma: state is not canonical");
    BlockTensor g = sites[site];
    const Bond rb = right_bond(site);
    for (auto& [key, b] : g.blocks()) {
        const auto& lam = rb.values.at(key[2]);
        auto m = matrix_view(b, 2);
        for (int c = 0; c < m.cols(); ++c) m.col(c) /= lam[c];
    }
    return g;
}

int MPSState::max_bond_dim() const {
    int m = 1;
    for (const auto& s : sites) m = std::max(m, s.leg(2).dim());
    return m;
}

// ------------------------------------------------------------- construction

MPSState product_state(std::span<const int> occupations, int d, int chiMax) {
    if (d < 1) throw DomainError("product_state: d must be >= 1");
    if (chiMax < 1) throw DomainError("product_state: chiMax must be >= 1");
    if (occupations.empty()) throw DomainError("product_state: empty chain");
    MPSState s;
    s.L = static_cast<int>(occupations.size());
    s.d = d;
    s.chiMax = chiMax;
    int q = 0;
    for (int i = 0; i < s.L; ++i) {
        const int n = occupations[i];
        if (n < 0 || n >= d) throw DomainError("product_state: occupation out of range");
        BlockTensor t = site_tensor(ChargeLeg::trivial(q, LegDir::In), d, ChargeLeg::trivial(q + n, LegDir::Out));
        t.block({0, n, 0}).data[0] = 1.0;
        s.sites.push_back(std::move(t));
        q += n;
        if (i < s.L - 1) s.bonds.push_back(Bond::trivial(q));
    }
    s.totalParticles = q;
    s.canonical = true;
    return s;
}

MPSState random_state(int L, int d, int N, int chi, std::uint64_t seed) {
    if (L < 1 || d < 2 || chi < 1) throw DomainError("random_state: invalid shape");
    if (N < 0 || N > L * (d - 1)) throw DomainError("random_state: unreachable particle number");
    std::mt19937_64 rng(seed);
    std::vector<ChargeLeg> bondLegs;  // bond b = 0..L, left-cumulative charge
    for (int b = 0; b <= L; ++b) {
        const int lo = std::max(0, N - (L - b) * (d - 1));
        const int hi = std::min(N, b * (d - 1));
        std::vector<int> c, g;
        for (int q = lo; q <= hi; ++q) {
            c.push_back(q);
            g.push_back((b == 0 || b == L) ? 1 : chi);
        }
        bondLegs.emplace_back(c, g, LegDir::In);
    }
    MPSState s;
    s.L = L;
    s.d = d;
    s.chiMax = std::max(chi, 1);
    s.totalParticles = N;
    for (int i = 0; i < L; ++i) {
        BlockTensor t = site_tensor(bondLegs[i], d, bondLegs[i + 1]);
        for (int a = 0; a < bondLegs[i].sectors(); ++a)
            for (int n = 0; n < d; ++n) {
                const int r = bondLegs[i + 1].find(bondLegs[i].charges[a] + n);
                if (r < 0) continue;
                for (double& v : t.block({a, n, r}).data) v = uniform(rng, -1.0, 1.0);
            }
        s.sites.push_back(std::move(t));
    }
    for (int b = 1; b < L; ++b) {
        Bond bd;
        bd.leg = bondLegs[b];
        for (int k = 0; k < bd.leg.sectors(); ++k) bd.values.emplace_back(bd.leg.degeneracies[k], 0.0);
        s.bonds.push_back(bd);
    }
    s.canonical = false;
    return s;
}

MPSState canonicalize(const MPSState& in, double svMin) {
    if (in.L < 1 || static_cast<int>(in.sites.size()) != in.L) throw DomainError("canonicalize: malformed state");
    MPSState s = in;
    const int L = s.L;
    for (const auto& t : s.sites) {
        for (const auto& [k, b] : t.blocks())
            for (double v : b.data)
                if (!std::isfinite(v)) throw DomainError("canonicalize: non-finite tensor entry");
    }
    try {
        // Left sweep: make sites 0..L-2 left-isometric, pushing the remainder right.
        for (int i = 0; i + 1 < L; ++i) {
            auto sp = block_svd_truncate(s.sites[i], 2, INT_MAX, 1e-15);
            for (auto& [key, b] : sp.right.blocks()) scale_rows(matrix_view(b, 1), sp.bond.values[key[0]]);
            s.sites[i] = std::move(sp.left);
            s.sites[i + 1] = contract(sp.right, {1}, s.sites[i + 1], {0});
        }
        if (s.sites[L - 1].norm() == 0.0) throw DegenerateError("canonicalize: zero-norm state");
        s.sites[L - 1].scale(1.0 / s.sites[L - 1].norm());

        // Right sweep: exact Schmidt values, right-isometric B tensors.
        s.bonds.assign(L - 1, Bond{});
        for (int i = L - 1; i >= 1; --i) {
            auto sp = block_svd_truncate(s.sites[i], 1, s.chiMax, svMin);
            for (auto& [key, b] : sp.left.blocks()) {
                auto m = matrix_view(b, 1);
                const auto& lam = sp.bond.values[key[1]];
                for (int c = 0; c < m.cols(); ++c) m.col(c) *= lam[c];
            }
            s.sites[i] = std::move(sp.right);
            s.sites[i - 1] = contract(s.sites[i - 1], {2}, sp.left, {0});
            s.bonds[i - 1] = std::move(sp.bond);
        }
        const double n0 = s.sites[0].norm();
        if (n0 == 0.0) throw DegenerateError("canonicalize: zero-norm state");
        s.sites[0].scale(1.0 / n0);
    } catch (const DegenerateError&) {
        throw DegenerateError("canonicalize: zero-norm state");
    }
    s.canonical = true;
    return s;
}

// ------------------------------------------------------------- measurements

SchmidtSpectrum schmidt_spectrum(const MPSState& state, int bond) {
    if (bond < 1 || bond > state.L - 1) throw DomainError("schmidt_spectrum: bond out of range");
    if (!state.canonical) throw InvariantError("schmidt_spectrum: state is not canonical");
    return state.bonds[bond - 1].spectrum();
}

ThetaTensor theta_tensor(const MPSState& state, int site) {
    check_site(state, site);
    if (!state.canonical) throw InvariantError("theta_tensor: state is not canonical");
    BlockTensor th = state.sites[site];
    const Bond lb = state.left_bond(site);
    for (auto& [key, b] : th.blocks()) scale_rows(matrix_view(b, 1), lb.values.at(key[0]));
    ThetaTensor out;
    out.site = site;
    out.chiLeft = th.leg(0).dim();
    out.d = th.leg(1).dim();
    out.chiRight = th.leg(2).dim();
    out.data = th.to_dense();
    return out;
}

std::vector<BlockTensor> operator_pieces(const Eigen::MatrixXd& op) {
    const int d = static_cast<int>(op.rows());
    if (op.cols() != d) throw DomainError("operator must be square");
    std::vector<BlockTensor> pieces;
    for (int shift = -(d - 1); shift <= d - 1; ++shift) {
        BlockTensor t({ChargeLeg::physical(d, LegDir::In), ChargeLeg::physical(d, LegDir::Out)}, shift);
        for (int s = 0; s < d; ++s) {
            const int sp = s + shift;
            if (sp < 0 || sp >= d || op(sp, s) == 0.0) continue;
            t.block({sp, s}).data[0] = op(sp, s);
        }
        if (!t.blocks().empty()) pieces.push_back(std::move(t));
    }
    return pieces;
}

double expect_local(const MPSState& state, int site, const Eigen::MatrixXd& op) {
    check_site(state, site);
    if (op.rows() != state.d || op.cols() != state.d) throw DomainError("expect_local: operator shape mismatch");
    if (!state.canonical) throw InvariantError("expect_local: state is not canonical");
    const BlockTensor& B = state.sites[site];
    const Bond lb = state.left_bond(site);
    double acc = 0.0;
    for (const auto& [key, blk] : B.blocks()) {
        // Theta_sigma' and Theta_sigma share both virtual sectors only for sigma' == sigma,
        // so charge conservation leaves the diagonal of op.
        const auto m = matrix_view(blk, 2);
        const auto& lam = lb.values.at(key[0]);
        double w = 0.0;
        for (int r = 0; r < m.rows(); ++r) w += lam[r] * lam[r] * m.row(r).squaredNorm();
        acc += op(key[1], key[1]) * w;
    }
    return acc;
}

BlockTensor left_boundary_env(const MPSState& state, int site) {
    const Bond lb = state.left_bond(site);
    const ChargeLeg& vl = state.sites[site].leg(0);
    BlockTensor env({vl.dir == LegDir::In ? vl : vl.flipped(), vl.dir == LegDir::In ? vl.flipped() : vl}, 0);
    for (int k = 0; k < vl.sectors(); ++k) {
        DenseBlock& b = env.block({k, k});
        auto m = matrix_view(b, 1);
        for (int a = 0; a < m.rows(); ++a) m(a, a) = lb.values.at(k).at(a) * lb.values.at(k).at(a);
    }
    return env;
}

BlockTensor transfer_step(const BlockTensor& env, const BlockTensor& site, const BlockTensor* op) {
    const BlockTensor bra = site.conj();
    BlockTensor t = contract(env, {1}, site, {0});  // (bra, sigma, vR)
    BlockTensor r;
    if (op) {
        t = contract(t, {1}, *op, {1});            // (bra, vR, sigma')
        r = contract(t, {0, 2}, bra, {0, 1});      // (vR, vR')
    } else {
        r = contract(t, {0, 1}, bra, {0, 1});
    }
    return r.permute({1, 0});
}

double correlate_pair(const MPSState& state, int i, int j, const Eigen::MatrixXd& opA,
                      const Eigen::MatrixXd& opB, const std::optional<Eigen::MatrixXd>& stringOp) {
    check_site(state, i);
    check_site(state, j);
    if (i >= j) throw DomainError("correlate_pair: requires i < j");
    if (!state.canonical) throw InvariantError("correlate_pair: state is not canonical");
    for (const auto* m : {&opA, &opB})
        if (m->rows() != state.d || m->cols() != state.d) throw DomainError("correlate_pair: operator shape mismatch");
    std::vector<BlockTensor> str;
    if (stringOp) {
        if (stringOp->rows() != state.d || stringOp->cols() != state.d)
            throw DomainError("correlate_pair: string operator shape mismatch");
        str = operator_pieces(*stringOp);
        if (str.size() > 1 || (str.size() == 1 && str[0].total_charge() != 0))
            throw DomainError("correlate_pair: string operator must conserve particle number");
    }
    const auto piecesA = operator_pieces(opA);
    const auto piecesB = operator_pieces(opB);
    const BlockTensor start = left_boundary_env(state, i);
    double acc = 0.0;
    for (const auto& pa : piecesA) {
        bool needed = false;
        for (const auto& pb : piecesB) needed |= pa.total_charge() + pb.total_charge() == 0;
        if (!needed) continue;
        BlockTensor env = transfer_step(start, state.sites[i], &pa);
        for (int l = i + 1; l < j; ++l) {
            if (stringOp && str.empty()) return acc;  // zero string
            env = transfer_step(env, state.sites[l], stringOp ? &str[0] : nullptr);
        }
        for (const auto& pb : piecesB) {
            if (pa.total_charge() + pb.total_charge() != 0) continue;
            acc += trace(transfer_step(env, state.sites[j], &pb));
        }
    }
    return acc;
}

double overlap(const MPSState& a, const MPSState& b) {
    if (a.L != b.L || a.d != b.d) throw DomainError("overlap: shape mismatch");
    if (a.totalParticles != b.totalParticles) return 0.0;
    const ChargeLeg& la = a.sites[0].leg(0);
    const ChargeLeg& lb = b.sites[0].leg(0);
    if (!la.same_space(lb)) return 0.0;
    BlockTensor env({la, lb.flipped()}, 0);
    env.block({0, 0}).data[0] = 1.0;
    for (int i = 0; i < a.L; ++i) {
        BlockTensor t = contract(env, {1}, b.sites[i], {0});
        env = contract(t, {0, 1}, a.sites[i].conj(), {0, 1}).permute({1, 0});
    }
    double v = 0.0;
    for (const auto& [k, blk] : env.blocks()) v += blk.data[0];
    return std::abs(v);
}

}  // namespace phasescout::tn
