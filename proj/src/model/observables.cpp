#include "phasescout/model/observables.hpp"

#include "phasescout/errors.hpp"
#include "phasescout/parallel.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>

namespace phasescout::model {

using tn::BlockTensor;
using tn::MPSState;

CorrelatorKind parse_correlator_kind(const std::string& name) {
    if (name == "SF" || name == "sf") return CorrelatorKind::SF;
    if (name == "DW" || name == "dw") return CorrelatorKind::DW;
    if (name == "HI" || name == "hi") return CorrelatorKind::HI;
    throw DomainError("unknown correlator kind '" + name + "'");
}

namespace {

int nmax_of(const MPSState& s) { return s.d - 1; }

double filling_of(const MPSState& s) { return static_cast<double>(s.totalParticles) / s.L; }

// Row sweep: for every i, one environment pass to the right evaluating all j > i.
void fill_rows(const MPSState& state, const Eigen::MatrixXd& opA, const Eigen::MatrixXd& opB,
               const Eigen::MatrixXd* stringOp, Eigen::MatrixXd& out) {
    const int L = state.L;
    const auto piecesA = tn::operator_pieces(opA);
    const auto piecesB = tn::operator_pieces(opB);
    std::vector<BlockTensor> str;
    if (stringOp) str = tn::operator_pieces(*stringOp);
    const BlockTensor* strPiece = str.empty() ? nullptr : &str[0];
    for (int i = 0; i + 1 < L; ++i) {
        const BlockTensor start = tn::left_boundary_env(state, i);
        for (const auto& pa : piecesA) {
            BlockTensor env = tn::transfer_step(start, state.sites[i], &pa);
            for (int j = i + 1; j < L; ++j) {
                for (const auto& pb : piecesB)
                    if (pa.total_charge() + pb.total_charge() == 0)
                        out(i, j) += tn::trace(tn::transfer_step(env, state.sites[j], &pb));
                if (j + 1 < L) {
                    if (stringOp && !strPiece) break;
                    env = tn::transfer_step(env, state.sites[j], stringOp ? strPiece : nullptr);
                }
            }
        }
    }
}

}  // namespace

Eigen::MatrixXd correlator_matrix(const MPSState& state, CorrelatorKind kind) {
    if (!state.canonical) throw InvariantError("correlator_matrix: state is not canonical");
    const int L = state.L;
    const int nMax = nmax_of(state);
    const double fill = filling_of(state);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(L, L);
    const Eigen::MatrixXd dn = op_delta_n(nMax, fill);
    switch (kind) {
    case CorrelatorKind::SF: {
        fill_rows(state, op_bdag(nMax), op_b(nMax), nullptr, C);
        const Eigen::MatrixXd n = op_n(nMax);
        for (int i = 0; i < L; ++i) C(i, i) = tn::expect_local(state, i, n);
        break;
    }
    case CorrelatorKind::DW: {
        fill_rows(state, dn, dn, nullptr, C);
        for (int i = 0; i < L; ++i) {
            C(i, i) = tn::expect_local(state, i, dn * dn);
            for (int j = i + 1; j < L; ++j)
                if ((j - i) % 2 == 1) C(i, j) = -C(i, j);
        }
        break;
    }
    case CorrelatorKind::HI: {
        const Eigen::MatrixXd P = op_parity_string(nMax, fill);
        const Eigen::MatrixXd first = dn * P;
        fill_rows(state, first, dn, &P, C);
        for (int i = 0; i < L; ++i) C(i, i) = tn::expect_local(state, i, dn * dn);
        break;
    }
    }
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < i; ++j) C(i, j) = C(j, i);
    return C;
}

double order_parameter(const Eigen::MatrixXd& corr, int margin) {
    if (corr.rows() != corr.cols()) throw DomainError("order_parameter: matrix must be square");
    const int L = static_cast<int>(corr.rows());
    if (margin < 0 || L - 2 * margin < 1) throw DomainError("order_parameter: margin too large");
    const int n = L - 2 * margin;
    if (n == 0) return 0.0;
    return corr.block(margin, margin, n, n).sum() / (static_cast<double>(n) * n);
}

double long_range_value(const Eigen::MatrixXd& corr, int margin) {
    if (corr.rows() != corr.cols()) throw DomainError("long_range_value: matrix must be square");
    const int L = static_cast<int>(corr.rows());
    if (margin < 0 || L - 1 - margin < margin) throw DomainError("long_range_value: margin too large");
    return corr(margin, L - 1 - margin);
}

StructureFactor structure_factor(const std::vector<double>& density) {
    const int L = static_cast<int>(density.size());
    if (L < 2) throw DomainError("structure_factor: need at least two sites");
    StructureFactor best;
    best.value = -1.0;
    for (int m = 1; m < L; ++m) {
        const double k = 2.0 * std::numbers::pi * m / L;
        std::complex<double> nk = 0.0;
        for (int j = 0; j < L; ++j) nk += density[j] * std::polar(1.0, -k * j);
        nk /= static_cast<double>(L);
        const double v = std::norm(nk);
        if (v > best.value + 1e-15) {
            best.value = v;
            best.kStar = k;
        }
    }
    return best;
}

ChargeGapResult charge_gap(const ModelParams& params, const dmrg::DmrgConfig& config, int N, int jobs) {
    params.validate();
    if (N < 0) N = params.L;
    if (N - 1 < 0 || N + 1 > params.L * params.nMax) throw DomainError("charge_gap: sector N+-1 unreachable");
    ChargeGapResult r;
    parallel_for(3, jobs, [&](int k) {
        auto res = dmrg::run_dmrg(params, config, N - 1 + k);
        r.energies[k] = res.report.finalEnergy;
        r.converged[k] = res.report.converged;
    });
    r.eC = r.energies[2] + r.energies[0] - 2.0 * r.energies[1];
    return r;
}

// ------------------------------------------------------------ transfer map

namespace {

// Charge-block sites in the symmetric gauge: M[a][sigma] is the dense block from
// left sector a to the right sector holding charge q_a + sigma.
struct GaugeSite {
    int d = 0;
    std::vector<int> leftCharges, leftDims, rightCharges, rightDims;
    std::map<std::pair<int, int>, Eigen::MatrixXd> blocks;  // (left charge, sigma)
};

GaugeSite gauge_site(const MPSState& s, int site) {
    const BlockTensor& B = s.sites[site];
    const tn::Bond lb = s.left_bond(site);
    const tn::Bond rb = s.right_bond(site);
    GaugeSite g;
    g.d = s.d;
    g.leftCharges = B.leg(0).charges;
    g.leftDims = B.leg(0).degeneracies;
    g.rightCharges = B.leg(2).charges;
    g.rightDims = B.leg(2).degeneracies;
    for (const auto& [key, blk] : B.blocks()) {
        auto m = tn::matrix_view(blk, 2);
        Eigen::MatrixXd M = m;
        const auto& ll = lb.values.at(key[0]);
        const auto& lr = rb.values.at(key[2]);
        for (int r = 0; r < M.rows(); ++r) M.row(r) *= std::sqrt(ll[r]);
        for (int c = 0; c < M.cols(); ++c) M.col(c) /= std::sqrt(std::max(lr[c], 1e-300));
        g.blocks[{g.leftCharges[key[0]], key[1]}] = std::move(M);
    }
    return g;
}

// Operator space of matrices X whose blocks (qa, qb) satisfy qa - qb = delta.
struct OpSpace {
    std::map<std::pair<int, int>, long> offset;
    std::map<std::pair<int, int>, std::pair<int, int>> dims;
    long size = 0;
};

OpSpace op_space(const std::vector<int>& charges, const std::vector<int>& dims, int delta) {
    OpSpace sp;
    for (std::size_t a = 0; a < charges.size(); ++a)
        for (std::size_t b = 0; b < charges.size(); ++b) {
            if (charges[a] - charges[b] != delta) continue;
            sp.offset[{charges[a], charges[b]}] = sp.size;
            sp.dims[{charges[a], charges[b]}] = {dims[a], dims[b]};
            sp.size += static_cast<long>(dims[a]) * dims[b];
        }
    return sp;
}

// Dense matrix of X -> sum_sigma M^T X M on one site, rows/cols row-major flattened blocks.
Eigen::MatrixXd site_map(const GaugeSite& g, const OpSpace& in, const OpSpace& out) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(out.size, in.size);
    for (const auto& [qq, off] : in.offset) {
        const auto [qa, qb] = qq;
        const auto [da, db] = in.dims.at(qq);
        for (int sigma = 0; sigma < g.d; ++sigma) {
            auto ia = g.blocks.find({qa, sigma});
            auto ib = g.blocks.find({qb, sigma});
            if (ia == g.blocks.end() || ib == g.blocks.end()) continue;
            auto jt = out.offset.find({qa + sigma, qb + sigma});
            if (jt == out.offset.end()) continue;
            const Eigen::MatrixXd& Ma = ia->second;  // da x da'
            const Eigen::MatrixXd& Mb = ib->second;  // db x db'
            const long da2 = Ma.cols(), db2 = Mb.cols();
            // vec_r(Ma^T X Mb) = (Ma^T kron Mb^T) vec_r(X)
            for (long r1 = 0; r1 < da2; ++r1)
                for (long r2 = 0; r2 < db2; ++r2)
                    for (long c1 = 0; c1 < da; ++c1) {
                        const double x = Ma(c1, r1);
                        if (x == 0.0) continue;
                        for (long c2 = 0; c2 < db; ++c2)
                            T(jt->second + r1 * db2 + r2, off + c1 * db + c2) += x * Mb(c2, r2);
                    }
        }
    }
    return T;
}

}  // namespace

CorrelationLengthResult correlation_length(const MPSState& state, int window) {
    if (!state.canonical) throw InvariantError("correlation_length: state is not canonical");
    if (window < 2 || window > state.L / 2) throw DomainError("correlation_length: window out of range");
    const int first = (state.L - window) / 2;
    std::vector<GaugeSite> sites;
    for (int i = first; i < first + window; ++i) sites.push_back(gauge_site(state, i));

    double s1 = 0.0, s2 = 0.0, off = 0.0;
    for (int delta = 0; delta <= 1; ++delta) {
        OpSpace cur = op_space(sites[0].leftCharges, sites[0].leftDims, delta);
        Eigen::MatrixXd T;
        for (std::size_t k = 0; k < sites.size(); ++k) {
            OpSpace next = op_space(sites[k].rightCharges, sites[k].rightDims, delta);
            Eigen::MatrixXd Tk = site_map(sites[k], cur, next);
            T = k == 0 ? Tk : Eigen::MatrixXd(Tk * T);
            cur = std::move(next);
        }
        if (T.size() == 0) continue;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(T);
        const auto& sv = svd.singularValues();
        if (delta == 0) {
            s1 = sv.size() > 0 ? sv(0) : 0.0;
            s2 = sv.size() > 1 ? sv(1) : 0.0;
        } else {
            off = sv.size() > 0 ? sv(0) : 0.0;
        }
    }
    CorrelationLengthResult r;
    r.window = window;
    if (s1 <= 0.0) return r;
    r.mu2 = std::max(s2, off) / s1;
    if (r.mu2 < 1e-14) {
        r.mu2 = r.mu2 < 0.0 ? 0.0 : r.mu2;
        r.xi = 0.0;
    } else if (r.mu2 >= 1.0) {
        r.xi = std::numeric_limits<double>::infinity();
    } else {
        r.xi = -window / std::log(r.mu2);
    }
    return r;
}

FidelityResult fidelity_scan(const std::vector<ModelParams>& cut, const dmrg::DmrgConfig& config, int N,
                             int jobs) {
    if (cut.empty()) throw DomainError("fidelity_scan: empty cut");
    for (const auto& p : cut) {
        p.validate();
        if (p.L != cut[0].L || p.nMax != cut[0].nMax) throw DomainError("fidelity_scan: points must share L and nMax");
    }
    if (N < 0) N = cut[0].L;
    const int n = static_cast<int>(cut.size());
    std::vector<MPSState> states(n);
    FidelityResult r;
    r.converged.assign(n, false);
    r.energies.assign(n, 0.0);
    r.observables.resize(n);
    parallel_for(n, jobs, [&](int k) {
        auto res = dmrg::run_dmrg(cut[k], config, N);
        r.observables[k] = measure(res.state, all_correlators(res.state));
        states[k] = std::move(res.state);
        r.converged[k] = res.report.converged;
        r.energies[k] = res.report.finalEnergy;
    });
    r.F = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) r.F(i, j) = r.F(j, i) = std::min(1.0, tn::overlap(states[i], states[j]));
    return r;
}

Correlators all_correlators(const MPSState& state) {
    return {correlator_matrix(state, CorrelatorKind::SF), correlator_matrix(state, CorrelatorKind::DW),
            correlator_matrix(state, CorrelatorKind::HI)};
}

ObservableSet measure(const MPSState& state, const Correlators& corr, bool edgeMargin) {
    ObservableSet o;
    const int L = state.L;
    o.margin = edgeMargin ? default_margin(L) : 0;
    o.oSF = order_parameter(corr.sf, o.margin);
    o.oDW = order_parameter(corr.dw, o.margin);
    o.oHI = order_parameter(corr.hi, o.margin);
    o.rSF = long_range_value(corr.sf, o.margin);
    o.rDW = long_range_value(corr.dw, o.margin);
    o.rHI = long_range_value(corr.hi, o.margin);
    const Eigen::MatrixXd n = op_n(state.d - 1);
    for (int i = 0; i < L; ++i) o.densityProfile.push_back(tn::expect_local(state, i, n));
    for (int b = 1; b < L; ++b) o.entropyProfile.push_back(tn::entanglement_entropy(tn::schmidt_spectrum(state, b)));
    const auto sf = structure_factor(o.densityProfile);
    o.structureFactor = sf.value;
    o.kStar = sf.kStar;
    if (L >= 4) o.xi = correlation_length(state, std::min(8, L / 2)).xi;
    return o;
}

}  // namespace phasescout::model
