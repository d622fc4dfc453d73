#include "phasescout/dmrg/dmrg.hpp"

#include "phasescout/dmrg/lanczos.hpp"
#include "phasescout/errors.hpp"
#include "phasescout/random.hpp"
#include "phasescout/tn/mpo.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

namespace phasescout::dmrg {

using tn::BlockTensor;
using tn::ChargeLeg;
using tn::DenseBlock;
using tn::Environment;
using tn::LegDir;
using tn::Mpo;

void DmrgConfig::validate() const {
    if (chiMax < 1) throw DomainError("DmrgConfig: chiMax must be >= 1");
    if (maxSweeps < 1) throw DomainError("DmrgConfig: maxSweeps must be >= 1");
    if (energyTol < 0.0) throw DomainError("DmrgConfig: energyTol must be > 0");
    if (lanczosIters < 1) throw DomainError("DmrgConfig: lanczosIters must be >= 1");
    if (!(lanczosTol > 0.0)) throw DomainError("DmrgConfig: lanczosTol must be > 0");
    if (!(mixerStrength >= 0.0 && mixerStrength < 1.0)) throw DomainError("DmrgConfig: mixer must lie in [0, 1)");
    if (!(mixerDecay >= 0.0 && mixerDecay <= 1.0)) throw DomainError("DmrgConfig: mixer decay must lie in [0, 1]");
    if (mixerSweeps < 0) throw DomainError("DmrgConfig: mixerSweeps must be >= 0");
}

double DmrgConfig::mixer_at(int sweep) const {
    if (sweep >= mixerSweeps || mixerStrength == 0.0) return 0.0;
    return mixerStrength * std::pow(mixerDecay, sweep);
}

std::vector<int> initial_occupations(const model::ModelParams& p, int N) {
    const int L = p.L;
    if (N < 0 || N > L * p.nMax) throw DomainError("initial_occupations: unreachable particle number");
    std::vector<int> occ(L, 1);
    if (p.V > p.U && p.nMax >= 2)
        for (int i = 0; i < L; ++i) occ[i] = i % 2 == 0 ? 2 : 0;

    // edges first for additions, middle first for removals
    std::vector<int> edgeOrder, middleOrder;
    for (int k = 0; k < L; ++k) edgeOrder.push_back(k % 2 == 0 ? k / 2 : L - 1 - k / 2);
    middleOrder.assign(edgeOrder.rbegin(), edgeOrder.rend());
    int sum = 0;
    for (int n : occ) sum += n;
    while (sum < N) {
        for (int i : edgeOrder)
            if (sum < N && occ[i] < p.nMax) {
                ++occ[i];
                ++sum;
            }
    }
    while (sum > N) {
        for (int i : middleOrder)
            if (sum > N && occ[i] > 0) {
                --occ[i];
                --sum;
            }
    }
    return occ;
}

namespace {

// ------------------------------------------------------------ theta layout

struct ThetaLayout {
    struct Entry {
        int qL, s1, s2, qR;
        int iL, iR;
        int rows, cols;
        long offset;
    };
    std::vector<Entry> entries;
    std::map<std::array<int, 3>, int> index;
    long size = 0;
    std::vector<ChargeLeg> legs;

    int find(int qL, int s1, int s2) const {
        auto it = index.find({qL, s1, s2});
        return it == index.end() ? -1 : it->second;
    }
};

ThetaLayout make_layout(const BlockTensor& theta) {
    ThetaLayout lay;
    lay.legs = theta.legs();
    const ChargeLeg& left = theta.leg(0);
    const ChargeLeg& right = theta.leg(3);
    const int d = theta.leg(1).dim();
    for (int a = 0; a < left.sectors(); ++a)
        for (int s1 = 0; s1 < d; ++s1)
            for (int s2 = 0; s2 < d; ++s2) {
                const int qL = left.charges[a];
                const int b = right.find(qL + s1 + s2);
                if (b < 0) continue;
                ThetaLayout::Entry e{qL, s1, s2, qL + s1 + s2, a, b, left.degeneracies[a], right.degeneracies[b], lay.size};
                lay.index[{qL, s1, s2}] = static_cast<int>(lay.entries.size());
                lay.entries.push_back(e);
                lay.size += static_cast<long>(e.rows) * e.cols;
            }
    return lay;
}

Eigen::VectorXd pack(const BlockTensor& theta, const ThetaLayout& lay) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(lay.size);
    for (const auto& e : lay.entries)
        if (const DenseBlock* b = theta.find({e.iL, e.s1, e.s2, e.iR}))
            std::copy(b->data.begin(), b->data.end(), v.data() + e.offset);
    return v;
}

BlockTensor unpack(const Eigen::VectorXd& v, const ThetaLayout& lay) {
    BlockTensor t(lay.legs, 0);
    for (const auto& e : lay.entries) {
        const double* src = v.data() + e.offset;
        const long n = static_cast<long>(e.rows) * e.cols;
        bool nonzero = false;
        for (long k = 0; k < n && !nonzero; ++k) nonzero = src[k] != 0.0;
        if (!nonzero) continue;
        DenseBlock& b = t.block({e.iL, e.s1, e.s2, e.iR});
        std::copy(src, src + n, b.data.begin());
    }
    return t;
}

using ConstMap = Eigen::Map<const tn::RowMatrix>;
using MutMap = Eigen::Map<tn::RowMatrix>;

// ------------------------------------------------------- effective operator

struct TermsByChannel {
    std::vector<std::vector<const tn::MpoTerm*>> from, to;
    TermsByChannel(const Mpo& mpo, int site) : from(mpo.D), to(mpo.D) {
        for (const auto& t : mpo.sites[site]) {
            from[t.from].push_back(&t);
            to[t.to].push_back(&t);
        }
    }
};

struct TwoSiteOperator {
    struct Path {
        int slot;
        double coef;
    };
    struct Source {
        int entry;
        const Eigen::MatrixXd* env;  // left environment block
        int envRows;
        std::vector<Path> paths;
    };
    struct Slot {
        int out;
        const Eigen::MatrixXd* env;  // right environment block
        long offset;                 // into the scratch buffer
        int rows;
    };
    const ThetaLayout& lay;
    std::vector<Source> sources;
    std::vector<Slot> slots;
    long scratchSize = 0;
    mutable std::vector<double> scratch;
    mutable Eigen::MatrixXd X;

    TwoSiteOperator(const Environment& left, const Environment& right, const Mpo& mpo, int i,
                    const ThetaLayout& layout)
        : lay(layout) {
        const int d = mpo.d;
        const TermsByChannel t1(mpo, i), t2(mpo, i + 1);
        std::map<std::pair<int, int>, int> slotIndex;  // (channel, out entry)
        for (int n = 0; n < static_cast<int>(lay.entries.size()); ++n) {
            const auto& e = lay.entries[n];
            for (int a = 0; a < mpo.D; ++a) {
                auto it = left.channels[a].find(e.qL);
                if (it == left.channels[a].end() || t1.from[a].empty()) continue;
                Source src{n, &it->second, static_cast<int>(it->second.rows()), {}};
                const int qLo = e.qL + mpo.channelCharge[a];
                for (const auto* w1 : t1.from[a]) {
                    const int s1 = e.s1 + w1->shift;
                    if (s1 < 0 || s1 >= d) continue;
                    const double c1 = w1->op(s1, e.s1);
                    if (c1 == 0.0) continue;
                    for (const auto* w2 : t2.from[w1->to]) {
                        const int s2 = e.s2 + w2->shift;
                        if (s2 < 0 || s2 >= d) continue;
                        const double c2 = w2->op(s2, e.s2);
                        if (c2 == 0.0) continue;
                        const int out = lay.find(qLo, s1, s2);
                        if (out < 0) continue;
                        const auto& o = lay.entries[out];
                        auto jt = right.channels[w2->to].find(o.qR - mpo.channelCharge[w2->to]);
                        if (jt == right.channels[w2->to].end()) continue;
                        auto [kt, inserted] = slotIndex.emplace(std::make_pair(w2->to, out), static_cast<int>(slots.size()));
                        if (inserted) {
                            slots.push_back({out, &jt->second, scratchSize, o.rows});
                            scratchSize += static_cast<long>(o.rows) * jt->second.cols();
                        }
                        src.paths.push_back({kt->second, c1 * c2});
                    }
                }
                if (!src.paths.empty()) sources.push_back(std::move(src));
            }
        }
        scratch.resize(scratchSize);
    }

    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
        y.setZero(lay.size);
        std::fill(scratch.begin(), scratch.end(), 0.0);
        for (const auto& src : sources) {
            const auto& e = lay.entries[src.entry];
            ConstMap xm(x.data() + e.offset, e.rows, e.cols);
            X.noalias() = (*src.env) * xm;
            for (const auto& p : src.paths) {
                const Slot& s = slots[p.slot];
                Eigen::Map<Eigen::MatrixXd> acc(scratch.data() + s.offset, s.rows, X.cols());
                acc.noalias() += p.coef * X;
            }
        }
        for (const auto& s : slots) {
            const auto& o = lay.entries[s.out];
            Eigen::Map<const Eigen::MatrixXd> acc(scratch.data() + s.offset, s.rows, s.env->cols());
            MutMap ym(y.data() + o.offset, o.rows, o.cols);
            ym.noalias() += acc * s.env->transpose();
        }
    }
};

// ------------------------------------------------------ truncation helpers

struct SplitResult {
    BlockTensor isometry;  // A (right move) or B (left move)
    BlockTensor center;    // remainder carrying the weight
    double discarded = 0.0;
};

BlockTensor scale_bond(BlockTensor t, const tn::Bond& bond, int axis) {
    for (auto& [key, b] : t.blocks()) {
        const auto& lam = bond.values[key[axis]];
        auto m = tn::matrix_view(b, axis == 0 ? 1 : 2);
        if (axis == 0)
            for (int r = 0; r < m.rows(); ++r) m.row(r) *= lam[r];
        else
            for (int c = 0; c < m.cols(); ++c) m.col(c) *= lam[c];
    }
    return t;
}

SplitResult split_svd(const BlockTensor& theta, bool moveRight, int chiMax, double svMin) {
    auto sp = tn::block_svd_truncate(theta, 2, chiMax, svMin);
    SplitResult r;
    r.discarded = sp.discardedWeight;
    if (moveRight) {
        r.isometry = std::move(sp.left);
        r.center = scale_bond(std::move(sp.right), sp.bond, 0);
    } else {
        r.isometry = std::move(sp.right);
        r.center = scale_bond(std::move(sp.left), sp.bond, 2);
    }
    return r;
}

// Dense grouping of one side of theta into charge sectors of the cut.
struct SideSector {
    std::map<std::pair<int, int>, int> offset;  // (charge, sigma) -> position
    int size = 0;
    // column groups, each a dense (size x width) slab with a weight
    std::vector<std::pair<double, Eigen::MatrixXd>> slabs;
    std::map<std::tuple<int, int, int>, int> slabIndex;  // (key a, key b, channel)
};

// Density-matrix truncation with White's perturbation. For a right move the kept
// space lives on (vL, sigma1) rows, for a left move on (sigma2, vR) columns.
SplitResult split_mixer(const BlockTensor& theta, const ThetaLayout& lay, const Environment& left,
                        const Environment& right, const Mpo& mpo, int i, bool moveRight, double alpha,
                        int chiMax, double svMin, int N) {
    const int d = mpo.d;
    const ChargeLeg& legL = theta.leg(0);
    const ChargeLeg& legR = theta.leg(3);
    std::map<int, SideSector> sec;

    // allowed cut charges: reachable from the kept side and completable by the other
    auto allowed = [&](int m) {
        if (m < 0 || m > N) return false;
        for (int s = 0; s < d; ++s)
            if (moveRight ? legR.find(m + s) >= 0 : legL.find(m - s) >= 0) return true;
        return false;
    };
    auto sector = [&](int m) -> SideSector& {
        auto& s = sec[m];
        if (s.size == 0) {
            if (moveRight) {
                for (int a = 0; a < legL.sectors(); ++a) {
                    const int s1 = m - legL.charges[a];
                    if (s1 < 0 || s1 >= d) continue;
                    s.offset[{legL.charges[a], s1}] = s.size;
                    s.size += legL.degeneracies[a];
                }
            } else {
                for (int b = 0; b < legR.sectors(); ++b) {
                    const int s2 = legR.charges[b] - m;
                    if (s2 < 0 || s2 >= d) continue;
                    s.offset[{legR.charges[b], s2}] = s.size;
                    s.size += legR.degeneracies[b];
                }
            }
        }
        return s;
    };
    // add a block to slab (groupKey, channel) of cut sector m at position (charge, sigma)
    auto add = [&](int m, int q, int sigma, std::tuple<int, int, int> group, int width, double weight,
                   const Eigen::MatrixXd& blk) {
        if (!allowed(m)) return;
        SideSector& s = sector(m);
        auto pos = s.offset.find({q, sigma});
        if (pos == s.offset.end()) return;
        auto it = s.slabIndex.find(group);
        if (it == s.slabIndex.end()) {
            it = s.slabIndex.emplace(group, static_cast<int>(s.slabs.size())).first;
            s.slabs.emplace_back(weight, Eigen::MatrixXd::Zero(s.size, width));
        }
        // blk is (rows on kept side) x width
        s.slabs[it->second].second.middleRows(pos->second, blk.rows()) += blk;
    };

    const TermsByChannel t1(mpo, i), t2(mpo, i + 1);
    for (const auto& e : lay.entries) {
        const DenseBlock* b = theta.find({e.iL, e.s1, e.s2, e.iR});
        if (!b) continue;
        ConstMap x(b->data.data(), e.rows, e.cols);
        if (moveRight) {
            add(e.qL + e.s1, e.qL, e.s1, {e.s2, e.qR, -1}, e.cols, 1.0, x);
            if (alpha == 0.0) continue;
            for (int a = 0; a < mpo.D; ++a) {
                auto it = left.channels[a].find(e.qL);
                if (it == left.channels[a].end()) continue;
                const Eigen::MatrixXd X = it->second * x;
                const int qLo = e.qL + mpo.channelCharge[a];
                for (const auto* w : t1.from[a]) {
                    const int s1 = e.s1 + w->shift;
                    if (s1 < 0 || s1 >= d || w->op(s1, e.s1) == 0.0) continue;
                    add(qLo + s1, qLo, s1, {e.s2, e.qR, w->to}, e.cols, alpha, w->op(s1, e.s1) * X);
                }
            }
        } else {
            add(e.qR - e.s2, e.qR, e.s2, {e.qL, e.s1, -1}, e.rows, 1.0, x.transpose());
            if (alpha == 0.0) continue;
            for (int c = 0; c < mpo.D; ++c) {
                auto it = right.channels[c].find(e.qR);
                if (it == right.channels[c].end()) continue;
                const Eigen::MatrixXd Y = it->second * x.transpose();  // (dim(qR+dc) x rows)
                const int qRo = e.qR + mpo.channelCharge[c];
                for (const auto* w : t2.to[c]) {
                    const int s2 = e.s2 + w->shift;
                    if (s2 < 0 || s2 >= d || w->op(s2, e.s2) == 0.0) continue;
                    add(qRo - s2, qRo, s2, {e.qL, e.s1, w->from}, e.rows, alpha, w->op(s2, e.s2) * Y);
                }
            }
        }
    }

    struct Eig {
        Eigen::VectorXd values;
        Eigen::MatrixXd vectors;
    };
    std::map<int, Eig> eig;
    std::vector<tn::Candidate> all;
    double trace = 0.0;
    for (auto& [m, s] : sec) {
        if (s.slabs.empty()) continue;
        Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(s.size, s.size);
        for (const auto& [w, slab] : s.slabs) rho.noalias() += w * slab * slab.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho);
        Eig& ev = eig[m];
        ev.values = es.eigenvalues().reverse();
        ev.vectors = es.eigenvectors().rowwise().reverse();
        for (int k = 0; k < ev.values.size(); ++k) {
            const double v = std::max(0.0, ev.values[k]);
            trace += v;
            all.push_back({v, m, k});
        }
    }
    if (trace <= 0.0) throw DegenerateError("dmrg: zero two-site wavefunction");
    for (auto& c : all) c.value = std::sqrt(c.value / trace);
    const auto kept = tn::select_kept(all, chiMax, std::max(svMin, 1e-7));
    std::map<int, std::vector<int>> keptBy;
    double keptW = 0.0;
    for (const auto& c : kept) {
        keptBy[c.charge].push_back(c.intra);
        keptW += c.value * c.value;
    }
    for (auto& [m, v] : keptBy) std::sort(v.begin(), v.end());

    std::vector<int> bc, bd;
    for (const auto& [m, v] : keptBy) {
        bc.push_back(m);
        bd.push_back(static_cast<int>(v.size()));
    }
    SplitResult r;
    r.discarded = std::max(0.0, 1.0 - keptW);
    const ChargeLeg phys = ChargeLeg::physical(d);
    if (moveRight) {
        ChargeLeg bond(bc, bd, LegDir::Out);
        BlockTensor A({legL, phys, bond}, 0);
        for (const auto& [m, idx] : keptBy) {
            const auto& s = sec[m];
            const int bs = bond.find(m);
            for (const auto& [qs, off] : s.offset) {
                const int a = legL.find(qs.first);
                DenseBlock& blk = A.block({a, qs.second, bs});
                auto mat = tn::matrix_view(blk, 2);
                for (std::size_t k = 0; k < idx.size(); ++k)
                    mat.col(static_cast<long>(k)) = eig[m].vectors.block(off, idx[k], mat.rows(), 1);
            }
        }
        A.prune(0.0);
        r.center = tn::contract(A.conj(), {0, 1}, theta, {0, 1});
        r.isometry = std::move(A);
    } else {
        ChargeLeg bond(bc, bd, LegDir::In);
        BlockTensor B({bond, phys, legR}, 0);
        for (const auto& [m, idx] : keptBy) {
            const auto& s = sec[m];
            const int bs = bond.find(m);
            for (const auto& [qs, off] : s.offset) {
                const int b = legR.find(qs.first);
                DenseBlock& blk = B.block({bs, qs.second, b});
                auto mat = tn::matrix_view(blk, 2);
                for (std::size_t k = 0; k < idx.size(); ++k)
                    mat.row(static_cast<long>(k)) = eig[m].vectors.block(off, idx[k], mat.cols(), 1).transpose();
            }
        }
        B.prune(0.0);
        r.center = tn::contract(theta, {2, 3}, B.conj(), {1, 2});
        r.isometry = std::move(B);
    }
    const double cn = r.center.norm();
    if (cn == 0.0) throw DegenerateError("dmrg: truncation removed all weight");
    r.center.scale(1.0 / cn);
    return r;
}

}  // namespace

DmrgResult run_dmrg(const model::ModelParams& params, const DmrgConfig& cfg, int targetN,
                    const tn::MPSState* initial) {
    params.validate();
    cfg.validate();
    const int L = params.L;
    const int d = params.d();
    if (targetN < 0 || targetN > L * params.nMax) throw DomainError("run_dmrg: unreachable particle-number sector");

    tn::MPSState start;
    if (initial) {
        if (initial->L != L || initial->d != d || initial->totalParticles != targetN)
            throw DomainError("run_dmrg: initial state does not match the problem");
        tn::MPSState copy = *initial;
        copy.chiMax = cfg.chiMax;
        start = tn::canonicalize(copy, cfg.svMin);
    } else {
        const auto occ = initial_occupations(params, targetN);
        start = tn::product_state(occ, d, cfg.chiMax);
    }

    const Mpo mpo = model::build_mpo(params);
    std::vector<BlockTensor> sites = start.sites;
    std::vector<Environment> LE(L + 1), RE(L + 1);
    LE[0] = tn::left_boundary(mpo);
    RE[L] = tn::right_boundary(mpo, targetN);
    for (int j = L - 1; j >= 2; --j) RE[j] = tn::extend_right(RE[j + 1], sites[j], mpo, j);

    ConvergenceReport rep;
    const double tol = cfg.energy_tol(L);
    double lastEnergy = 0.0;

    for (int sweep = 0; sweep < cfg.maxSweeps; ++sweep) {
        const double alpha = cfg.mixer_at(sweep);
        double sweepDiscard = 0.0;

        auto optimize = [&](int i, bool moveRight) {
            BlockTensor theta = tn::contract(sites[i], {2}, sites[i + 1], {0});
            const ThetaLayout lay = make_layout(theta);
            TwoSiteOperator H(LE[i], RE[i + 2], mpo, i, lay);
            Eigen::VectorXd v0 = pack(theta, lay);
            if (alpha > 0.0 || v0.norm() == 0.0) {
                std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(sweep) * 7919ULL +
                                    static_cast<std::uint64_t>(2 * i + (moveRight ? 0 : 1)));
                const double scale = v0.norm() > 0.0 ? 1e-6 * v0.norm() / std::sqrt(static_cast<double>(v0.size())) : 1.0;
                for (long k = 0; k < v0.size(); ++k) v0[k] += scale * uniform(rng, -1.0, 1.0);
            }
            LinearMap apply = [&H](const Eigen::VectorXd& x, Eigen::VectorXd& y) { H.apply(x, y); };
            const LanczosResult res = lanczos_ground(apply, v0, cfg.lanczosIters, cfg.lanczosTol);
            if (!res.converged) ++rep.lanczosUnconverged;
            lastEnergy = res.energy;
            BlockTensor opt = unpack(res.vector, lay);
            SplitResult sp = alpha > 0.0
                                 ? split_mixer(opt, lay, LE[i], RE[i + 2], mpo, i, moveRight, alpha, cfg.chiMax,
                                               cfg.svMin, targetN)
                                 : split_svd(opt, moveRight, cfg.chiMax, cfg.svMin);
            sweepDiscard = std::max(sweepDiscard, sp.discarded);
            if (moveRight) {
                sites[i] = std::move(sp.isometry);
                sites[i + 1] = std::move(sp.center);
                LE[i + 1] = tn::extend_left(LE[i], sites[i], mpo, i);
            } else {
                sites[i + 1] = std::move(sp.isometry);
                sites[i] = std::move(sp.center);
                RE[i + 1] = tn::extend_right(RE[i + 2], sites[i + 1], mpo, i + 1);
            }
        };

        for (int i = 0; i + 1 < L; ++i) optimize(i, i + 2 < L);
        rep.energyPerHalfSweep.push_back(lastEnergy);
        for (int i = L - 3; i >= 0; --i) optimize(i, false);
        rep.energyPerHalfSweep.push_back(lastEnergy);

        rep.energyPerSweep.push_back(lastEnergy);
        rep.sweepsUsed = sweep + 1;
        rep.discardedWeightMax = sweepDiscard;
        const auto& es = rep.energyPerSweep;
        if (es.size() >= 2 && alpha == 0.0 && std::abs(es[es.size() - 1] - es[es.size() - 2]) < tol) {
            rep.converged = true;
            break;
        }
    }

    tn::MPSState out;
    out.L = L;
    out.d = d;
    out.chiMax = cfg.chiMax;
    out.totalParticles = targetN;
    out.sites = std::move(sites);
    out.canonical = false;
    DmrgResult result{tn::canonicalize(out, cfg.svMin), rep};
    result.report.finalEnergy = tn::mpo_expectation(mpo, result.state);
    return result;
}

}  // namespace phasescout::dmrg
