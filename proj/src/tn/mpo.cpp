#include "phasescout/tn/mpo.hpp"

#include "phasescout/errors.hpp"

namespace phasescout::tn {

int sector_dim(const ChargeLeg& leg, int charge) {
    const int s = leg.find(charge);
    return s < 0 ? 0 : leg.degeneracies[s];
}

namespace {

const DenseBlock* site_block(const BlockTensor& t, int qL, int sigma) {
    const int a = t.leg(0).find(qL);
    if (a < 0) return nullptr;
    const int b = t.leg(2).find(qL + sigma);
    if (b < 0) return nullptr;
    return t.find({a, sigma, b});
}

void accumulate(std::map<int, Eigen::MatrixXd>& into, int key, const Eigen::MatrixXd& m) {
    auto it = into.find(key);
    if (it == into.end())
        into.emplace(key, m);
    else
        it->second += m;
}

}  // namespace

Environment left_boundary(const Mpo& mpo) {
    Environment e;
    e.channels.resize(mpo.D);
    e.channels[0].emplace(0, Eigen::MatrixXd::Ones(1, 1));
    return e;
}

Environment right_boundary(const Mpo& mpo, int totalParticles) {
    Environment e;
    e.channels.resize(mpo.D);
    e.channels[mpo.D - 1].emplace(totalParticles, Eigen::MatrixXd::Ones(1, 1));
    return e;
}

Environment extend_left(const Environment& env, const BlockTensor& A, const Mpo& mpo, int index) {
    Environment out;
    out.channels.resize(mpo.D);
    const int d = mpo.d;
    const auto& terms = mpo.sites.at(index);
    for (int a = 0; a < mpo.D; ++a) {
        for (const auto& [qL, E] : env.channels[a]) {
            for (int s = 0; s < d; ++s) {
                const DenseBlock* ket = site_block(A, qL, s);
                if (!ket) continue;
                const Eigen::MatrixXd T = E * matrix_view(*ket, 2);
                const int qR = qL + s;
                for (const auto& term : terms) {
                    if (term.from != a) continue;
                    const int sp = s + term.shift;
                    if (sp < 0 || sp >= d) continue;
                    const double c = term.op(sp, s);
                    if (c == 0.0) continue;
                    const DenseBlock* bra = site_block(A, qL + mpo.channelCharge[a], sp);
                    if (!bra) continue;
                    accumulate(out.channels[term.to], qR, c * (matrix_view(*bra, 2).transpose() * T));
                }
            }
        }
    }
    return out;
}

Environment extend_right(const Environment& env, const BlockTensor& B, const Mpo& mpo, int index) {
    Environment out;
    out.channels.resize(mpo.D);
    const int d = mpo.d;
    const auto& terms = mpo.sites.at(index);
    for (int c = 0; c < mpo.D; ++c) {
        for (const auto& [qR, R] : env.channels[c]) {
            for (int s = 0; s < d; ++s) {
                const int qL = qR - s;
                const DenseBlock* ket = site_block(B, qL, s);
                if (!ket) continue;
                const Eigen::MatrixXd T = R * matrix_view(*ket, 2).transpose();
                for (const auto& term : terms) {
                    if (term.to != c) continue;
                    const int sp = s + term.shift;
                    if (sp < 0 || sp >= d) continue;
                    const double w = term.op(sp, s);
                    if (w == 0.0) continue;
                    const DenseBlock* bra = site_block(B, qL + mpo.channelCharge[term.from], sp);
                    if (!bra) continue;
                    accumulate(out.channels[term.from], qL, w * (matrix_view(*bra, 2) * T));
                }
            }
        }
    }
    return out;
}

double mpo_expectation(const Mpo& mpo, const MPSState& state) {
    if (mpo.L != state.L || mpo.d != state.d) throw DomainError("mpo_expectation: shape mismatch");
    Environment env = left_boundary(mpo);
    for (int i = 0; i < state.L; ++i) env = extend_left(env, state.sites[i], mpo, i);
    double e = 0.0;
    for (const auto& [q, m] : env.channels[mpo.D - 1]) e += m(0, 0);
    return e;
}

}  // namespace phasescout::tn
