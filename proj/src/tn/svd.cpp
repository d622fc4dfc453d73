#include "phasescout/tn/svd.hpp"

#include "phasescout/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace phasescout::tn {

void SchmidtSpectrum::validate() const {
    if (values.size() != sectorLabels.size())
        throw InvariantError("SchmidtSpectrum: values and labels differ in length");
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] < 0.0) throw InvariantError("SchmidtSpectrum: negative value");
        if (k > 0 && values[k] > values[k - 1]) throw InvariantError("SchmidtSpectrum: not descending");
        s += values[k] * values[k];
    }
    if (std::abs(s - 1.0) > 1e-10) throw InvariantError("SchmidtSpectrum: not normalized");
}

Bond Bond::trivial(int charge) { return Bond{ChargeLeg::trivial(charge, LegDir::In), {{1.0}}}; }

SchmidtSpectrum Bond::spectrum() const {
    std::vector<Candidate> all;
    for (int s = 0; s < leg.sectors(); ++s)
        for (int a = 0; a < static_cast<int>(values[s].size()); ++a)
            all.push_back({values[s][a], leg.charges[s], a});
    std::stable_sort(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) {
        if (x.value != y.value) return x.value > y.value;
        if (x.charge != y.charge) return x.charge < y.charge;
        return x.intra < y.intra;
    });
    SchmidtSpectrum sp;
    for (const auto& c : all) {
        sp.values.push_back(c.value);
        sp.sectorLabels.push_back(c.charge);
    }
    return sp;
}

std::vector<Candidate> select_kept(std::vector<Candidate> all, int chiMax, double cutoff) {
    std::sort(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) {
        if (x.value != y.value) return x.value > y.value;
        if (x.charge != y.charge) return x.charge < y.charge;
        return x.intra < y.intra;
    });
    std::vector<Candidate> kept;
    for (const auto& c : all) {
        if (static_cast<int>(kept.size()) >= chiMax) break;
        if (!kept.empty() && c.value < cutoff) break;
        kept.push_back(c);
    }
    return kept;
}

namespace {

// Rows (or columns) of one charge sector of the grouped matrix.
struct SideIndex {
    std::map<std::vector<int>, int> offset;  // partial key -> row offset
    int size = 0;
};

struct SectorMatrix {
    SideIndex rows, cols;
    Eigen::MatrixXd mat;
    Eigen::MatrixXd u, v;
    Eigen::VectorXd s;
};

}  // namespace

TruncatedSplit block_svd_truncate(const BlockTensor& theta, int rowLegs, int chiMax, double svMin) {
    if (chiMax < 1) throw DomainError("block_svd_truncate: chiMax must be >= 1");
    if (rowLegs < 1 || rowLegs >= theta.rank())
        throw DomainError("block_svd_truncate: invalid row/column split");

    const double nrm = theta.norm();
    if (!std::isfinite(nrm)) throw DomainError("block_svd_truncate: non-finite input");
    if (nrm == 0.0) throw DegenerateError("block_svd_truncate: all-zero tensor");

    auto rowCharge = [&](const BlockTensor::Key& key) {
        int q = 0;
        for (int k = 0; k < rowLegs; ++k) q += theta.leg(k).sign() * theta.leg(k).charges[key[k]];
        return q;
    };
    auto blockRows = [&](const BlockTensor::Key& key) {
        int r = 1;
        for (int k = 0; k < rowLegs; ++k) r *= theta.leg(k).degeneracies[key[k]];
        return r;
    };
    auto blockCols = [&](const BlockTensor::Key& key) {
        int c = 1;
        for (int k = rowLegs; k < theta.rank(); ++k) c *= theta.leg(k).degeneracies[key[k]];
        return c;
    };

    // Group blocks by the charge flowing through the cut.
    std::map<int, SectorMatrix> sectors;
    for (const auto& [key, b] : theta.blocks()) {
        auto& sm = sectors[rowCharge(key)];
        std::vector<int> rk(key.begin(), key.begin() + rowLegs), ck(key.begin() + rowLegs, key.end());
        if (!sm.rows.offset.count(rk)) {
            sm.rows.offset[rk] = sm.rows.size;
            sm.rows.size += blockRows(key);
        }
        if (!sm.cols.offset.count(ck)) {
            sm.cols.offset[ck] = sm.cols.size;
            sm.cols.size += blockCols(key);
        }
    }
    std::vector<Candidate> all;
    for (auto& [q, sm] : sectors) {
        sm.mat = Eigen::MatrixXd::Zero(sm.rows.size, sm.cols.size);
        for (const auto& [key, b] : theta.blocks()) {
            if (rowCharge(key) != q) continue;
            std::vector<int> rk(key.begin(), key.begin() + rowLegs), ck(key.begin() + rowLegs, key.end());
            sm.mat.block(sm.rows.offset[rk], sm.cols.offset[ck], blockRows(key), blockCols(key)) =
                matrix_view(b, rowLegs);
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(sm.mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
        sm.u = svd.matrixU();
        sm.v = svd.matrixV();
        sm.s = svd.singularValues() / nrm;
        for (int a = 0; a < sm.s.size(); ++a) all.push_back({sm.s[a], q, a});
    }

    double total = 0.0;
    for (const auto& c : all) total += c.value * c.value;
    const auto kept = select_kept(all, chiMax, svMin);
    double keptW = 0.0;
    std::map<int, std::vector<int>> keptBySector;  // charge -> intra indices (descending value)
    for (const auto& c : kept) {
        keptW += c.value * c.value;
        keptBySector[c.charge].push_back(c.intra);
    }
    for (auto& [q, v] : keptBySector) std::sort(v.begin(), v.end());

    TruncatedSplit out;
    out.discardedWeight = std::max(0.0, (total - keptW) / total);
    const double renorm = 1.0 / std::sqrt(keptW);

    std::vector<int> bc, bd;
    for (const auto& [q, v] : keptBySector) {
        bc.push_back(q);
        bd.push_back(static_cast<int>(v.size()));
    }
    ChargeLeg bondOut(bc, bd, LegDir::Out);
    out.bond.leg = bondOut.flipped();
    for (const auto& [q, v] : keptBySector) {
        std::vector<double> vals;
        for (int a : v) vals.push_back(sectors[q].s[a] * renorm);
        out.bond.values.push_back(std::move(vals));
    }

    std::vector<ChargeLeg> leftLegs(theta.legs().begin(), theta.legs().begin() + rowLegs);
    leftLegs.push_back(bondOut);
    std::vector<ChargeLeg> rightLegs{bondOut.flipped()};
    rightLegs.insert(rightLegs.end(), theta.legs().begin() + rowLegs, theta.legs().end());
    out.left = BlockTensor(std::move(leftLegs), 0);
    out.right = BlockTensor(std::move(rightLegs), theta.total_charge());

    for (const auto& [q, idx] : keptBySector) {
        const auto& sm = sectors[q];
        const int bs = bondOut.find(q);
        const int nk = static_cast<int>(idx.size());
        for (const auto& [rk, off] : sm.rows.offset) {
            BlockTensor::Key key(rk);
            key.push_back(bs);
            DenseBlock& b = out.left.block(key);
            auto m = matrix_view(b, rowLegs);
            for (int a = 0; a < nk; ++a) m.col(a) = sm.u.block(off, idx[a], m.rows(), 1);
        }
        for (const auto& [ck, off] : sm.cols.offset) {
            BlockTensor::Key key{bs};
            key.insert(key.end(), ck.begin(), ck.end());
            DenseBlock& b = out.right.block(key);
            auto m = matrix_view(b, 1);
            for (int a = 0; a < nk; ++a) m.row(a) = sm.v.block(off, idx[a], m.cols(), 1).transpose();
        }
    }
    return out;
}

double entanglement_entropy(const SchmidtSpectrum& spectrum) {
    double norm = 0.0;
    for (double v : spectrum.values) norm += v * v;
    if (std::abs(norm - 1.0) > 1e-10) throw InvariantError("entanglement_entropy: spectrum not normalized");
    double s = 0.0;
    for (double v : spectrum.values) {
        const double p = v * v;
        if (p > 0.0) s -= p * std::log2(p);
    }
    return std::max(0.0, s);
}

}  // namespace phasescout::tn
