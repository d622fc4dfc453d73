#include "phasescout/tn/block_tensor.hpp"

#include "phasescout/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

namespace phasescout::tn {

namespace {

std::size_t product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    return n;
}

std::vector<std::size_t> strides_of(const std::vector<int>& shape) {
    std::vector<std::size_t> st(shape.size(), 1);
    for (int k = static_cast<int>(shape.size()) - 2; k >= 0; --k)
        st[k] = st[k + 1] * static_cast<std::size_t>(shape[k + 1]);
    return st;
}

bool is_identity(std::span<const int> perm) {
    for (std::size_t k = 0; k < perm.size(); ++k)
        if (perm[k] != static_cast<int>(k)) return false;
    return true;
}

}  // namespace

// ---------------------------------------------------------------- ChargeLeg

ChargeLeg::ChargeLeg(std::vector<int> c, std::vector<int> deg, LegDir d)
    : charges(std::move(c)), degeneracies(std::move(deg)), dir(d) {
    if (charges.size() != degeneracies.size())
        throw DomainError("ChargeLeg: charges and degeneracies differ in length");
    for (std::size_t k = 0; k < charges.size(); ++k) {
        if (degeneracies[k] < 1) throw DomainError("ChargeLeg: degeneracy must be >= 1");
        if (k > 0 && charges[k] <= charges[k - 1])
            throw DomainError("ChargeLeg: charges must be strictly increasing");
    }
}

ChargeLeg ChargeLeg::physical(int d, LegDir dir) {
    std::vector<int> c(d);
    std::iota(c.begin(), c.end(), 0);
    return ChargeLeg(std::move(c), std::vector<int>(d, 1), dir);
}

ChargeLeg ChargeLeg::trivial(int charge, LegDir dir) { return ChargeLeg({charge}, {1}, dir); }

int ChargeLeg::dim() const { return std::accumulate(degeneracies.begin(), degeneracies.end(), 0); }

int ChargeLeg::find(int charge) const {
    auto it = std::lower_bound(charges.begin(), charges.end(), charge);
    if (it == charges.end() || *it != charge) return -1;
    return static_cast<int>(it - charges.begin());
}

int ChargeLeg::offset(int s) const {
    return std::accumulate(degeneracies.begin(), degeneracies.begin() + s, 0);
}

ChargeLeg ChargeLeg::flipped() const {
    ChargeLeg l = *this;
    l.dir = dir == LegDir::In ? LegDir::Out : LegDir::In;
    return l;
}

bool ChargeLeg::same_space(const ChargeLeg& o) const {
    return charges == o.charges && degeneracies == o.degeneracies;
}

// --------------------------------------------------------------- DenseBlock

DenseBlock::DenseBlock(std::vector<int> s) : shape(std::move(s)), data(product(shape), 0.0) {}

double DenseBlock::max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
}

DenseBlock permute_block(const DenseBlock& in, std::span<const int> perm) {
    const int r = static_cast<int>(in.shape.size());
    if (is_identity(perm)) return in;
    std::vector<int> outShape(r);
    for (int k = 0; k < r; ++k) outShape[k] = in.shape[perm[k]];
    DenseBlock out(outShape);
    const auto inSt = strides_of(in.shape);
    // stride in the input for each output axis
    std::vector<std::size_t> st(r);
    for (int k = 0; k < r; ++k) st[k] = inSt[perm[k]];

    std::vector<int> idx(r, 0);
    std::size_t src = 0;
    const std::size_t n = out.data.size();
    for (std::size_t dst = 0; dst < n; ++dst) {
        out.data[dst] = in.data[src];
        for (int k = r - 1; k >= 0; --k) {
            if (++idx[k] < outShape[k]) {
                src += st[k];
                break;
            }
            src -= st[k] * static_cast<std::size_t>(outShape[k] - 1);
            idx[k] = 0;
        }
    }
    return out;
}

RowMatrixMap matrix_view(DenseBlock& b, int rowAxes) {
    long rows = 1;
    for (int k = 0; k < rowAxes; ++k) rows *= b.shape[k];
    const long cols = rows == 0 ? 0 : static_cast<long>(b.data.size()) / rows;
    return RowMatrixMap(b.data.data(), rows, cols);
}

ConstRowMatrixMap matrix_view(const DenseBlock& b, int rowAxes) {
    long rows = 1;
    for (int k = 0; k < rowAxes; ++k) rows *= b.shape[k];
    const long cols = rows == 0 ? 0 : static_cast<long>(b.data.size()) / rows;
    return ConstRowMatrixMap(b.data.data(), rows, cols);
}

// -------------------------------------------------------------- BlockTensor

BlockTensor::BlockTensor(std::vector<ChargeLeg> legs, int totalCharge)
    : legs_(std::move(legs)), total_(totalCharge) {}

bool BlockTensor::allowed(const Key& key) const {
    if (key.size() != legs_.size()) return false;
    int sum = 0;
    for (std::size_t k = 0; k < key.size(); ++k) {
        if (key[k] < 0 || key[k] >= legs_[k].sectors()) return false;
        sum += legs_[k].sign() * legs_[k].charges[key[k]];
    }
    return sum == total_;
}

std::vector<int> BlockTensor::block_shape(const Key& key) const {
    std::vector<int> s(key.size());
    for (std::size_t k = 0; k < key.size(); ++k) s[k] = legs_[k].degeneracies[key[k]];
    return s;
}

DenseBlock& BlockTensor::block(const Key& key) {
    auto it = blocks_.find(key);
    if (it != blocks_.end()) return it->second;
    if (!allowed(key)) throw DomainError("BlockTensor: block violates charge conservation");
    return blocks_.emplace(key, DenseBlock(block_shape(key))).first->second;
}

const DenseBlock* BlockTensor::find(const Key& key) const {
    auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
}

DenseBlock* BlockTensor::find(const Key& key) {
    auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
}

double BlockTensor::squared_norm() const {
    double s = 0.0;
    for (const auto& [k, b] : blocks_)
        for (double v : b.data) s += v * v;
    return s;
}

double BlockTensor::norm() const { return std::sqrt(squared_norm()); }

void BlockTensor::scale(double f) {
    for (auto& [k, b] : blocks_)
        for (double& v : b.data) v *= f;
}

void BlockTensor::prune(double tol) {
    for (auto it = blocks_.begin(); it != blocks_.end();) {
        if (it->second.max_abs() <= tol)
            it = blocks_.erase(it);
        else
            ++it;
    }
}

BlockTensor BlockTensor::conj() const {
    BlockTensor t = *this;
    for (auto& l : t.legs_) l = l.flipped();
    t.total_ = -total_;
    return t;
}

BlockTensor BlockTensor::permute(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != rank()) throw DomainError("permute: rank mismatch");
    std::vector<ChargeLeg> legs(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) legs[k] = legs_.at(perm[k]);
    BlockTensor out(std::move(legs), total_);
    for (const auto& [key, b] : blocks_) {
        Key nk(perm.size());
        for (std::size_t k = 0; k < perm.size(); ++k) nk[k] = key[perm[k]];
        out.blocks_.emplace(std::move(nk), permute_block(b, perm));
    }
    return out;
}

void BlockTensor::check() const {
    for (const auto& [key, b] : blocks_) {
        if (!allowed(key)) throw InvariantError("BlockTensor: stored block breaks conservation");
        if (b.shape != block_shape(key)) throw InvariantError("BlockTensor: block shape mismatch");
        if (b.data.size() != product(b.shape)) throw InvariantError("BlockTensor: block size mismatch");
    }
}

std::vector<double> BlockTensor::to_dense() const {
    std::vector<int> dims(legs_.size());
    for (std::size_t k = 0; k < legs_.size(); ++k) dims[k] = legs_[k].dim();
    std::vector<double> out(product(dims), 0.0);
    const auto st = strides_of(dims);
    for (const auto& [key, b] : blocks_) {
        std::vector<int> off(key.size());
        for (std::size_t k = 0; k < key.size(); ++k) off[k] = legs_[k].offset(key[k]);
        const auto bst = strides_of(b.shape);
        for (std::size_t e = 0; e < b.data.size(); ++e) {
            std::size_t rem = e, pos = 0;
            for (std::size_t k = 0; k < key.size(); ++k) {
                const std::size_t ik = rem / bst[k];
                rem %= bst[k];
                pos += (ik + static_cast<std::size_t>(off[k])) * st[k];
            }
            out[pos] = b.data[e];
        }
    }
    return out;
}

BlockTensor BlockTensor::from_dense(std::vector<ChargeLeg> legs, int totalCharge,
                                    std::span<const double> data, double tol) {
    BlockTensor t(std::move(legs), totalCharge);
    std::vector<int> dims(t.legs_.size());
    for (std::size_t k = 0; k < dims.size(); ++k) dims[k] = t.legs_[k].dim();
    if (data.size() != product(dims)) throw DomainError("from_dense: size mismatch");
    const auto st = strides_of(dims);

    // map every dense index on each leg to (sector, intra)
    std::vector<std::vector<std::pair<int, int>>> where(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const auto& l = t.legs_[k];
        for (int s = 0; s < l.sectors(); ++s)
            for (int a = 0; a < l.degeneracies[s]; ++a) where[k].emplace_back(s, a);
    }
    Key key(dims.size());
    std::vector<int> intra(dims.size());
    for (std::size_t pos = 0; pos < data.size(); ++pos) {
        std::size_t rem = pos;
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const std::size_t ik = rem / st[k];
            rem %= st[k];
            key[k] = where[k][ik].first;
            intra[k] = where[k][ik].second;
        }
        const double v = data[pos];
        if (!t.allowed(key)) {
            if (std::abs(v) > tol) throw DomainError("from_dense: weight in a forbidden block");
            continue;
        }
        if (v == 0.0 && !t.find(key)) continue;
        DenseBlock& b = t.block(key);
        const auto bst = strides_of(b.shape);
        std::size_t e = 0;
        for (std::size_t k = 0; k < dims.size(); ++k) e += static_cast<std::size_t>(intra[k]) * bst[k];
        b.data[e] = v;
    }
    return t;
}

// ----------------------------------------------------------------- contract

BlockTensor contract(const BlockTensor& a, std::span<const int> axesA, const BlockTensor& b,
                     std::span<const int> axesB) {
    if (axesA.size() != axesB.size()) throw DomainError("contract: axis lists differ in length");
    const int nc = static_cast<int>(axesA.size());
    for (int k = 0; k < nc; ++k) {
        const auto& la = a.leg(axesA[k]);
        const auto& lb = b.leg(axesB[k]);
        if (!la.same_space(lb)) throw DomainError("contract: contracted legs are different spaces");
        if (la.dir == lb.dir) throw DomainError("contract: contracted legs must have opposite directions");
    }

    std::vector<int> freeA, freeB;
    for (int k = 0; k < a.rank(); ++k)
        if (std::find(axesA.begin(), axesA.end(), k) == axesA.end()) freeA.push_back(k);
    for (int k = 0; k < b.rank(); ++k)
        if (std::find(axesB.begin(), axesB.end(), k) == axesB.end()) freeB.push_back(k);

    std::vector<ChargeLeg> legs;
    for (int k : freeA) legs.push_back(a.leg(k));
    for (int k : freeB) legs.push_back(b.leg(k));
    BlockTensor out(std::move(legs), a.total_charge() + b.total_charge());

    std::vector<int> permA(freeA), permB(axesB.begin(), axesB.end());
    permA.insert(permA.end(), axesA.begin(), axesA.end());
    permB.insert(permB.end(), freeB.begin(), freeB.end());

    // b blocks grouped by their contracted sectors, permuted to (contracted | free)
    struct Prepared {
        const BlockTensor::Key* key;
        DenseBlock mat;
    };
    std::map<BlockTensor::Key, std::vector<Prepared>> byContracted;
    for (const auto& [key, blk] : b.blocks()) {
        BlockTensor::Key ck(nc);
        for (int k = 0; k < nc; ++k) ck[k] = key[axesB[k]];
        byContracted[ck].push_back({&key, permute_block(blk, permB)});
    }

    BlockTensor::Key ck(nc), ok(freeA.size() + freeB.size());
    for (const auto& [keyA, blkA] : a.blocks()) {
        for (int k = 0; k < nc; ++k) ck[k] = keyA[axesA[k]];
        auto it = byContracted.find(ck);
        if (it == byContracted.end()) continue;
        const DenseBlock pa = permute_block(blkA, permA);
        const auto ma = matrix_view(pa, static_cast<int>(freeA.size()));
        for (std::size_t k = 0; k < freeA.size(); ++k) ok[k] = keyA[freeA[k]];
        for (const auto& pb : it->second) {
            for (std::size_t k = 0; k < freeB.size(); ++k) ok[freeA.size() + k] = (*pb.key)[freeB[k]];
            const auto mb = matrix_view(pb.mat, nc);
            DenseBlock& dst = out.block(ok);
            RowMatrixMap md(dst.data.data(), ma.rows(), mb.cols());
            md.noalias() += ma * mb;
        }
    }
    return out;
}

double trace(const BlockTensor& t) {
    if (t.rank() != 2) throw DomainError("trace: rank-2 tensor expected");
    if (!t.leg(0).same_space(t.leg(1))) throw DomainError("trace: legs are different spaces");
    double s = 0.0;
    for (const auto& [key, b] : t.blocks()) {
        if (key[0] != key[1]) continue;
        s += matrix_view(b, 1).trace();
    }
    return s;
}

}  // namespace phasescout::tn
