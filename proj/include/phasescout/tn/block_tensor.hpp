#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace phasescout::tn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;

/// Flow direction of a leg. Conservation reads sum_legs sign * charge == totalCharge.
enum class LegDir : int { In = 1, Out = -1 };

/// One index of a U(1) symmetric tensor: a list of particle-number sectors,
/// each with a degeneracy. Charges are strictly increasing.
struct ChargeLeg {
    std::vector<int> charges;
    std::vector<int> degeneracies;
    LegDir dir = LegDir::In;

    ChargeLeg() = default;
    ChargeLeg(std::vector<int> charges, std::vector<int> degeneracies, LegDir dir);

    /// Occupation-number leg 0..d-1, each sector one-dimensional.
    static ChargeLeg physical(int d, LegDir dir = LegDir::In);
    /// Single sector of dimension one (chain boundary).
    static ChargeLeg trivial(int charge, LegDir dir);

    int sign() const { return static_cast<int>(dir); }
    int sectors() const { return static_cast<int>(charges.size()); }
    int dim() const;
    /// Sector index holding `charge`, or -1.
    int find(int charge) const;
    /// Offset of sector `s` within the dense index range.
    int offset(int s) const;
    ChargeLeg flipped() const;
    bool same_space(const ChargeLeg& other) const;
};

/// Dense row-major array holding one block.
struct DenseBlock {
    std::vector<int> shape;
    std::vector<double> data;

    DenseBlock() = default;
    explicit DenseBlock(std::vector<int> shape);

    std::size_t size() const { return data.size(); }
    double max_abs() const;
};

/// Reorder the axes of a dense block: result axis k is input axis perm[k].
DenseBlock permute_block(const DenseBlock& in, std::span<const int> perm);

/// Block-sparse tensor conserving a U(1) charge. Blocks are keyed by one sector
/// index per leg; absent blocks are exactly zero.
class BlockTensor {
public:
    using Key = std::vector<int>;

    BlockTensor() = default;
    BlockTensor(std::vector<ChargeLeg> legs, int totalCharge = 0);

    int rank() const { return static_cast<int>(legs_.size()); }
    const ChargeLeg& leg(int i) const { return legs_.at(i); }
    const std::vector<ChargeLeg>& legs() const { return legs_; }
    int total_charge() const { return total_; }

    bool allowed(const Key& key) const;
    std::vector<int> block_shape(const Key& key) const;

    /// Block for `key`, inserted as zeros when absent. Throws on a forbidden key.
    DenseBlock& block(const Key& key);
    const DenseBlock* find(const Key& key) const;
    DenseBlock* find(const Key& key);
    void erase(const Key& key) { blocks_.erase(key); }
    const std::map<Key, DenseBlock>& blocks() const { return blocks_; }
    std::map<Key, DenseBlock>& blocks() { return blocks_; }

    double squared_norm() const;
    double norm() const;
    void scale(double factor);
    /// Drop blocks whose entries are all within `tol` of zero.
    void prune(double tol = 0.0);

    /// Complex conjugate; for real data this flips every leg and the total charge.
    BlockTensor conj() const;
    BlockTensor permute(std::span<const int> perm) const;
    BlockTensor permute(std::initializer_list<int> perm) const {
        return permute(std::span<const int>(perm.begin(), perm.size()));
    }

    /// Throws InvariantError if a stored block breaks conservation or has the wrong shape.
    void check() const;

    /// Full row-major dense array over all leg dimensions.
    std::vector<double> to_dense() const;
    /// Inverse of to_dense. Entries in forbidden blocks must be within `tol` of zero.
    static BlockTensor from_dense(std::vector<ChargeLeg> legs, int totalCharge,
                                  std::span<const double> data, double tol = 1e-12);

private:
    std::vector<ChargeLeg> legs_;
    int total_ = 0;
    std::map<Key, DenseBlock> blocks_;
};

/// Tensordot: contracts a's legs `axesA` with b's legs `axesB` (pairwise). Paired
/// legs must describe the same space with opposite directions. Result legs are
/// a's free legs followed by b's free legs.
BlockTensor contract(const BlockTensor& a, std::span<const int> axesA, const BlockTensor& b,
                     std::span<const int> axesB);
inline BlockTensor contract(const BlockTensor& a, std::initializer_list<int> axesA,
                            const BlockTensor& b, std::initializer_list<int> axesB) {
    return contract(a, std::span<const int>(axesA.begin(), axesA.size()), b,
                    std::span<const int>(axesB.begin(), axesB.size()));
}

/// Sum over matching blocks of the trace on legs (0, 1) of a rank-2 tensor.
double trace(const BlockTensor& t);

/// Matrix view of a block whose first `rowAxes` axes are grouped into rows.
RowMatrixMap matrix_view(DenseBlock& b, int rowAxes);
ConstRowMatrixMap matrix_view(const DenseBlock& b, int rowAxes);

}  // namespace phasescout::tn
