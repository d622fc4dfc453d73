#pragma once

#include "phasescout/ae/model.hpp"
#include "phasescout/pipeline/grid.hpp"
#include "phasescout/pipeline/inputs.hpp"

#include <string>
#include <vector>

namespace phasescout::pipeline {

inline constexpr int kUnassigned = -1;

struct LossMap {
    int nU = 0, nV = 0;
    std::vector<double> loss;  ///< grid index order
    CellMask trainRegion;
    InputKind kind = InputKind::ES;
    std::string modelRef;      ///< checkpoint file the map was produced with, if any
};

/// Reconstruction loss of every cell. Inputs are in grid index order.
LossMap evaluate_loss_map(const ae::AEModel& model, const SweepGrid& grid, const std::vector<ae::TensorBuffer>& inputs,
                          const CellMask& trainRegion, InputKind kind, int jobs = 1);

double median(std::vector<double> v);
/// Median + 3 * median absolute deviation of the training-region losses.
double anomaly_threshold(const LossMap& map);

struct PhaseLabeling {
    std::vector<int> labels;      ///< phase id per cell or kUnassigned
    std::vector<int> iteration;   ///< iteration that assigned the label, or -1
    std::vector<double> thresholds;  ///< one per iteration

    explicit PhaseLabeling(int cells = 0) : labels(cells, kUnassigned), iteration(cells, -1) {}
    int unassigned() const;
};

/// Give every training cell and every unassigned cell at or below `threshold` the label `id`.
void assign_labels(PhaseLabeling& labeling, const LossMap& map, double threshold, int id, int iter);

struct RegionProposal {
    CellMask region;          ///< empty when nothing is anomalous
    int iuLo = 0, iuHi = -1, ivLo = 0, ivHi = -1;  ///< bounding box of the proposed cells
    int componentSize = 0;
    double score = 0.0;

    bool empty() const { return componentSize == 0; }
};

/// Connected (4-neighbour) components of unassigned cells above `threshold`,
/// ranked by size / (var / mean^2 + 0.01). The winner's bounding box is shrunk by
/// one cell on every side and intersected with the component; if nothing is left
/// the whole component is returned. Components smaller than `minSize` are ignored.
RegionProposal propose_region(const LossMap& map, const PhaseLabeling& labeling, double threshold, int minSize = 1);

/// `U,V,loss,assigned_label,iteration`, one row per cell in grid index order.
std::string loss_map_csv(const SweepGrid& grid, const LossMap& map, const PhaseLabeling& labeling);
/// Plain P2 grayscale of log10(loss); one row per V value from v_max down to v_min, one column per U value.
std::string loss_map_pgm(const SweepGrid& grid, const LossMap& map);
/// `iu,iv,U,V,label,iteration`.
std::string labels_csv(const SweepGrid& grid, const PhaseLabeling& labeling);

}  // namespace phasescout::pipeline
