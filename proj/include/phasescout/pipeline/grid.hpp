#pragma once

#include "phasescout/dmrg/dmrg.hpp"
#include "phasescout/model/ebh.hpp"

#include <vector>

namespace phasescout::pipeline {

/// Rectangular (U, V) grid; cell (iu, iv) sits at U = uMin + iu * (uMax - uMin) / (nU - 1).
struct SweepGrid {
    double uMin = 0.0, uMax = 5.0;
    double vMin = 0.0, vMax = 5.0;
    int nU = 15, nV = 15;
    model::ModelParams model;   ///< t, nMax and L; U and V are set per cell
    dmrg::DmrgConfig dmrg;

    void validate() const;
    int cells() const { return nU * nV; }
    int index(int iu, int iv) const { return iu * nV + iv; }
    double u(int iu) const;
    double v(int iv) const;
    model::ModelParams params(int iu, int iv) const;
    /// Particle number per cell (unit filling).
    int particles() const { return model.L; }
};

/// Per-cell boolean mask in grid index order.
using CellMask = std::vector<char>;

/// Cells whose (U, V) lie in the closed box (with 1e-9 slack).
CellMask box_region(const SweepGrid& grid, double uLo, double uHi, double vLo, double vHi);
/// The size x size block of cells at (iu, iv) = (0, 0).
CellMask origin_block(const SweepGrid& grid, int size);
int mask_count(const CellMask& mask);
CellMask mask_union(const CellMask& a, const CellMask& b);

}  // namespace phasescout::pipeline
