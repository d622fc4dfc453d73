#include "phasescout/pipeline/grid.hpp"

#include "phasescout/errors.hpp"

#include <algorithm>
#include <cmath>

namespace phasescout::pipeline {

void SweepGrid::validate() const {
    if (nU < 2 || nV < 2) throw DomainError("SweepGrid: need at least 2 points per axis");
    if (!(uMax > uMin) || !(vMax > vMin)) throw DomainError("SweepGrid: ranges must be non-degenerate");
    if (!std::isfinite(uMin) || !std::isfinite(uMax) || !std::isfinite(vMin) || !std::isfinite(vMax))
        throw DomainError("SweepGrid: ranges must be finite");
    model::ModelParams p = model;
    p.U = uMin;
    p.V = vMin;
    p.validate();
    dmrg.validate();
}

double SweepGrid::u(int iu) const { return uMin + (uMax - uMin) * iu / (nU - 1); }
double SweepGrid::v(int iv) const { return vMin + (vMax - vMin) * iv / (nV - 1); }

model::ModelParams SweepGrid::params(int iu, int iv) const {
    if (iu < 0 || iu >= nU || iv < 0 || iv >= nV) throw DomainError("SweepGrid: cell out of range");
    model::ModelParams p = model;
    p.U = u(iu);
    p.V = v(iv);
    return p;
}

CellMask box_region(const SweepGrid& g, double uLo, double uHi, double vLo, double vHi) {
    CellMask m(g.cells(), 0);
    const double eps = 1e-9;
    for (int iu = 0; iu < g.nU; ++iu)
        for (int iv = 0; iv < g.nV; ++iv)
            if (g.u(iu) >= uLo - eps && g.u(iu) <= uHi + eps && g.v(iv) >= vLo - eps && g.v(iv) <= vHi + eps)
                m[g.index(iu, iv)] = 1;
    return m;
}

CellMask origin_block(const SweepGrid& g, int size) {
    if (size < 1) throw DomainError("origin_block: size must be positive");
    CellMask m(g.cells(), 0);
    for (int iu = 0; iu < std::min(size, g.nU); ++iu)
        for (int iv = 0; iv < std::min(size, g.nV); ++iv) m[g.index(iu, iv)] = 1;
    return m;
}

int mask_count(const CellMask& mask) { return static_cast<int>(std::count(mask.begin(), mask.end(), 1)); }

CellMask mask_union(const CellMask& a, const CellMask& b) {
    if (a.size() != b.size()) throw DomainError("mask_union: size mismatch");
    CellMask m(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) m[k] = a[k] || b[k];
    return m;
}

}  // namespace phasescout::pipeline
