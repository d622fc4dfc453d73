#include "phasescout/pipeline/supersolid.hpp"

#include "phasescout/errors.hpp"
#include "phasescout/parallel.hpp"

namespace phasescout::pipeline {

std::vector<SupersolidRow> supersolid_probe(const SweepGrid& grid, const LoadedCache& cache, const CellMask& region,
                                            const SupersolidThresholds& th) {
    if (static_cast<int>(region.size()) != grid.cells()) throw DomainError("supersolid_probe: region outside the grid");
    std::vector<SupersolidRow> rows;
    for (int iu = 0; iu < grid.nU; ++iu)
        for (int iv = 0; iv < grid.nV; ++iv) {
            const int k = grid.index(iu, iv);
            if (!region[k]) continue;
            const auto& r = cache.at(k);
            const auto& o = r.observables;
            SupersolidRow row;
            row.iu = iu;
            row.iv = iv;
            row.U = r.params.U;
            row.V = r.params.V;
            row.oSF = o.oSF;
            row.oDW = o.oDW;
            row.S = o.structureFactor;
            row.rSF = o.rSF;
            row.rDW = o.rDW;
            row.converged = r.convergence.converged;
            row.candidate = o.rSF > th.superfluid && o.oDW > th.densityWave && o.structureFactor > th.structure;
            rows.push_back(row);
        }
    return rows;
}

std::vector<HoleRow> hole_study(const model::ModelParams& params, const dmrg::DmrgConfig& config, int maxHoles,
                                int jobs) {
    params.validate();
    if (maxHoles < 0 || maxHoles >= params.L) throw DomainError("hole_study: hole count out of range");
    std::vector<HoleRow> rows(maxHoles + 1);
    parallel_for(maxHoles + 1, jobs, [&](int h) {
        const auto res = dmrg::run_dmrg(params, config, params.L - h);
        const auto corr = model::all_correlators(res.state);
        const auto o = model::measure(res.state, corr);
        HoleRow& row = rows[h];
        row.holes = h;
        row.N = params.L - h;
        row.energy = res.report.finalEnergy;
        row.S = o.structureFactor;
        row.oSF = o.oSF;
        row.oDW = o.oDW;
        row.converged = res.report.converged;
    });
    return rows;
}

}  // namespace phasescout::pipeline
