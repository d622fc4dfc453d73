#include "phasescout/pipeline/cache.hpp"

#include "phasescout/bytes.hpp"
#include "phasescout/errors.hpp"
#include "phasescout/format.hpp"
#include "phasescout/parallel.hpp"

#include <filesystem>
#include <mutex>
#include <sstream>

namespace phasescout::pipeline {

namespace fs = std::filesystem;

namespace {

bool same_dmrg(const dmrg::DmrgConfig& a, const dmrg::DmrgConfig& b) {
    return a.chiMax == b.chiMax && a.maxSweeps == b.maxSweeps && a.energyTol == b.energyTol &&
           a.lanczosIters == b.lanczosIters && a.lanczosTol == b.lanczosTol && a.mixerStrength == b.mixerStrength &&
           a.mixerDecay == b.mixerDecay && a.mixerSweeps == b.mixerSweeps && a.svMin == b.svMin && a.seed == b.seed;
}

std::string cell_path(const std::string& store, int iu, int iv) {
    return (fs::path(store) / record_filename(iu, iv)).string();
}

std::optional<GroundStateRecord> try_load(const SweepGrid& grid, const std::string& path, int iu, int iv,
                                          bool* present) {
    *present = fs::exists(path);
    if (!*present) return std::nullopt;
    try {
        GroundStateRecord r = decode_record(read_file(path));
        r.check_complete();
        if (!record_matches(r, grid, iu, iv)) return std::nullopt;
        return r;
    } catch (const RecordError&) {
        return std::nullopt;
    }
}

}  // namespace

bool record_matches(const GroundStateRecord& r, const SweepGrid& grid, int iu, int iv) {
    const model::ModelParams p = grid.params(iu, iv);
    return r.iu == iu && r.iv == iv && r.params.t == p.t && r.params.U == p.U && r.params.V == p.V &&
           r.params.nMax == p.nMax && r.params.L == p.L && r.particles == grid.particles() &&
           same_dmrg(r.dmrg, grid.dmrg);
}

GroundStateRecord compute_cell(const SweepGrid& grid, int iu, int iv) {
    const model::ModelParams p = grid.params(iu, iv);
    const auto result = dmrg::run_dmrg(p, grid.dmrg, grid.particles());
    return make_record(iu, iv, p, grid.dmrg, result);
}

std::string manifest_path(const std::string& store) { return (fs::path(store) / "manifest.txt").string(); }

SweepSummary sweep_groundstates(const SweepGrid& grid, const std::string& store, int jobs, const CellCallback& onCell) {
    grid.validate();
    fs::create_directories(store);
    const int n = grid.cells();
    std::vector<CellStatus> status(n);
    std::vector<std::uint32_t> checksums(n);
    std::mutex mutex;

    parallel_for(n, jobs, [&](int k) {
        const int iu = k / grid.nV, iv = k % grid.nV;
        const std::string path = cell_path(store, iu, iv);
        CellStatus& s = status[k];
        s.iu = iu;
        s.iv = iv;
        bool present = false;
        auto existing = try_load(grid, path, iu, iv, &present);
        std::vector<unsigned char> bytes;
        if (existing) {
            s.cached = true;
            s.converged = existing->convergence.converged;
            s.energy = existing->energy;
            bytes = read_file(path);
        } else {
            s.replaced = present;
            const GroundStateRecord r = compute_cell(grid, iu, iv);
            bytes = encode_record(r);
            write_file_atomic(path, bytes);
            s.converged = r.convergence.converged;
            s.energy = r.energy;
        }
        checksums[k] = record_checksum(bytes);
        if (onCell) {
            std::lock_guard<std::mutex> lock(mutex);
            onCell(s);
        }
    });

    SweepSummary summary;
    std::ostringstream m;
    m << "# iu iv U V t n_max L N energy converged crc32\n";
    for (int k = 0; k < n; ++k) {
        const CellStatus& s = status[k];
        if (s.cached)
            ++summary.cached;
        else
            ++summary.computed;
        if (s.replaced) ++summary.replaced;
        if (!s.converged) summary.flagged.emplace_back(s.iu, s.iv);
        char crc[16];
        std::snprintf(crc, sizeof crc, "%08x", checksums[k]);
        m << s.iu << ' ' << s.iv << ' ' << format_double(grid.u(s.iu)) << ' ' << format_double(grid.v(s.iv)) << ' '
          << format_double(grid.model.t) << ' ' << grid.model.nMax << ' ' << grid.model.L << ' ' << grid.particles()
          << ' ' << format_double(s.energy) << ' ' << (s.converged ? 1 : 0) << ' ' << crc << '\n';
    }
    write_text_atomic(manifest_path(store), m.str());
    return summary;
}

const GroundStateRecord& LoadedCache::at(int index) const {
    const auto& r = records.at(index);
    if (!r) throw RecordError("cache: cell " + std::to_string(index) + " has no valid record");
    return *r;
}

LoadedCache load_cache(const SweepGrid& grid, const std::string& store) {
    grid.validate();
    LoadedCache c;
    c.records.resize(grid.cells());
    for (int iu = 0; iu < grid.nU; ++iu)
        for (int iv = 0; iv < grid.nV; ++iv) {
            bool present = false;
            c.records[grid.index(iu, iv)] = try_load(grid, cell_path(store, iu, iv), iu, iv, &present);
            if (!c.records[grid.index(iu, iv)]) c.missing.emplace_back(iu, iv);
        }
    return c;
}

}  // namespace phasescout::pipeline
