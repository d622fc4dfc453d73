#include "phasescout/cli/commands.hpp"

#include "phasescout/ae/checkpoint.hpp"
#include "phasescout/bytes.hpp"
#include "phasescout/errors.hpp"
#include "phasescout/format.hpp"
#include "phasescout/model/observables.hpp"
#include "phasescout/pipeline/cache.hpp"
#include "phasescout/pipeline/discover.hpp"
#include "phasescout/pipeline/supersolid.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace phasescout::cli {

namespace fs = std::filesystem;
using namespace pipeline;

RunConfig resolve_config(const Options& opt) {
    RunConfig c = opt.configPath.empty() ? default_run_config() : load_config(opt.configPath);
    if (const char* env = std::getenv("PHASESCOUT_CACHE"); env && *env) c.cachePath = env;
    try {
        if (opt.jobs) c.jobs = *opt.jobs;
        if (opt.seed) c.train.seed = *opt.seed;
        if (opt.inputKind) c.inputKind = parse_input_kind(*opt.inputKind);
        if (opt.maxIter) c.maxIter = *opt.maxIter;
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

namespace {

std::string out_file(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.outputPath);
    return (fs::path(c.outputPath) / name).string();
}

std::string cell_list(const std::vector<std::pair<int, int>>& cells) {
    std::ostringstream os;
    for (const auto& [iu, iv] : cells) os << " (" << iu << ',' << iv << ')';
    return os.str();
}

/// Runs a command body, mapping configuration problems to exit 64 and other failures to 1.
int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "phasescout: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "phasescout: " << e.what() << '\n';
        return kExitFailure;
    }
}

bool load_complete(const RunConfig& c, LoadedCache& cache, std::ostream& err) {
    cache = load_cache(c.grid, c.cachePath);
    if (cache.complete()) return true;
    err << "phasescout: cache '" << c.cachePath << "' is missing " << cache.missing.size()
        << " cell(s):" << cell_list(cache.missing) << "\nrun 'phasescout sweep' first\n";
    return false;
}

CellMask parse_regions(const RunConfig& c, const std::vector<std::string>& specs) {
    if (specs.empty()) return origin_block(c.grid, c.firstBlock);
    CellMask mask(c.grid.cells(), 0);
    for (const auto& s : specs) {
        std::vector<double> v;
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ',')) {
            try {
                v.push_back(parse_double(part));
            } catch (const DomainError&) {
                throw ConfigError("region '" + s + "': not a number");
            }
        }
        if (v.size() != 4 || v[1] < v[0] || v[3] < v[2])
            throw ConfigError("region '" + s + "' must be uLo,uHi,vLo,vHi with lo <= hi");
        mask = mask_union(mask, box_region(c.grid, v[0], v[1], v[2], v[3]));
    }
    if (mask_count(mask) == 0) throw ConfigError("training region contains no grid cells");
    return mask;
}

std::string region_text(const SweepGrid& g, const CellMask& m) {
    std::ostringstream os;
    os << "# iu iv\n";
    for (int k = 0; k < g.cells(); ++k)
        if (m[k]) os << k / g.nV << ' ' << k % g.nV << '\n';
    return os.str();
}

CellMask read_region(const SweepGrid& g, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read training region '" + path + "'");
    CellMask m(g.cells(), 0);
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int iu = -1, iv = -1;
        if (!(ls >> iu >> iv) || iu < 0 || iu >= g.nU || iv < 0 || iv >= g.nV)
            throw ConfigError("bad cell in training region '" + path + "': " + line);
        m[g.index(iu, iv)] = 1;
    }
    return m;
}

std::string bounds(double lo, double hi) { return "[" + format_double(lo) + ", " + format_double(hi) + "]"; }

std::string supersolid_table(const std::vector<SupersolidRow>& rows) {
    std::ostringstream os;
    int n = 0;
    for (const auto& r : rows) n += r.candidate;
    os << "supersolid probe: " << n << " candidate cell(s) of " << rows.size() << "\n";
    os << "U,V,O_SF,O_DW,S,R_SF,R_DW,converged,candidate\n";
    for (const auto& r : rows)
        if (r.candidate)
            os << format_double(r.U) << ',' << format_double(r.V) << ',' << format_double(r.oSF) << ','
               << format_double(r.oDW) << ',' << format_double(r.S) << ',' << format_double(r.rSF) << ','
               << format_double(r.rDW) << ',' << r.converged << ',' << r.candidate << '\n';
    return os.str();
}

void write_loss_map(const RunConfig& c, int iteration, const LossMap& map, const PhaseLabeling& labels) {
    const std::string stem = "lossmap_" + std::to_string(iteration);
    write_text_atomic(out_file(c, stem + ".csv"), loss_map_csv(c.grid, map, labels));
    write_text_atomic(out_file(c, stem + ".pgm"), loss_map_pgm(c.grid, map));
}

}  // namespace

std::string region_summary(const SweepGrid& grid, const LoadedCache& cache, const PhaseLabeling& labeling) {
    std::map<int, std::vector<int>> byLabel;
    for (int k = 0; k < grid.cells(); ++k) byLabel[labeling.labels.at(k)].push_back(k);
    std::ostringstream os;
    for (const auto& [label, cells] : byLabel) {
        double uLo = 1e300, uHi = -1e300, vLo = 1e300, vHi = -1e300;
        std::vector<double> sf, dw, hi, s, xi;
        for (int k : cells) {
            const double u = grid.u(k / grid.nV), v = grid.v(k % grid.nV);
            uLo = std::min(uLo, u);
            uHi = std::max(uHi, u);
            vLo = std::min(vLo, v);
            vHi = std::max(vHi, v);
            if (!cache.records.at(k)) continue;
            const auto& o = cache.records[k]->observables;
            sf.push_back(o.oSF);
            dw.push_back(o.oDW);
            hi.push_back(o.oHI);
            s.push_back(o.structureFactor);
            xi.push_back(o.xi);
        }
        os << (label == kUnassigned ? std::string("unassigned") : "phase " + std::to_string(label)) << ": "
           << cells.size() << " cells, U in " << bounds(uLo, uHi) << ", V in " << bounds(vLo, vHi);
        if (!sf.empty())
            os << "; median O_SF " << format_double(median(sf)) << ", O_DW " << format_double(median(dw)) << ", O_HI "
               << format_double(median(hi)) << ", S " << format_double(median(s)) << ", xi "
               << format_double(median(xi));
        os << '\n';
    }
    return os.str();
}

int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig c = resolve_config(opt);
        out << "sweeping " << c.grid.nU << "x" << c.grid.nV << " grid into '" << c.cachePath << "'\n";
        const auto summary = sweep_groundstates(c.grid, c.cachePath, c.jobs, [&](const CellStatus& s) {
            out << "cell (" << s.iu << ',' << s.iv << ") U=" << format_double(c.grid.u(s.iu))
                << " V=" << format_double(c.grid.v(s.iv)) << " E=" << format_double(s.energy) << ' '
                << (s.converged ? "converged" : "FLAGGED") << (s.cached ? " cached" : "")
                << (s.replaced ? " replaced" : "") << '\n'
                << std::flush;
        });
        out << summary.computed << " computed, " << summary.cached << " cached";
        if (summary.replaced) out << ", " << summary.replaced << " replaced";
        out << '\n';
        if (!summary.flagged.empty()) {
            err << "phasescout: " << summary.flagged.size() << " cell(s) did not converge:"
                << cell_list(summary.flagged) << '\n';
            return static_cast<int>(kExitFlagged);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig c = resolve_config(opt);
        const CellMask region = parse_regions(c, opt.regions);
        LoadedCache cache = load_cache(c.grid, c.cachePath);
        std::vector<std::pair<int, int>> missing;
        for (const auto& [iu, iv] : cache.missing)
            if (region[c.grid.index(iu, iv)]) missing.emplace_back(iu, iv);
        if (!missing.empty()) {
            err << "phasescout: training region has no records for" << cell_list(missing) << '\n';
            return static_cast<int>(kExitIncompleteCache);
        }
        const auto d = c.discover_config();
        const auto inputs = extract_all(cache, d.kind, d.arch.poolSize * d.arch.poolSize);
        ae::TrainConfig tc = d.train;
        tc.seed = iteration_seed(d, 0);
        const auto t = train_region(cache, inputs, region, d.arch, tc, tc.seed);
        ae::save_model(t.result.model, out_file(c, "model.aem"));
        write_text_atomic(out_file(c, "train_region.txt"), region_text(c.grid, region));
        std::ostringstream curve;
        curve << "epoch,loss\n0," << format_double(t.result.initialLoss) << '\n';
        for (std::size_t e = 0; e < t.result.lossCurve.size(); ++e)
            curve << e + 1 << ',' << format_double(t.result.lossCurve[e]) << '\n';
        write_text_atomic(out_file(c, "train_loss.csv"), curve.str());
        out << "trained on " << t.samples << " cells (" << t.skippedFlagged << " flagged skipped), input "
            << to_string(d.kind) << ", initial loss " << format_double(t.result.initialLoss) << ", best epoch "
            << t.result.bestEpoch + 1 << ", final loss "
            << format_double(t.result.lossCurve.empty() ? t.result.initialLoss : t.result.lossCurve.back())
            << (t.result.diverged ? " (diverged)" : "") << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_scan(const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig c = resolve_config(opt);
        LoadedCache cache;
        if (!load_complete(c, cache, err)) return static_cast<int>(kExitIncompleteCache);
        const std::string modelPath = opt.modelPath.empty() ? out_file(c, "model.aem") : opt.modelPath;
        const std::string regionPath = opt.regionPath.empty() ? out_file(c, "train_region.txt") : opt.regionPath;
        const ae::AEModel model = ae::load_model(modelPath);
        const CellMask region = read_region(c.grid, regionPath);
        const auto inputs = extract_all(cache, c.inputKind, c.arch.poolSize * c.arch.poolSize);
        LossMap map = evaluate_loss_map(model, c.grid, inputs, region, c.inputKind, c.jobs);
        map.modelRef = modelPath;
        PhaseLabeling labels(c.grid.cells());
        const double thr = anomaly_threshold(map);
        assign_labels(labels, map, thr, 1, 1);
        write_loss_map(c, 1, map, labels);
        out << "scanned " << c.grid.cells() << " cells, threshold " << format_double(thr) << ", "
            << c.grid.cells() - labels.unassigned() << " at or below threshold\n";
        return static_cast<int>(kExitOk);
    });
}

int cmd_discover(const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig c = resolve_config(opt);
        LoadedCache cache;
        if (!load_complete(c, cache, err)) return static_cast<int>(kExitIncompleteCache);
        std::ostringstream report;
        report << "input kind " << to_string(c.inputKind) << ", grid " << c.grid.nU << "x" << c.grid.nV << ", L "
               << c.grid.model.L << "\n\n";
        const auto result = discover_phases(c.grid, cache, c.discover_config(), [&](const IterationResult& r) {
            write_loss_map(c, r.iteration, r.lossMap, r.labelsAfter);
            int assigned = 0;
            for (int k = 0; k < c.grid.cells(); ++k) assigned += r.labelsAfter.iteration[k] == r.iteration;
            std::ostringstream line;
            line << "iteration " << r.iteration << ": trained on " << r.training.samples << " cells, loss "
                 << format_double(r.training.result.initialLoss) << " -> "
                 << format_double(r.training.result.lossCurve.empty() ? r.training.result.initialLoss
                                                                      : r.training.result.lossCurve.back())
                 << ", threshold " << format_double(r.threshold) << ", labeled " << assigned << " cells";
            if (!r.next.empty())
                line << ", next region U in " << bounds(c.grid.u(r.next.iuLo), c.grid.u(r.next.iuHi)) << ", V in "
                     << bounds(c.grid.v(r.next.ivLo), c.grid.v(r.next.ivHi)) << " (" << mask_count(r.next.region)
                     << " cells)";
            out << line.str() << '\n' << std::flush;
            report << line.str() << '\n';
        });
        write_text_atomic(out_file(c, "labels.csv"), labels_csv(c.grid, result.labeling));
        report << '\n' << region_summary(c.grid, cache, result.labeling);
        if (result.oscillation) report << "\nstopped: " << result.diagnostic << '\n';
        if (opt.probeSS) {
            const CellMask all(c.grid.cells(), 1);
            report << '\n' << supersolid_table(supersolid_probe(c.grid, cache, all, c.supersolid));
        }
        write_text_atomic(out_file(c, "report.txt"), report.str());
        if (result.oscillation) err << "phasescout: " << result.diagnostic << '\n';
        out << result.iterations.size() << " iteration(s), " << result.labeling.unassigned()
            << " cells unassigned; report in " << out_file(c, "report.txt") << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_observables(const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig c = resolve_config(opt);
        LoadedCache cache;
        if (!load_complete(c, cache, err)) return static_cast<int>(kExitIncompleteCache);
        std::ostringstream os;
        os << "U,V,O_SF,O_DW,O_HI,S_entropy,S_structure,xi,R_SF,R_DW,R_HI,energy,converged\n";
        for (int k = 0; k < c.grid.cells(); ++k) {
            const auto& r = cache.at(k);
            const auto& o = r.observables;
            const int L = r.params.L;
            os << format_double(r.params.U) << ',' << format_double(r.params.V) << ',' << format_double(o.oSF) << ','
               << format_double(o.oDW) << ',' << format_double(o.oHI) << ','
               << format_double(o.entropyProfile.at(L / 2 - 1)) << ',' << format_double(o.structureFactor) << ','
               << format_double(o.xi) << ',' << format_double(o.rSF) << ',' << format_double(o.rDW) << ','
               << format_double(o.rHI) << ',' << format_double(r.energy) << ',' << r.convergence.converged << '\n';
        }
        write_text_atomic(out_file(c, "observables.csv"), os.str());
        out << "wrote " << c.grid.cells() << " rows to " << out_file(c, "observables.csv") << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_fidelity(const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig c = resolve_config(opt);
        if (opt.axis != "U" && opt.axis != "V") throw ConfigError("--axis must be U or V");
        if (!opt.fixed || !std::isfinite(*opt.fixed)) throw ConfigError("--fixed needs a finite value");
        if (opt.points < 2) throw ConfigError("--points must be at least 2");
        const bool alongU = opt.axis == "U";
        const double lo = alongU ? c.grid.uMin : c.grid.vMin, hi = alongU ? c.grid.uMax : c.grid.vMax;
        std::vector<model::ModelParams> cut;
        std::vector<double> xs;
        for (int i = 0; i < opt.points; ++i) {
            model::ModelParams p = c.grid.model;
            const double x = lo + (hi - lo) * i / (opt.points - 1);
            (alongU ? p.U : p.V) = x;
            (alongU ? p.V : p.U) = *opt.fixed;
            try {
                p.validate();
            } catch (const DomainError& e) {
                throw ConfigError(e.what());
            }
            cut.push_back(p);
            xs.push_back(x);
        }
        out << "fidelity along " << opt.axis << " at " << (alongU ? "V" : "U") << " = " << format_double(*opt.fixed)
            << ", " << opt.points << " points\n"
            << std::flush;
        const auto f = model::fidelity_scan(cut, c.grid.dmrg, -1, c.jobs);
        std::ostringstream full, off;
        full << "i,j,F\n";
        for (int i = 0; i < opt.points; ++i)
            for (int j = 0; j < opt.points; ++j) full << i << ',' << j << ',' << format_double(f.F(i, j)) << '\n';
        off << "i," << opt.axis << "_i," << opt.axis << "_next,F\n";
        for (int i = 0; i + 1 < opt.points; ++i)
            off << i << ',' << format_double(xs[i]) << ',' << format_double(xs[i + 1]) << ','
                << format_double(f.F(i, i + 1)) << '\n';
        std::ostringstream pts;
        pts << "i," << opt.axis << ",energy,O_SF,O_DW,O_HI,S_structure,converged\n";
        for (int i = 0; i < opt.points; ++i) {
            const auto& o = f.observables[i];
            pts << i << ',' << format_double(xs[i]) << ',' << format_double(f.energies[i]) << ','
                << format_double(o.oSF) << ',' << format_double(o.oDW) << ',' << format_double(o.oHI) << ','
                << format_double(o.structureFactor) << ',' << f.converged[i] << '\n';
        }
        write_text_atomic(out_file(c, "fidelity.csv"), full.str());
        write_text_atomic(out_file(c, "fidelity_offdiag.csv"), off.str());
        write_text_atomic(out_file(c, "fidelity_points.csv"), pts.str());
        const auto flagged = std::count(f.converged.begin(), f.converged.end(), false);
        out << "wrote " << out_file(c, "fidelity.csv") << ", " << out_file(c, "fidelity_offdiag.csv") << " and "
            << out_file(c, "fidelity_points.csv") << '\n';
        if (flagged) {
            err << "phasescout: " << flagged << " point(s) did not converge\n";
            return static_cast<int>(kExitFlagged);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_report(const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig c = resolve_config(opt);
        const LoadedCache cache = load_cache(c.grid, c.cachePath);
        std::ostringstream os;
        int flagged = 0;
        double dwMax = 0.0;
        for (const auto& r : cache.records)
            if (r) {
                flagged += !r->convergence.converged;
                dwMax = std::max(dwMax, r->convergence.discardedWeightMax);
            }
        os << "cache '" << c.cachePath << "': " << c.grid.cells() - static_cast<int>(cache.missing.size()) << " of "
           << c.grid.cells() << " records, " << flagged << " flagged, largest discarded weight "
           << format_double(dwMax) << '\n';
        if (!cache.missing.empty()) os << "missing:" << cell_list(cache.missing) << '\n';
        const std::string labelsPath = (fs::path(c.outputPath) / "labels.csv").string();
        if (fs::exists(labelsPath)) {
            PhaseLabeling labels(c.grid.cells());
            std::ifstream f(labelsPath);
            std::string line;
            std::getline(f, line);
            while (std::getline(f, line)) {
                std::vector<std::string> cols;
                std::stringstream ls(line);
                std::string part;
                while (std::getline(ls, part, ',')) cols.push_back(part);
                if (cols.size() != 6) throw RecordError("labels.csv: bad row '" + line + "'");
                const int iu = parse_int(cols[0]), iv = parse_int(cols[1]);
                if (iu < 0 || iu >= c.grid.nU || iv < 0 || iv >= c.grid.nV)
                    throw RecordError("labels.csv: cell outside the grid");
                labels.labels[c.grid.index(iu, iv)] = parse_int(cols[4]);
                labels.iteration[c.grid.index(iu, iv)] = parse_int(cols[5]);
            }
            os << "\nlabels from " << labelsPath << ":\n" << region_summary(c.grid, cache, labels);
        }
        if (opt.probeSS && cache.complete()) {
            const CellMask all(c.grid.cells(), 1);
            os << '\n' << supersolid_table(supersolid_probe(c.grid, cache, all, c.supersolid));
        }
        out << os.str();
        return static_cast<int>(cache.complete() ? kExitOk : kExitIncompleteCache);
    });
}

}  // namespace phasescout::cli
