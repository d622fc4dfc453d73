#include "phasescout/pipeline/lossmap.hpp"

#include "phasescout/errors.hpp"
#include "phasescout/format.hpp"
#include "phasescout/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phasescout::pipeline {

LossMap evaluate_loss_map(const ae::AEModel& model, const SweepGrid& grid, const std::vector<ae::TensorBuffer>& inputs,
                          const CellMask& trainRegion, InputKind kind, int jobs) {
    if (static_cast<int>(inputs.size()) != grid.cells() || static_cast<int>(trainRegion.size()) != grid.cells())
        throw DomainError("evaluate_loss_map: inputs do not cover the grid");
    for (const auto& x : inputs)
        if (x.shape != model.inputShape)
            throw RefusalError("evaluate_loss_map: input shape " + x.shape_string() + " does not match the model");
    LossMap m;
    m.nU = grid.nU;
    m.nV = grid.nV;
    m.kind = kind;
    m.trainRegion = trainRegion;
    m.loss.assign(grid.cells(), 0.0);
    parallel_for(grid.cells(), jobs,
                 [&](int k) { m.loss[k] = ae::reconstruction_loss(inputs[k], ae::ae_forward(model, inputs[k]).xBar); });
    return m;
}

double median(std::vector<double> v) {
    if (v.empty()) throw DomainError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double anomaly_threshold(const LossMap& map) {
    std::vector<double> train;
    for (std::size_t k = 0; k < map.loss.size(); ++k)
        if (map.trainRegion.at(k)) train.push_back(map.loss[k]);
    if (train.empty()) throw DomainError("anomaly_threshold: empty training region");
    const double med = median(train);
    std::vector<double> dev;
    for (double x : train) dev.push_back(std::abs(x - med));
    return med + 3.0 * median(dev);
}

int PhaseLabeling::unassigned() const {
    return static_cast<int>(std::count(labels.begin(), labels.end(), kUnassigned));
}

void assign_labels(PhaseLabeling& labeling, const LossMap& map, double threshold, int id, int iter) {
    if (labeling.labels.size() != map.loss.size()) throw DomainError("assign_labels: size mismatch");
    for (std::size_t k = 0; k < map.loss.size(); ++k) {
        if (labeling.labels[k] != kUnassigned) continue;
        if (map.trainRegion[k] || map.loss[k] <= threshold) {
            labeling.labels[k] = id;
            labeling.iteration[k] = iter;
        }
    }
    labeling.thresholds.push_back(threshold);
}

RegionProposal propose_region(const LossMap& map, const PhaseLabeling& labeling, double threshold, int minSize) {
    const int nU = map.nU, nV = map.nV, n = nU * nV;
    if (static_cast<int>(map.loss.size()) != n || static_cast<int>(labeling.labels.size()) != n)
        throw DomainError("propose_region: size mismatch");
    std::vector<char> hot(n, 0);
    for (int k = 0; k < n; ++k) hot[k] = labeling.labels[k] == kUnassigned && map.loss[k] > threshold;

    RegionProposal best;
    std::vector<int> comp(n, -1), bestCells;
    int nComp = 0;
    for (int start = 0; start < n; ++start) {
        if (!hot[start] || comp[start] >= 0) continue;
        std::vector<int> cells{start};
        comp[start] = nComp;
        for (std::size_t h = 0; h < cells.size(); ++h) {
            const int iu = cells[h] / nV, iv = cells[h] % nV;
            const int nb[4][2] = {{iu - 1, iv}, {iu + 1, iv}, {iu, iv - 1}, {iu, iv + 1}};
            for (const auto& p : nb) {
                if (p[0] < 0 || p[0] >= nU || p[1] < 0 || p[1] >= nV) continue;
                const int q = p[0] * nV + p[1];
                if (hot[q] && comp[q] < 0) {
                    comp[q] = nComp;
                    cells.push_back(q);
                }
            }
        }
        ++nComp;
        const int size = static_cast<int>(cells.size());
        if (size < minSize) continue;
        double mean = 0.0;
        for (int c : cells) mean += map.loss[c];
        mean /= size;
        double var = 0.0;
        for (int c : cells) var += (map.loss[c] - mean) * (map.loss[c] - mean);
        var /= size;
        const double rel = mean > 0.0 ? var / (mean * mean) : 0.0;
        const double score = size / (rel + 0.01);
        if (best.empty() || score > best.score || (score == best.score && size > best.componentSize)) {
            best.score = score;
            best.componentSize = size;
            bestCells = cells;
        }
    }
    if (best.empty()) return best;

    int uLo = nU, uHi = -1, vLo = nV, vHi = -1;
    for (int c : bestCells) {
        uLo = std::min(uLo, c / nV);
        uHi = std::max(uHi, c / nV);
        vLo = std::min(vLo, c % nV);
        vHi = std::max(vHi, c % nV);
    }
    CellMask region(n, 0);
    int kept = 0;
    for (int c : bestCells) {
        const int iu = c / nV, iv = c % nV;
        if (iu > uLo && iu < uHi && iv > vLo && iv < vHi) {
            region[c] = 1;
            ++kept;
        }
    }
    if (kept == 0)
        for (int c : bestCells) region[c] = 1;
    best.iuLo = nU;
    best.ivLo = nV;
    for (int c = 0; c < n; ++c)
        if (region[c]) {
            best.iuLo = std::min(best.iuLo, c / nV);
            best.iuHi = std::max(best.iuHi, c / nV);
            best.ivLo = std::min(best.ivLo, c % nV);
            best.ivHi = std::max(best.ivHi, c % nV);
        }
    best.region = std::move(region);
    return best;
}

std::string loss_map_csv(const SweepGrid& grid, const LossMap& map, const PhaseLabeling& labeling) {
    std::ostringstream os;
    os << "U,V,loss,assigned_label,iteration\n";
    for (int iu = 0; iu < grid.nU; ++iu)
        for (int iv = 0; iv < grid.nV; ++iv) {
            const int k = grid.index(iu, iv);
            os << format_double(grid.u(iu)) << ',' << format_double(grid.v(iv)) << ',' << format_double(map.loss.at(k))
               << ',' << labeling.labels.at(k) << ',' << labeling.iteration.at(k) << '\n';
        }
    return os.str();
}

std::string loss_map_pgm(const SweepGrid& grid, const LossMap& map) {
    std::vector<double> logs;
    for (double x : map.loss) logs.push_back(std::log10(std::max(x, 1e-300)));
    const double lo = *std::min_element(logs.begin(), logs.end());
    const double hi = *std::max_element(logs.begin(), logs.end());
    std::ostringstream os;
    os << "P2\n" << grid.nU << ' ' << grid.nV << "\n255\n";
    for (int iv = grid.nV - 1; iv >= 0; --iv) {
        for (int iu = 0; iu < grid.nU; ++iu) {
            const double f = hi > lo ? (logs[grid.index(iu, iv)] - lo) / (hi - lo) : 0.0;
            os << (iu ? " " : "") << static_cast<int>(std::lround(255.0 * f));
        }
        os << '\n';
    }
    return os.str();
}

std::string labels_csv(const SweepGrid& grid, const PhaseLabeling& labeling) {
    std::ostringstream os;
    os << "iu,iv,U,V,label,iteration\n";
    for (int iu = 0; iu < grid.nU; ++iu)
        for (int iv = 0; iv < grid.nV; ++iv) {
            const int k = grid.index(iu, iv);
            os << iu << ',' << iv << ',' << format_double(grid.u(iu)) << ',' << format_double(grid.v(iv)) << ','
               << labeling.labels.at(k) << ',' << labeling.iteration.at(k) << '\n';
        }
    return os.str();
}

}  // namespace phasescout::pipeline
