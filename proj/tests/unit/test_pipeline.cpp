#include "phasescout/errors.hpp"
#include "phasescout/pipeline/cache.hpp"
#include "phasescout/pipeline/discover.hpp"
#include "phasescout/pipeline/inputs.hpp"
#include "phasescout/pipeline/lossmap.hpp"
#include "phasescout/pipeline/supersolid.hpp"
#include "phasescout/tn/mps.hpp"

#include "oracle.hpp"

#include <doctest.h>

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace phasescout;
using namespace phasescout::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("phasescout_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

SweepGrid small_grid() {
    SweepGrid g;
    g.uMin = 1.0;
    g.uMax = 7.0;
    g.vMin = 0.0;
    g.vMax = 4.0;
    g.nU = 3;
    g.nV = 3;
    g.model.L = 6;
    g.model.nMax = 2;
    g.dmrg.chiMax = 27;
    return g;
}

/// Swept once and shared by the tests below.
const fs::path& small_store() {
    static const fs::path p = [] {
        const fs::path dir = fresh_dir("small");
        sweep_groundstates(small_grid(), dir.string());
        return dir;
    }();
    return p;
}

GroundStateRecord product_record(std::vector<int> occ, int nMax, int chi) {
    model::ModelParams p;
    p.L = static_cast<int>(occ.size());
    p.nMax = nMax;
    p.U = 10.0;
    dmrg::DmrgConfig c;
    c.chiMax = chi;
    dmrg::DmrgResult res;
    res.state = tn::canonicalize(tn::product_state(occ, nMax + 1, chi));
    res.report.converged = true;
    return make_record(0, 0, p, c, res);
}

LossMap synthetic_map(int nU, int nV, std::vector<double> loss, CellMask train) {
    LossMap m;
    m.nU = nU;
    m.nV = nV;
    m.loss = std::move(loss);
    m.trainRegion = std::move(train);
    return m;
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("grid geometry and masks") {
    SweepGrid g;
    g.validate();
    CHECK(g.u(0) == 0.0);
    CHECK(g.u(14) == 5.0);
    CHECK(g.v(7) == doctest::Approx(2.5));
    CHECK(g.index(2, 3) == 33);
    CHECK(g.params(1, 2).U == doctest::Approx(5.0 / 14));
    CHECK(g.particles() == 32);
    CHECK(mask_count(origin_block(g, 3)) == 9);
    CHECK(origin_block(g, 3)[g.index(2, 2)]);
    CHECK(!origin_block(g, 3)[g.index(3, 0)]);
    CHECK(mask_count(box_region(g, 0.0, 1.0, 4.0, 5.0)) == 3 * 3);
    CHECK(mask_count(mask_union(origin_block(g, 2), origin_block(g, 3))) == 9);
    SweepGrid bad = g;
    bad.nU = 1;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = g;
    bad.uMax = -1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("record encoding round trip and corruption") {
    const auto r = product_record({1, 2, 0, 1, 1, 2, 0, 1}, 2, 8);
    r.check_complete();
    const auto bytes = encode_record(r);
    CHECK(std::string(bytes.begin(), bytes.begin() + 6) == "EBHGS1");
    const auto back = decode_record(bytes);
    CHECK(encode_record(back) == bytes);
    CHECK(back.params.L == 8);
    CHECK(back.particles == 8);
    CHECK(back.corrDW == r.corrDW);
    CHECK(back.observables.densityProfile == r.observables.densityProfile);
    CHECK(back.spectra.size() == 7);

    const std::uint32_t stored = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                 static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8 |
                                 static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16 |
                                 static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24;
    const std::size_t header = 6 + 4 + 8;
    const auto zcrc = static_cast<std::uint32_t>(
        ::crc32(0L, bytes.data() + header, static_cast<uInt>(bytes.size() - header - 4)));
    CHECK(stored == zcrc);
    CHECK(record_checksum(bytes) == zcrc);

    auto flip = bytes;
    flip[header + 20] ^= 0x10;
    CHECK_THROWS_AS(decode_record(flip), RecordError);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_record(magic), RecordError);
    auto version = bytes;
    version[6] = 9;
    CHECK_THROWS_AS(decode_record(version), RecordError);
    auto cut = bytes;
    cut.resize(bytes.size() / 2);
    CHECK_THROWS_AS(decode_record(cut), RecordError);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(decode_record(extra), RecordError);
    CHECK_THROWS_AS(decode_record({}), RecordError);
    CHECK(record_filename(3, 11) == "u3_v11.gsr");

    GroundStateRecord missing = r;
    missing.corrSF.resize(0, 0);
    CHECK_THROWS_AS(missing.check_complete(), RecordError);
}

TEST_CASE("input extraction") {
    const auto r = product_record({1, 1, 1, 1, 1, 1, 1, 1}, 3, 10);
    const auto es = extract_input(r, InputKind::ES);
    CHECK(es.shape == std::vector<int>{1, 12});
    CHECK(es.data[0] == doctest::Approx(1.0));
    for (int k = 1; k < 12; ++k) CHECK(es.data[k] == 0.0);

    const auto th = extract_input(r, InputKind::THETA);
    CHECK(th.shape == std::vector<int>{4, 12, 12});
    for (std::size_t v = 0; v < th.size(); ++v) CHECK(std::abs(th.data[v]) == (v == 144 ? 1.0 : 0.0));

    const auto csf = extract_input(r, InputKind::CSF);
    CHECK(csf.shape == std::vector<int>{8, 8});
    double m = 0.0;
    for (double x : csf.data) m = std::max(m, std::abs(x));
    CHECK(m == doctest::Approx(1.0));

    CHECK(input_shape(InputKind::CSF, 50, 4, 32) == std::vector<int>{32, 32});
    CHECK(input_shape(InputKind::ES, 50, 4, 32) == std::vector<int>{1, 52});
    CHECK(pad_to(50, 4) == 52);
    CHECK(pad_to(52, 4) == 52);
    CHECK(parse_input_kind("THETA") == InputKind::THETA);
    CHECK_THROWS_AS(parse_input_kind("foo"), DomainError);
    GroundStateRecord broken = r;
    broken.spectra.clear();
    CHECK_THROWS_AS(extract_input(broken, InputKind::ES), RecordError);
}

TEST_CASE("sweep fills, reuses and repairs the cache") {
    const SweepGrid g = small_grid();
    const fs::path dir = fresh_dir("sweep");
    std::vector<CellStatus> seen;
    const auto first = sweep_groundstates(g, dir.string(), 2, [&](const CellStatus& s) { seen.push_back(s); });
    CHECK(first.computed == 9);
    CHECK(first.cached == 0);
    CHECK(seen.size() == 9);
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir)) files += e.path().extension() == ".gsr";
    CHECK(files == 9);

    const auto lines = lines_of(std::ifstream(manifest_path(dir.string())) ? [&] {
        std::ifstream in(manifest_path(dir.string()));
        return std::string(std::istreambuf_iterator<char>(in), {});
    }() : std::string());
    REQUIRE(lines.size() == 10);
    CHECK(lines[0].rfind("# iu iv U V t n_max L N energy converged crc32", 0) == 0);
    for (std::size_t k = 1; k < lines.size(); ++k) {
        std::istringstream row(lines[k]);
        int iu, iv, nMax, L, N, conv;
        double U, V, t, E;
        std::string crc;
        row >> iu >> iv >> U >> V >> t >> nMax >> L >> N >> E >> conv >> crc;
        REQUIRE(!row.fail());
        CHECK(U == doctest::Approx(g.u(iu)));
        CHECK(V == doctest::Approx(g.v(iv)));
        CHECK(L == 6);
        CHECK(N == 6);
        const auto bytes = read_bytes(dir / record_filename(iu, iv));
        char buf[16];
        std::snprintf(buf, sizeof buf, "%08x", record_checksum(bytes));
        CHECK(crc == buf);
        CHECK(decode_record(bytes).energy == doctest::Approx(E).epsilon(1e-12));
    }

    const auto before = read_bytes(dir / record_filename(1, 1));
    const auto second = sweep_groundstates(g, dir.string());
    CHECK(second.computed == 0);
    CHECK(second.cached == 9);

    auto corrupt = before;
    corrupt[corrupt.size() / 2] ^= 0xff;
    write_bytes(dir / record_filename(1, 1), corrupt);
    fs::remove(dir / record_filename(2, 0));
    CHECK(load_cache(g, dir.string()).missing.size() == 2);
    const auto third = sweep_groundstates(g, dir.string());
    CHECK(third.computed == 2);
    CHECK(third.replaced == 1);
    CHECK(third.cached == 7);
    CHECK(read_bytes(dir / record_filename(1, 1)) == before);

    SweepGrid other = g;
    other.dmrg.chiMax = 12;
    const auto stale = load_cache(other, dir.string());
    CHECK(stale.missing.size() == 9);
    CHECK(!stale.complete());
    CHECK(!record_matches(decode_record(before), other, 1, 1));
    CHECK(record_matches(decode_record(before), g, 1, 1));
    CHECK(!record_matches(decode_record(before), g, 1, 2));
}

TEST_CASE("cached records agree with exact diagonalization") {
    const SweepGrid g = small_grid();
    const auto cache = load_cache(g, small_store().string());
    REQUIRE(cache.complete());
    const oracle::FullSpace space{6, 3};
    for (int iu = 0; iu < 3; iu += 2)
        for (int iv = 0; iv < 3; iv += 2) {
            const auto& r = cache.at(g.index(iu, iv));
            const auto ed = oracle::sector_ground(g.params(iu, iv), 6);
            CHECK(r.energy == doctest::Approx(ed.energy).epsilon(1e-7));
            const auto dense = oracle::dense_correlators(space, ed.psi, 6);
            CHECK((r.corrDW - dense.dw).cwiseAbs().maxCoeff() < 1e-4);
            const auto sch = oracle::dense_schmidt(space, ed.psi, 3);
            CHECK(r.spectra[2].values[0] == doctest::Approx(sch[0]).epsilon(1e-5));
        }
}

TEST_CASE("records are bitwise deterministic") {
    const SweepGrid g = small_grid();
    const auto a = encode_record(compute_cell(g, 2, 1));
    const auto b = encode_record(compute_cell(g, 2, 1));
    CHECK(a == b);
    CHECK(read_bytes(small_store() / record_filename(2, 1)) == a);
}

TEST_CASE("threshold and labeling") {
    CHECK(median({3, 1, 2}) == 2);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    CHECK_THROWS_AS(median({}), DomainError);
    // train losses 1,2,3,4,10: median 3, deviations 2,1,0,1,7 -> MAD 1
    const CellMask train{1, 1, 1, 1, 1, 0, 0, 0, 0};
    const LossMap m = synthetic_map(3, 3, {1, 2, 3, 4, 10, 5.9, 6.0, 6.1, 0.5}, train);
    CHECK(anomaly_threshold(m) == 6.0);
    PhaseLabeling lab(9);
    assign_labels(lab, m, 6.0, 1, 1);
    CHECK(lab.labels == std::vector<int>{1, 1, 1, 1, 1, 1, 1, -1, 1});
    CHECK(lab.iteration[7] == -1);
    CHECK(lab.unassigned() == 1);
    const LossMap m2 = synthetic_map(3, 3, std::vector<double>(9, 100.0), CellMask{0, 0, 0, 0, 0, 0, 0, 1, 0});
    assign_labels(lab, m2, 1.0, 2, 2);
    CHECK(lab.labels[7] == 2);
    CHECK(lab.labels[0] == 1);
    CHECK(lab.thresholds == std::vector<double>{6.0, 1.0});
}

TEST_CASE("region proposal on synthetic maps") {
    const int n = 6;
    CellMask none(n * n, 0);
    PhaseLabeling lab(n * n);

    SUBCASE("a plateau is shrunk to its interior") {
        std::vector<double> loss(n * n, 0.1);
        for (int iu = 1; iu <= 4; ++iu)
            for (int iv = 1; iv <= 4; ++iv) loss[iu * n + iv] = 5.0;
        const auto p = propose_region(synthetic_map(n, n, loss, none), lab, 1.0);
        CHECK(p.componentSize == 16);
        CHECK(mask_count(p.region) == 4);
        CHECK(p.iuLo == 2);
        CHECK(p.iuHi == 3);
        CHECK(p.ivLo == 2);
        CHECK(p.ivHi == 3);
        CHECK(p.score == doctest::Approx(16 / 0.01));
    }
    SUBCASE("equal size, the flatter component wins") {
        std::vector<double> loss(n * n, 0.1);
        const double noisy[3] = {2.0, 8.0, 5.0}, flat[3] = {5.0, 5.1, 4.9};
        for (int k = 0; k < 3; ++k) {
            loss[0 * n + k] = noisy[k];
            loss[5 * n + k] = flat[k];
        }
        const auto p = propose_region(synthetic_map(n, n, loss, none), lab, 1.0);
        CHECK(p.componentSize == 3);
        CHECK(p.region[5 * n + 1]);
        CHECK(!p.region[0 * n + 1]);
        const double mean = 5.0, var = (0.01 + 0.01) / 3;
        CHECK(p.score == doctest::Approx(3 / (var / (mean * mean) + 0.01)));
    }
    SUBCASE("a thin line falls back to the whole component") {
        std::vector<double> loss(n * n, 0.1);
        for (int iv = 0; iv < n; ++iv) loss[2 * n + iv] = 3.0;
        const auto p = propose_region(synthetic_map(n, n, loss, none), lab, 1.0);
        CHECK(mask_count(p.region) == n);
    }
    SUBCASE("identical components: first in index order") {
        std::vector<double> loss(n * n, 0.1);
        loss[0] = loss[1] = 3.0;
        loss[5 * n + 4] = loss[5 * n + 5] = 3.0;
        const auto p = propose_region(synthetic_map(n, n, loss, none), lab, 1.0);
        CHECK(p.region[0]);
        CHECK(!p.region[5 * n + 5]);
    }
    SUBCASE("assigned cells and small components are ignored") {
        std::vector<double> loss(n * n, 0.1);
        loss[7] = 9.0;
        loss[20] = loss[21] = 9.0;
        PhaseLabeling done(n * n);
        done.labels[20] = done.labels[21] = 1;
        CHECK(propose_region(synthetic_map(n, n, loss, none), done, 1.0).componentSize == 1);
        CHECK(propose_region(synthetic_map(n, n, loss, none), done, 1.0, 2).empty());
    }
    SUBCASE("nothing above threshold") {
        const auto p = propose_region(synthetic_map(n, n, std::vector<double>(n * n, 0.5), none), lab, 1.0);
        CHECK(p.empty());
        CHECK(mask_count(p.region) == 0);
    }
}

TEST_CASE("loss map exports") {
    SweepGrid g = small_grid();
    LossMap m = synthetic_map(3, 3, {1e-4, 1e-3, 1e-2, 1e-1, 1, 10, 100, 1000, 1e4}, origin_block(g, 1));
    PhaseLabeling lab(9);
    lab.labels[0] = 1;
    lab.iteration[0] = 1;
    const auto csv = lines_of(loss_map_csv(g, m, lab));
    REQUIRE(csv.size() == 10);
    CHECK(csv[0] == "U,V,loss,assigned_label,iteration");
    CHECK(csv[1] == "1,0,1e-04,1,1");
    CHECK(csv[6] == "4,4,10,-1,-1");
    const auto pgm = lines_of(loss_map_pgm(g, m));
    REQUIRE(pgm.size() >= 6);
    CHECK(pgm[0] == "P2");
    CHECK(pgm[1] == "3 3");
    // first row is v_max: iv = 2 for iu = 0, 1, 2 -> losses 1e-2, 10, 1e4
    std::istringstream top(pgm[3]);
    int a, b, c;
    top >> a >> b >> c;
    CHECK(a < b);
    CHECK(b < c);
    std::istringstream bottom(pgm[5]);
    int lo;
    bottom >> lo;
    CHECK(lo == 0);
    const auto labels = lines_of(labels_csv(g, lab));
    CHECK(labels[0] == "iu,iv,U,V,label,iteration");
    CHECK(labels[1] == "0,0,1,0,1,1");
    CHECK(labels[9] == "2,2,7,4,-1,-1");
}

TEST_CASE("discovery on a small grid") {
    const SweepGrid g = small_grid();
    const auto cache = load_cache(g, small_store().string());
    REQUIRE(cache.complete());
    DiscoverConfig cfg;
    cfg.arch.filters = 8;
    cfg.train.epochs = 40;
    cfg.firstBlock = 2;
    cfg.maxIterations = 3;

    DiscoverConfig one = cfg;
    one.maxIterations = 1;
    const auto r1 = discover_phases(g, cache, one);
    REQUIRE(r1.iterations.size() == 1);
    const auto& it = r1.iterations[0];
    CHECK(it.iteration == 1);
    CHECK(it.training.samples == 4);
    CHECK(it.threshold == anomaly_threshold(it.lossMap));
    for (int k = 0; k < 9; ++k) {
        if (it.region[k]) CHECK(r1.labeling.labels[k] == 1);
        const bool below = it.lossMap.loss[k] <= it.threshold;
        CHECK((r1.labeling.labels[k] == 1) == (below || it.region[k]));
    }
    // the loss map equals a model trained and evaluated by hand with the same seed
    const auto inputs = extract_all(cache, cfg.kind, 4);
    ae::TrainConfig tc = cfg.train;
    tc.seed = iteration_seed(cfg, 0);
    const auto manual = train_region(cache, inputs, origin_block(g, 2), cfg.arch, tc, tc.seed);
    const auto mm = evaluate_loss_map(manual.result.model, g, inputs, origin_block(g, 2), cfg.kind);
    CHECK(mm.loss == it.lossMap.loss);

    std::vector<int> order;
    const auto full = discover_phases(g, cache, cfg, [&](const IterationResult& r) { order.push_back(r.iteration); });
    CHECK(!full.iterations.empty());
    int prev = 9;
    for (std::size_t k = 0; k < full.iterations.size(); ++k) {
        CHECK(order[k] == static_cast<int>(k) + 1);
        const int left = full.iterations[k].labelsAfter.unassigned();
        CHECK(left < prev);
        prev = left;
        if (k + 1 < full.iterations.size()) CHECK(full.iterations[k].next.region == full.iterations[k + 1].region);
    }
    CHECK(!full.oscillation);
    const auto again = discover_phases(g, cache, cfg);
    CHECK(again.labeling.labels == full.labeling.labels);
    CHECK(loss_map_csv(g, again.iterations.back().lossMap, again.labeling) ==
          loss_map_csv(g, full.iterations.back().lossMap, full.labeling));

    CHECK_THROWS_AS(train_region(cache, inputs, CellMask(9, 0), cfg.arch, tc, 1), RefusalError);
    LoadedCache partial = cache;
    partial.missing.push_back({0, 0});
    CHECK_THROWS_AS(discover_phases(g, partial, cfg), RefusalError);
    LoadedCache flagged = cache;
    for (auto& r : flagged.records) r->convergence.converged = false;
    CHECK_THROWS_AS(train_region(flagged, inputs, origin_block(g, 2), cfg.arch, tc, 1), RefusalError);
    flagged.records[0]->convergence.converged = true;
    const auto part = train_region(flagged, inputs, origin_block(g, 2), cfg.arch, tc, 1);
    CHECK(part.samples == 1);
    CHECK(part.skippedFlagged == 3);
}

TEST_CASE("loss map refuses mismatched inputs") {
    const SweepGrid g = small_grid();
    const auto cache = load_cache(g, small_store().string());
    const auto inputs = extract_all(cache, InputKind::ES, 4);
    const auto model = ae::build_autoencoder({1, 8}, {}, 1);
    CHECK_THROWS_AS(evaluate_loss_map(model, g, inputs, origin_block(g, 1), InputKind::ES), RefusalError);
}

TEST_CASE("supersolid probe reads the cached observables") {
    const SweepGrid g = small_grid();
    const auto cache = load_cache(g, small_store().string());
    CellMask all(9, 1);
    SupersolidThresholds th;
    th.superfluid = 0.05;
    th.densityWave = 0.05;
    th.structure = 0.05;
    const auto rows = supersolid_probe(g, cache, all, th);
    CHECK(rows.size() == 9);
    for (const auto& row : rows) {
        const auto& o = cache.at(g.index(row.iu, row.iv)).observables;
        CHECK(row.U == g.u(row.iu));
        CHECK(row.oDW == o.oDW);
        CHECK(row.rSF == o.rSF);
        CHECK(row.S == o.structureFactor);
        CHECK(row.candidate == (row.rSF > th.superfluid && row.oDW > th.densityWave && row.S > th.structure));
    }
    CHECK(supersolid_probe(g, cache, origin_block(g, 1), th).size() == 1);
}

TEST_CASE("hole doping study against exact diagonalization") {
    model::ModelParams p;
    p.L = 6;
    p.nMax = 2;
    p.U = 2.0;
    p.V = 1.5;
    dmrg::DmrgConfig c;
    c.chiMax = 27;
    const auto rows = hole_study(p, c, 2);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.N == 6 - r.holes);
        CHECK(r.converged);
        CHECK(r.energy == doctest::Approx(oracle::sector_ground(p, r.N).energy).epsilon(1e-8));
    }
}

}  // TEST_SUITE
