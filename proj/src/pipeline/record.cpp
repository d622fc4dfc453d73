#include "phasescout/pipeline/record.hpp"

#include "phasescout/bytes.hpp"
#include "phasescout/errors.hpp"

#include <zlib.h>

#include <cstring>

namespace phasescout::pipeline {

namespace {

constexpr char kMagic[6] = {'E', 'B', 'H', 'G', 'S', '1'};

void put_matrix(ByteWriter& w, const Eigen::MatrixXd& m) {
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) w.f64(m(r, c));
}

Eigen::MatrixXd get_matrix(ByteReader& r) {
    const std::uint64_t rows = r.u64(), cols = r.u64();
    if (rows > 100000 || cols > 100000 || rows * cols * 8 > r.remaining()) throw RecordError("record: bad matrix shape");
    Eigen::MatrixXd m(rows, cols);
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < cols; ++j) m(i, j) = r.f64();
    return m;
}

void put_ints(ByteWriter& w, const std::vector<int>& v) {
    w.u64(v.size());
    for (int x : v) w.i64(x);
}

std::vector<int> get_ints(ByteReader& r) {
    const std::uint64_t n = r.u64();
    if (n * 8 > r.remaining()) throw RecordError("record: bad array length");
    std::vector<int> v(n);
    for (auto& x : v) x = static_cast<int>(r.i64());
    return v;
}

std::uint32_t crc(const unsigned char* p, std::size_t n) {
    uLong c = crc32(0L, Z_NULL, 0);
    while (n > 0) {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        c = crc32(c, p, chunk);
        p += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

}  // namespace

void GroundStateRecord::check_complete() const {
    const int L = params.L;
    if (formatVersion != kRecordVersion) throw RecordError("record: unsupported format version");
    if (L < 2) throw RecordError("record incomplete: chain length");
    if (static_cast<int>(spectra.size()) != L - 1) throw RecordError("record incomplete: spectra");
    for (const auto& s : spectra)
        if (s.values.empty()) throw RecordError("record incomplete: empty spectrum");
    if (centralTheta.data.empty() ||
        centralTheta.data.size() != static_cast<std::size_t>(centralTheta.chiLeft) * centralTheta.d * centralTheta.chiRight)
        throw RecordError("record incomplete: central tensor");
    for (const auto* m : {&corrSF, &corrDW, &corrHI})
        if (m->rows() != L || m->cols() != L) throw RecordError("record incomplete: correlator matrix");
    if (static_cast<int>(observables.densityProfile.size()) != L) throw RecordError("record incomplete: density profile");
}

GroundStateRecord make_record(int iu, int iv, const model::ModelParams& params, const dmrg::DmrgConfig& config,
                              const dmrg::DmrgResult& result) {
    GroundStateRecord r;
    r.iu = iu;
    r.iv = iv;
    r.params = params;
    r.dmrg = config;
    r.particles = result.state.totalParticles;
    r.energy = result.report.finalEnergy;
    r.convergence = result.report;
    const auto& s = result.state;
    for (int b = 1; b < s.L; ++b) r.spectra.push_back(tn::schmidt_spectrum(s, b));
    r.centralTheta = tn::theta_tensor(s, s.L / 2);
    const auto corr = model::all_correlators(s);
    r.corrSF = corr.sf;
    r.corrDW = corr.dw;
    r.corrHI = corr.hi;
    r.observables = model::measure(s, corr);
    return r;
}

std::vector<unsigned char> encode_record(const GroundStateRecord& r) {
    ByteWriter p;
    p.i64(r.iu);
    p.i64(r.iv);
    p.f64(r.params.t);
    p.f64(r.params.U);
    p.f64(r.params.V);
    p.i64(r.params.nMax);
    p.i64(r.params.L);
    const auto& c = r.dmrg;
    p.i64(c.chiMax);
    p.i64(c.maxSweeps);
    p.f64(c.energyTol);
    p.i64(c.lanczosIters);
    p.f64(c.lanczosTol);
    p.f64(c.mixerStrength);
    p.f64(c.mixerDecay);
    p.i64(c.mixerSweeps);
    p.f64(c.svMin);
    p.u64(c.seed);
    p.i64(r.particles);
    p.f64(r.energy);
    p.u64(r.spectra.size());
    for (const auto& s : r.spectra) {
        p.f64s(s.values);
        put_ints(p, s.sectorLabels);
    }
    const auto& th = r.centralTheta;
    p.i64(th.site);
    p.i64(th.chiLeft);
    p.i64(th.d);
    p.i64(th.chiRight);
    p.f64s(th.data);
    put_matrix(p, r.corrSF);
    put_matrix(p, r.corrDW);
    put_matrix(p, r.corrHI);
    const auto& o = r.observables;
    for (double x : {o.oSF, o.oDW, o.oHI, o.rSF, o.rDW, o.rHI, o.structureFactor, o.kStar, o.xi}) p.f64(x);
    p.i64(o.margin);
    p.f64s(o.densityProfile);
    p.f64s(o.entropyProfile);
    const auto& cv = r.convergence;
    p.f64s(cv.energyPerSweep);
    p.f64s(cv.energyPerHalfSweep);
    p.f64(cv.finalEnergy);
    p.f64(cv.discardedWeightMax);
    p.u8(cv.converged ? 1 : 0);
    p.i64(cv.sweepsUsed);
    p.i64(cv.lanczosUnconverged);

    const auto& payload = p.bytes();
    ByteWriter w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(r.formatVersion);
    w.u64(payload.size());
    w.raw(payload.data(), payload.size());
    w.u32(crc(payload.data(), payload.size()));
    return w.take();
}

std::uint32_t record_checksum(const std::vector<unsigned char>& encoded) {
    if (encoded.size() < 4) throw RecordError("record: truncated");
    ByteReader r(encoded.data() + encoded.size() - 4, 4);
    return r.u32();
}

GroundStateRecord decode_record(const std::vector<unsigned char>& bytes) {
    ByteReader h(bytes);
    char magic[6];
    h.raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw RecordError("record: bad magic");
    GroundStateRecord r;
    r.formatVersion = h.u32();
    if (r.formatVersion != kRecordVersion) throw RecordError("record: unsupported version");
    const std::uint64_t len = h.u64();
    if (len + 4 != h.remaining()) throw RecordError("record: length mismatch");
    const unsigned char* payload = bytes.data() + h.position();
    ByteReader tail(payload + len, 4);
    if (tail.u32() != crc(payload, len)) throw RecordError("record: checksum mismatch");

    ByteReader p(payload, len);
    r.iu = static_cast<int>(p.i64());
    r.iv = static_cast<int>(p.i64());
    r.params.t = p.f64();
    r.params.U = p.f64();
    r.params.V = p.f64();
    r.params.nMax = static_cast<int>(p.i64());
    r.params.L = static_cast<int>(p.i64());
    auto& c = r.dmrg;
    c.chiMax = static_cast<int>(p.i64());
    c.maxSweeps = static_cast<int>(p.i64());
    c.energyTol = p.f64();
    c.lanczosIters = static_cast<int>(p.i64());
    c.lanczosTol = p.f64();
    c.mixerStrength = p.f64();
    c.mixerDecay = p.f64();
    c.mixerSweeps = static_cast<int>(p.i64());
    c.svMin = p.f64();
    c.seed = p.u64();
    r.particles = static_cast<int>(p.i64());
    r.energy = p.f64();
    const std::uint64_t nSpec = p.u64();
    if (nSpec > 100000) throw RecordError("record: bad spectrum count");
    for (std::uint64_t k = 0; k < nSpec; ++k) {
        tn::SchmidtSpectrum s;
        s.values = p.f64s();
        s.sectorLabels = get_ints(p);
        r.spectra.push_back(std::move(s));
    }
    auto& th = r.centralTheta;
    th.site = static_cast<int>(p.i64());
    th.chiLeft = static_cast<int>(p.i64());
    th.d = static_cast<int>(p.i64());
    th.chiRight = static_cast<int>(p.i64());
    th.data = p.f64s();
    r.corrSF = get_matrix(p);
    r.corrDW = get_matrix(p);
    r.corrHI = get_matrix(p);
    auto& o = r.observables;
    for (double* x : {&o.oSF, &o.oDW, &o.oHI, &o.rSF, &o.rDW, &o.rHI, &o.structureFactor, &o.kStar, &o.xi}) *x = p.f64();
    o.margin = static_cast<int>(p.i64());
    o.densityProfile = p.f64s();
    o.entropyProfile = p.f64s();
    auto& cv = r.convergence;
    cv.energyPerSweep = p.f64s();
    cv.energyPerHalfSweep = p.f64s();
    cv.finalEnergy = p.f64();
    cv.discardedWeightMax = p.f64();
    cv.converged = p.u8() != 0;
    cv.sweepsUsed = static_cast<int>(p.i64());
    cv.lanczosUnconverged = static_cast<int>(p.i64());
    if (p.remaining() != 0) throw RecordError("record: trailing payload bytes");
    return r;
}

std::string record_filename(int iu, int iv) { return "u" + std::to_string(iu) + "_v" + std::to_string(iv) + ".gsr"; }

}  // namespace phasescout::pipeline
