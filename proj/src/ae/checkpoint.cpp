#include "phasescout/ae/checkpoint.hpp"

#include "phasescout/bytes.hpp"
#include "phasescout/errors.hpp"

#include <cstring>

namespace phasescout::ae {

namespace {

constexpr char kMagic[8] = {'A', 'E', 'M', 'O', 'D', 'E', 'L', '1'};
constexpr std::uint8_t kVersion = 1;

}  // namespace

std::vector<unsigned char> serialize_model(const AEModel& model) {
    model.validate();
    ByteWriter w;
    w.raw(kMagic, sizeof kMagic);
    w.u8(kVersion);
    w.u32(static_cast<std::uint32_t>(model.inputShape.size()));
    for (int s : model.inputShape) w.u32(static_cast<std::uint32_t>(s));
    w.u32(static_cast<std::uint32_t>(model.latentIndex));
    w.u32(static_cast<std::uint32_t>(model.layers.size()));
    for (const auto& l : model.layers) {
        w.u8(static_cast<std::uint8_t>(l.spec.kind));
        w.u8(static_cast<std::uint8_t>(l.spec.spatialRank));
        w.u32(static_cast<std::uint32_t>(l.spec.inChannels));
        w.u32(static_cast<std::uint32_t>(l.spec.filters));
        w.u32(static_cast<std::uint32_t>(l.spec.kernel));
        w.u32(static_cast<std::uint32_t>(l.spec.poolSize));
    }
    w.u32(static_cast<std::uint32_t>(model.shortcuts.size()));
    for (const auto& s : model.shortcuts) {
        w.u32(static_cast<std::uint32_t>(s.from));
        w.u32(static_cast<std::uint32_t>(s.to));
    }
    for (const auto& l : model.layers) {
        if (l.spec.kind != LayerKind::Conv) continue;
        for (long r = 0; r < l.weight.rows(); ++r)
            for (long c = 0; c < l.weight.cols(); ++c) w.f64(l.weight(r, c));
        for (long k = 0; k < l.bias.size(); ++k) w.f64(l.bias(k));
    }
    return w.take();
}

AEModel deserialize_model(const std::vector<unsigned char>& bytes) {
    ByteReader r(bytes);
    char magic[8];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw RecordError("checkpoint: bad magic");
    if (r.u8() != kVersion) throw RecordError("checkpoint: unsupported version");
    AEModel m;
    const std::uint32_t rank = r.u32();
    if (rank < 2 || rank > 3) throw RecordError("checkpoint: bad input rank");
    for (std::uint32_t k = 0; k < rank; ++k) m.inputShape.push_back(static_cast<int>(r.u32()));
    m.latentIndex = static_cast<int>(r.u32());
    const std::uint32_t nLayers = r.u32();
    if (nLayers > 4096) throw RecordError("checkpoint: implausible layer count");
    try {
        for (std::uint32_t k = 0; k < nLayers; ++k) {
            LayerSpec s;
            const std::uint8_t kind = r.u8();
            if (kind > static_cast<std::uint8_t>(LayerKind::Upsample)) throw RecordError("checkpoint: unknown layer kind");
            s.kind = static_cast<LayerKind>(kind);
            s.spatialRank = r.u8();
            s.inChannels = static_cast<int>(r.u32());
            s.filters = static_cast<int>(r.u32());
            s.kernel = static_cast<int>(r.u32());
            s.poolSize = static_cast<int>(r.u32());
            m.layers.emplace_back(s);
        }
        const std::uint32_t nShort = r.u32();
        if (nShort > 4096) throw RecordError("checkpoint: implausible shortcut count");
        for (std::uint32_t k = 0; k < nShort; ++k) {
            Shortcut s;
            s.from = static_cast<int>(r.u32());
            s.to = static_cast<int>(r.u32());
            m.shortcuts.push_back(s);
        }
        for (auto& l : m.layers) {
            if (l.spec.kind != LayerKind::Conv) continue;
            for (long i = 0; i < l.weight.rows(); ++i)
                for (long c = 0; c < l.weight.cols(); ++c) l.weight(i, c) = r.f64();
            for (long k = 0; k < l.bias.size(); ++k) l.bias(k) = r.f64();
        }
        if (r.remaining() != 0) throw RecordError("checkpoint: trailing bytes");
        m.validate();
    } catch (const DomainError& e) {
        throw RecordError(std::string("checkpoint: invalid model: ") + e.what());
    }
    return m;
}

void save_model(const AEModel& model, const std::string& path) { write_file_atomic(path, serialize_model(model)); }

AEModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

}  // namespace phasescout::ae
