#include "phasescout/pipeline/inputs.hpp"

#include "phasescout/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace phasescout::pipeline {

std::string to_string(InputKind k) {
    switch (k) {
    case InputKind::ES: return "es";
    case InputKind::THETA: return "theta";
    case InputKind::CSF: return "csf";
    }
    return "?";
}

InputKind parse_input_kind(const std::string& s) {
    std::string t = s;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "es") return InputKind::ES;
    if (t == "theta") return InputKind::THETA;
    if (t == "csf") return InputKind::CSF;
    throw DomainError("unknown input kind '" + s + "' (expected es, theta or csf)");
}

int pad_to(int n, int multiple) {
    if (n < 1 || multiple < 1) throw DomainError("pad_to: arguments must be positive");
    return (n + multiple - 1) / multiple * multiple;
}

std::vector<int> input_shape(InputKind kind, int chiMax, int d, int L, int multiple) {
    const int P = pad_to(chiMax, multiple);
    switch (kind) {
    case InputKind::ES: return {1, P};
    case InputKind::THETA: return {d, P, P};
    case InputKind::CSF: return {L, pad_to(L, multiple)};
    }
    throw DomainError("input_shape: bad kind");
}

namespace {

void normalize_max_abs(ae::TensorBuffer& t) {
    double m = 0.0;
    for (double x : t.data) m = std::max(m, std::abs(x));
    if (m > 0.0)
        for (double& x : t.data) x /= m;
}

}  // namespace

ae::TensorBuffer extract_input(const GroundStateRecord& r, InputKind kind, int multiple) {
    const int L = r.params.L, d = r.params.d(), chi = r.dmrg.chiMax;
    ae::TensorBuffer out(input_shape(kind, chi, d, L, multiple));
    switch (kind) {
    case InputKind::ES: {
        if (static_cast<int>(r.spectra.size()) != L - 1 || r.spectra[L / 2 - 1].values.empty())
            throw RecordError("record incomplete: central spectrum");
        const auto& s = r.spectra[L / 2 - 1].values;
        if (static_cast<int>(s.size()) > out.width()) throw RecordError("record: spectrum longer than chi_max");
        std::copy(s.begin(), s.end(), out.data.begin());
        break;
    }
    case InputKind::THETA: {
        const auto& th = r.centralTheta;
        if (th.data.empty() || th.d != d) throw RecordError("record incomplete: central tensor");
        const int P = out.width();
        if (th.chiLeft > P || th.chiRight > P) throw RecordError("record: central tensor larger than chi_max");
        for (int a = 0; a < th.chiLeft; ++a)
            for (int s = 0; s < d; ++s)
                for (int b = 0; b < th.chiRight; ++b)
                    out.data[(static_cast<std::size_t>(s) * P + a) * P + b] = th.at(a, s, b);
        normalize_max_abs(out);
        break;
    }
    case InputKind::CSF: {
        if (r.corrSF.rows() != L || r.corrSF.cols() != L) throw RecordError("record incomplete: superfluid correlator");
        const int W = out.width();
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) out.data[static_cast<std::size_t>(i) * W + j] = r.corrSF(i, j);
        normalize_max_abs(out);
        break;
    }
    }
    return out;
}

}  // namespace phasescout::pipeline
