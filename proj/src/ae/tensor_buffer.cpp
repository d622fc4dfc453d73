#include "phasescout/ae/tensor_buffer.hpp"

#include "phasescout/errors.hpp"

#include <functional>
#include <numeric>

namespace phasescout::ae {

namespace {

std::size_t volume(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int s : shape) {
        if (s < 1) throw DomainError("TensorBuffer: dimensions must be positive");
        n *= static_cast<std::size_t>(s);
    }
    return n;
}

}  // namespace

TensorBuffer::TensorBuffer(std::vector<int> s, double fill) : shape(std::move(s)) {
    if (shape.size() < 2 || shape.size() > 3) throw DomainError("TensorBuffer: shape must be (C, W) or (C, H, W)");
    data.assign(volume(shape), fill);
}

TensorBuffer::TensorBuffer(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    check();
}

std::string TensorBuffer::shape_string() const {
    std::string out = "(";
    for (std::size_t k = 0; k < shape.size(); ++k) out += (k ? "," : "") + std::to_string(shape[k]);
    return out + ")";
}

void TensorBuffer::check() const {
    if (shape.size() < 2 || shape.size() > 3) throw DomainError("TensorBuffer: shape must be (C, W) or (C, H, W)");
    if (volume(shape) != data.size()) throw DomainError("TensorBuffer: data length does not match shape");
}

bool same_shape(const TensorBuffer& a, const TensorBuffer& b) { return a.shape == b.shape; }

}  // namespace phasescout::ae
