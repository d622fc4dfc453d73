#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace phasescout::ae {

/// Dense activation with shape (channels, spatial...). One spatial dim for 1D
/// signals, two for images. Data is row-major.
struct TensorBuffer {
    std::vector<int> shape;
    std::vector<double> data;

    TensorBuffer() = default;
    explicit TensorBuffer(std::vector<int> shape, double fill = 0.0);
    TensorBuffer(std::vector<int> shape, std::vector<double> data);

    std::size_t size() const { return data.size(); }
    int channels() const { return shape.empty() ? 0 : shape[0]; }
    int spatial_rank() const { return static_cast<int>(shape.size()) - 1; }
    /// Height and width; 1D buffers report height 1.
    int height() const { return spatial_rank() == 2 ? shape[1] : 1; }
    int width() const { return shape.back(); }
    std::string shape_string() const;

    void check() const;
};

bool same_shape(const TensorBuffer& a, const TensorBuffer& b);

}  // namespace phasescout::ae
