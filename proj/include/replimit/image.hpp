#pragma once

#include <cstddef>
#include <vector>

#include "replimit/tensor_io.hpp"

namespace replimit {

// Single-channel image, row-major, pixel values nominally in [0,1].
struct ToyImage {
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<float> pixels;

    ToyImage() = default;
    ToyImage(std::size_t height, std::size_t width, float fill = 0.0f) : h(height), w(width), pixels(height * width, fill) {}

    float& at(std::size_t y, std::size_t x) { return pixels[y * w + x]; }
    float at(std::size_t y, std::size_t x) const { return pixels[y * w + x]; }
    bool in_unit_range() const;

    bool operator==(const ToyImage&) const = default;
};

// N x H x W tensor <-> image list. All images must share dimensions.
Tensor images_to_tensor(const std::vector<ToyImage>& images);
std::vector<ToyImage> tensor_to_images(const Tensor& t);

}  // namespace replimit
