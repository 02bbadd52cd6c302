#include "replimit/image.hpp"

#include <algorithm>

#include "replimit/errors.hpp"

namespace replimit {

bool ToyImage::in_unit_range() const {
    return std::all_of(pixels.begin(), pixels.end(), [](float p) { return p >= 0.0f && p <= 1.0f; });
}

Tensor images_to_tensor(const std::vector<ToyImage>& images) {
    Tensor t;
    if (images.empty()) {
        t.dims = {0, 0, 0};
        return t;
    }
    const auto h = images.front().h, w = images.front().w;
    t.dims = {static_cast<std::uint32_t>(images.size()), static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w)};
    t.data.reserve(images.size() * h * w);
    for (const auto& img : images) {
        if (img.h != h || img.w != w) throw ContractError("images_to_tensor: images differ in size");
        t.data.insert(t.data.end(), img.pixels.begin(), img.pixels.end());
    }
    return t;
}

std::vector<ToyImage> tensor_to_images(const Tensor& t) {
    if (t.dims.size() != 3) throw FormatError("image tensor must have rank 3 (N x H x W)");
    const std::size_t n = t.dims[0], h = t.dims[1], w = t.dims[2];
    std::vector<ToyImage> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ToyImage img(h, w);
        std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(i * h * w), h * w, img.pixels.begin());
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace replimit
