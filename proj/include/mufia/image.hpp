#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mufia {

/// H x W x 3 raster, row-major, interleaved R,G,B. Valid images keep every
/// channel value in [0,1]; gradient rasters reuse the container unconstrained.
template <typename T>
struct BasicImage {
    int height = 0;
    int width = 0;
    std::vector<T> pixels;

    BasicImage() = default;
    BasicImage(int h, int w)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, T(0)) {}

    T& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    const T& at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::size_t value_count() const { return pixels.size(); }
};

using Image = BasicImage<float>;

template <typename To, typename From>
BasicImage<To> image_cast(const BasicImage<From>& src) {
    BasicImage<To> dst(src.height, src.width);
    for (std::size_t i = 0; i < src.pixels.size(); ++i)
        dst.pixels[i] = static_cast<To>(src.pixels[i]);
    return dst;
}

/// Single H x W plane, row-major.
template <typename T>
struct Plane {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Plane() = default;
    Plane(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, T(0)) {}

    T& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace mufia
