#pragma once

#include <cstdint>
#include <vector>

#include "mufia/image.hpp"

namespace mufia {

/// Full-range BT.601 planes as used by JPEG-style block transforms:
/// y in [0,1], cb and cr centered at 0 in [-0.5, 0.5].
template <typename T>
struct PlanarYCbCr {
    Plane<T> y, cb, cr;
};

/// Per pixel-channel saturation flags recorded when ycbcr_to_rgb clamps its
/// output to [0,1]. Layout matches BasicImage: (y * width + x) * 3 + c.
struct ClampMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> saturated;

    ClampMask() = default;
    ClampMask(int h, int w)
        : height(h), width(w), saturated(static_cast<std::size_t>(h) * w * 3, 0) {}
};

template <typename T>
PlanarYCbCr<T> rgb_to_ycbcr(const BasicImage<T>& img) {
    PlanarYCbCr<T> out;
    out.y = Plane<T>(img.height, img.width);
    out.cb = Plane<T>(img.height, img.width);
    out.cr = Plane<T>(img.height, img.width);
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t i = 0; i < n; ++i) {
        const T r = img.pixels[i * 3 + 0];
        const T g = img.pixels[i * 3 + 1];
        const T b = img.pixels[i * 3 + 2];
        out.y.v[i] = T(0.299) * r + T(0.587) * g + T(0.114) * b;
        out.cb.v[i] = T(-0.168736) * r + T(-0.331264) * g + T(0.5) * b;
        out.cr.v[i] = T(0.5) * r + T(-0.418688) * g + T(-0.081312) * b;
    }
    return out;
}

/// Reassembles RGB and clamps to [0,1]. When a mask is supplied, clamped
/// positions are flagged so the backward pass can zero their contribution.
template <typename T>
BasicImage<T> ycbcr_to_rgb(const PlanarYCbCr<T>& planes, ClampMask* mask = nullptr) {
    require(planes.y.rows == planes.cb.rows && planes.y.rows == planes.cr.rows &&
                planes.y.cols == planes.cb.cols && planes.y.cols == planes.cr.cols,
            "ycbcr_to_rgb: plane dimensions differ");

    BasicImage<T> img(planes.y.rows, planes.y.cols);
    if (mask) *mask = ClampMask(planes.y.rows, planes.y.cols);

    const std::size_t n = planes.y.v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const T y = planes.y.v[i];
        const T cb = planes.cb.v[i];
        const T cr = planes.cr.v[i];
        T rgb[3];
        rgb[0] = y + T(1.402) * cr;
        rgb[1] = y + T(-0.344136) * cb + T(-0.714136) * cr;
        rgb[2] = y + T(1.772) * cb;
        for (int c = 0; c < 3; ++c) {
            T v = rgb[c];
            if (v < T(0)) {
                v = T(0);
                if (mask) mask->saturated[i * 3 + c] = 1;
            } else if (v > T(1)) {
                v = T(1);
                if (mask) mask->saturated[i * 3 + c] = 1;
            }
            img.pixels[i * 3 + c] = v;
        }
    }
    return img;
}

/// Pulls an RGB-space gradient back onto the luma plane. Each RGB channel
/// depends on Y with unit slope, so unsaturated positions sum their three
/// channel gradients; saturated positions contribute zero.
template <typename T>
Plane<T> luma_gradient(const BasicImage<T>& grad_rgb, const ClampMask& mask) {
    require(grad_rgb.height == mask.height && grad_rgb.width == mask.width,
            "luma_gradient: shape mismatch");

    Plane<T> grad_y(grad_rgb.height, grad_rgb.width);
    const std::size_t n = grad_y.v.size();
    for (std::size_t i = 0; i < n; ++i) {
        T acc = T(0);
        for (int c = 0; c < 3; ++c)
            if (!mask.saturated[i * 3 + c]) acc += grad_rgb.pixels[i * 3 + c];
        grad_y.v[i] = acc;
    }
    return grad_y;
}

}  // namespace mufia
