#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mufia/blockdct.hpp"
#include "mufia/image.hpp"

namespace mufia {

/// Elementwise median across a list of equally sized filter banks. Even
/// counts take the mean of the two middle values.
template <typename T>
FilterBank<T> median_filter_bank(const std::vector<FilterBank<T>>& banks) {
    require(!banks.empty(), "median_filter_bank: empty list");
    const int n = banks.front().size;
    for (const auto& b : banks) require(b.size == n, "median_filter_bank: mixed sizes");

    FilterBank<T> out = FilterBank<T>::ones(n);
    std::vector<T> cell(banks.size());
    for (std::size_t k = 0; k < out.q.size(); ++k) {
        for (std::size_t i = 0; i < banks.size(); ++i) cell[i] = banks[i].q[k];
        const std::size_t mid = cell.size() / 2;
        std::nth_element(cell.begin(), cell.begin() + mid, cell.end());
        if (cell.size() % 2 == 1) {
            out.q[k] = cell[mid];
        } else {
            const T hi = cell[mid];
            std::nth_element(cell.begin(), cell.begin() + (mid - 1), cell.begin() + mid);
            out.q[k] = (cell[mid - 1] + hi) / T(2);
        }
    }
    return out;
}

/// tanh(z - 1) view of a filter bank: 0 means unchanged, positive means
/// amplified, negative means attenuated. Entries lie strictly inside (-1,1).
struct HeatmapMatrix {
    int size = 0;
    std::vector<double> values;
};

template <typename T>
HeatmapMatrix heatmap_transform(const FilterBank<T>& q) {
    HeatmapMatrix m;
    m.size = q.size;
    m.values.resize(q.q.size());
    for (std::size_t i = 0; i < q.q.size(); ++i)
        m.values[i] = std::tanh(static_cast<double>(q.q[i]) - 1.0);
    return m;
}

/// Renders a heatmap with a fixed diverging colormap:
///   -1 -> (0.8, 0.1, 0.0)   red-orange, attenuation
///    0 -> (0.0, 0.7, 0.2)   green, unchanged
///   +1 -> (0.5, 0.2, 0.7)   purple, amplification
/// linear within each half. Each cell becomes a cell_pixels square, matrix
/// row 0 at the top.
Image render_heatmap(const HeatmapMatrix& m, int cell_pixels);

/// Peak signal-to-noise ratio in dB with peak 1.0, over all channels.
/// Identical images report +infinity.
template <typename T>
double psnr(const BasicImage<T>& a, const BasicImage<T>& b) {
    require(a.height == b.height && a.width == b.width, "psnr: shape mismatch");
    double se = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.pixels.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace mufia
