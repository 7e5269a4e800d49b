#include "mufia/analytics.hpp"

namespace mufia {

namespace {

constexpr double kNegAnchor[3] = {0.8, 0.1, 0.0};
constexpr double kZeroAnchor[3] = {0.0, 0.7, 0.2};
constexpr double kPosAnchor[3] = {0.5, 0.2, 0.7};

void diverging_color(double t, float rgb[3]) {
    const double* lo = (t < 0.0) ? kNegAnchor : kZeroAnchor;
    const double* hi = (t < 0.0) ? kZeroAnchor : kPosAnchor;
    const double u = (t < 0.0) ? t + 1.0 : t;
    for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<float>(lo[c] + (hi[c] - lo[c]) * u);
}

}  // namespace

Image render_heatmap(const HeatmapMatrix& m, int cell_pixels) {
    require(cell_pixels >= 1, "render_heatmap: cell_pixels must be >= 1");
    require(m.size >= 1 && m.values.size() == static_cast<std::size_t>(m.size) * m.size,
            "render_heatmap: bad matrix");

    Image img(m.size * cell_pixels, m.size * cell_pixels);
    for (int u = 0; u < m.size; ++u) {
        for (int v = 0; v < m.size; ++v) {
            float rgb[3];
            diverging_color(m.values[static_cast<std::size_t>(u) * m.size + v], rgb);
            for (int dy = 0; dy < cell_pixels; ++dy)
                for (int dx = 0; dx < cell_pixels; ++dx)
                    for (int c = 0; c < 3; ++c)
                        img.at(u * cell_pixels + dy, v * cell_pixels + dx, c) = rgb[c];
        }
    }
    return img;
}

}  // namespace mufia
