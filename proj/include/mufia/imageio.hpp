#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mufia/image.hpp"

namespace mufia {

struct LabeledDataset {
    std::vector<Image> images;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return images.size(); }
};

/// Reads an 8-bit RGB or RGBA PNG. Channel bytes map to v/255; an alpha
/// channel is discarded. Anything else (palette, grayscale, 16-bit) is an
/// error.
Image load_png(const std::string& path);

/// Writes an 8-bit RGB PNG. Values are clamped to [0,1] and quantized with
/// round-half-up, byte = floor(v*255 + 0.5). The write is staged through a
/// temp file and renamed on success.
void save_png(const Image& image, const std::string& path);

/// CIFAR-10 binary batch format: records of 3073 bytes, one label byte
/// followed by 32x32 R, G, B planes in row-major order.
LabeledDataset load_cifar10_binary(const std::string& path);

/// Deterministic synthetic dataset with frequency-differentiated classes.
/// Class templates cycle through: constant patch, horizontal sinusoid
/// (varies along x), vertical sinusoid (varies along y), diagonal sinusoid,
/// checkerboard. Each sample gets a seeded random base color and seeded
/// per-pixel noise of the given amplitude.
LabeledDataset generate_synthetic_dataset(int num_classes, int samples_per_class,
                                          int side, std::uint64_t seed,
                                          double noise_amplitude = 0.05);

/// Stratified split: per class, the first round(fraction * count) samples go
/// to the first dataset, the rest to the second. Original order is kept.
std::pair<LabeledDataset, LabeledDataset> split_per_class(const LabeledDataset& ds,
                                                          double first_fraction);

}  // namespace mufia
