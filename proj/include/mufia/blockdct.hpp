#pragma once

#include <cmath>
#include <vector>

#include "mufia/image.hpp"

namespace mufia {

/// N x N multiplicative filter bank applied elementwise in the DCT domain.
/// Entry (u, v) scales row frequency u, column frequency v. Fresh banks are
/// all-ones, which leaves the image unchanged.
template <typename T>
struct FilterBank {
    int size = 0;
    std::vector<T> q;

    static FilterBank ones(int n) {
        FilterBank fb;
        fb.size = n;
        fb.q.assign(static_cast<std::size_t>(n) * n, T(1));
        return fb;
    }

    T& at(int u, int v) { return q[static_cast<std::size_t>(u) * size + v]; }
    const T& at(int u, int v) const { return q[static_cast<std::size_t>(u) * size + v]; }
};

/// Non-overlapping N x N tiling of a plane. Blocks are stored contiguously in
/// row-major block order, row-major within each block.
template <typename T>
struct BlockGrid {
    int block_size = 0;
    int rows = 0;
    int cols = 0;
    std::vector<T> coeffs;

    int block_count() const { return rows * cols; }
    T* block(int b) { return coeffs.data() + static_cast<std::size_t>(b) * block_size * block_size; }
    const T* block(int b) const {
        return coeffs.data() + static_cast<std::size_t>(b) * block_size * block_size;
    }
};

template <typename T>
BlockGrid<T> partition_blocks(const Plane<T>& plane, int block_size) {
    require(block_size >= 2, "partition_blocks: block size must be >= 2");
    require(plane.rows % block_size == 0 && plane.cols % block_size == 0,
            "partition_blocks: plane dimensions not divisible by block size");

    BlockGrid<T> grid;
    grid.block_size = block_size;
    grid.rows = plane.rows / block_size;
    grid.cols = plane.cols / block_size;
    grid.coeffs.resize(static_cast<std::size_t>(grid.block_count()) * block_size * block_size);

    for (int br = 0; br < grid.rows; ++br)
        for (int bc = 0; bc < grid.cols; ++bc) {
            T* dst = grid.block(br * grid.cols + bc);
            for (int i = 0; i < block_size; ++i)
                for (int j = 0; j < block_size; ++j)
                    dst[i * block_size + j] = plane.at(br * block_size + i, bc * block_size + j);
        }
    return grid;
}

template <typename T>
Plane<T> assemble_blocks(const BlockGrid<T>& grid) {
    const int n = grid.block_size;
    Plane<T> plane(grid.rows * n, grid.cols * n);
    for (int br = 0; br < grid.rows; ++br)
        for (int bc = 0; bc < grid.cols; ++bc) {
            const T* src = grid.block(br * grid.cols + bc);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    plane.at(br * n + i, bc * n + j) = src[i * n + j];
        }
    return plane;
}

/// Orthonormal type-II 2D DCT for one block size, with the cosine basis
/// precomputed. Because the transform is orthonormal the inverse equals the
/// transpose, so the adjoint of forward is inverse and vice versa.
template <typename T>
class DctPlan {
  public:
    explicit DctPlan(int n) : n_(n), basis_(static_cast<std::size_t>(n) * n) {
        const double pi = 3.14159265358979323846;
        for (int u = 0; u < n; ++u) {
            const double alpha = (u == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (int i = 0; i < n; ++i)
                basis_[static_cast<std::size_t>(u) * n + i] =
                    static_cast<T>(alpha * std::cos(pi * (2.0 * i + 1.0) * u / (2.0 * n)));
        }
    }

    int size() const { return n_; }

    // out = B * in * B^T
    void forward(const T* in, T* out) const {
        thread_local std::vector<T> scratch;
        scratch.assign(static_cast<std::size_t>(n_) * n_, T(0));
        for (int u = 0; u < n_; ++u)
            for (int i = 0; i < n_; ++i) {
                const T b = basis_[u * n_ + i];
                for (int j = 0; j < n_; ++j) scratch[u * n_ + j] += b * in[i * n_ + j];
            }
        for (int u = 0; u < n_; ++u)
            for (int v = 0; v < n_; ++v) {
                T acc = T(0);
                for (int j = 0; j < n_; ++j) acc += scratch[u * n_ + j] * basis_[v * n_ + j];
                out[u * n_ + v] = acc;
            }
    }

    // out = B^T * in * B
    void inverse(const T* in, T* out) const {
        thread_local std::vector<T> scratch;
        scratch.assign(static_cast<std::size_t>(n_) * n_, T(0));
        for (int u = 0; u < n_; ++u)
            for (int i = 0; i < n_; ++i) {
                const T b = basis_[u * n_ + i];
                for (int v = 0; v < n_; ++v) scratch[i * n_ + v] += b * in[u * n_ + v];
            }
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                T acc = T(0);
                for (int v = 0; v < n_; ++v) acc += scratch[i * n_ + v] * basis_[v * n_ + j];
                out[i * n_ + j] = acc;
            }
    }

  private:
    int n_;
    std::vector<T> basis_;
};

template <typename T>
std::vector<T> dct2(const std::vector<T>& block, int n) {
    std::vector<T> out(block.size());
    DctPlan<T>(n).forward(block.data(), out.data());
    return out;
}

template <typename T>
std::vector<T> idct2(const std::vector<T>& block, int n) {
    std::vector<T> out(block.size());
    DctPlan<T>(n).inverse(block.data(), out.data());
    return out;
}

// ---------------------------------------------------------------------------
// Grid kernels. Blocks are independent, so the loops parallelize over blocks
// and stay bit-identical to the serial reference for any thread count.
// ---------------------------------------------------------------------------

template <typename T>
BlockGrid<T> dct2_grid(const BlockGrid<T>& spatial) {
    BlockGrid<T> out = spatial;
    const DctPlan<T> plan(spatial.block_size);
    const int count = spatial.block_count();
#pragma omp parallel for schedule(static)
    for (int b = 0; b < count; ++b) plan.forward(spatial.block(b), out.block(b));
    return out;
}

template <typename T>
BlockGrid<T> idct2_grid(const BlockGrid<T>& freq) {
    BlockGrid<T> out = freq;
    const DctPlan<T> plan(freq.block_size);
    const int count = freq.block_count();
#pragma omp parallel for schedule(static)
    for (int b = 0; b < count; ++b) plan.inverse(freq.block(b), out.block(b));
    return out;
}

/// Multiplies every block elementwise by the same filter bank.
template <typename T>
BlockGrid<T> apply_filter_bank(const BlockGrid<T>& grid, const FilterBank<T>& fb) {
    require(grid.block_size == fb.size, "apply_filter_bank: size mismatch");
    BlockGrid<T> out = grid;
    const int count = grid.block_count();
    const int nn = grid.block_size * grid.block_size;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < count; ++b) {
        const T* src = grid.block(b);
        T* dst = out.block(b);
        for (int k = 0; k < nn; ++k) dst[k] = fb.q[k] * src[k];
    }
    return out;
}

/// Gradient of the shared filter bank for the elementwise product step:
/// dL/dQ = sum over blocks of (upstream_b * original_b). The sum runs in
/// ascending block order per cell, so results are reproducible bit-for-bit.
template <typename T>
std::vector<T> filter_bank_gradient(const BlockGrid<T>& original, const BlockGrid<T>& upstream) {
    require(original.block_size == upstream.block_size &&
                original.block_count() == upstream.block_count(),
            "filter_bank_gradient: shape mismatch");
    const int nn = original.block_size * original.block_size;
    const int count = original.block_count();
    std::vector<T> grad(nn, T(0));
#pragma omp parallel for schedule(static)
    for (int k = 0; k < nn; ++k) {
        T acc = T(0);
        for (int b = 0; b < count; ++b) acc += upstream.block(b)[k] * original.block(b)[k];
        grad[k] = acc;
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Serial reference implementations kept for testing. The single-block
// transforms evaluate the defining sums directly and act as the mathematical
// oracle for the factored plan; the grid functions are plain serial loops
// used to pin down the parallel kernels bit-for-bit.
// ---------------------------------------------------------------------------

namespace reference {

template <typename T>
std::vector<T> dct2(const std::vector<T>& block, int n) {
    const double pi = 3.14159265358979323846;
    std::vector<T> out(static_cast<std::size_t>(n) * n, T(0));
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            const double au = (u == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            const double av = (v == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    acc += static_cast<double>(block[i * n + j]) *
                           std::cos(pi * (2.0 * i + 1.0) * u / (2.0 * n)) *
                           std::cos(pi * (2.0 * j + 1.0) * v / (2.0 * n));
            out[u * n + v] = static_cast<T>(au * av * acc);
        }
    return out;
}

template <typename T>
std::vector<T> idct2(const std::vector<T>& block, int n) {
    const double pi = 3.14159265358979323846;
    std::vector<T> out(static_cast<std::size_t>(n) * n, T(0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    const double au = (u == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
                    const double av = (v == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
                    acc += au * av * static_cast<double>(block[u * n + v]) *
                           std::cos(pi * (2.0 * i + 1.0) * u / (2.0 * n)) *
                           std::cos(pi * (2.0 * j + 1.0) * v / (2.0 * n));
                }
            out[i * n + j] = static_cast<T>(acc);
        }
    return out;
}

template <typename T>
BlockGrid<T> dct2_grid(const BlockGrid<T>& spatial) {
    BlockGrid<T> out = spatial;
    const DctPlan<T> plan(spatial.block_size);
    for (int b = 0; b < spatial.block_count(); ++b) plan.forward(spatial.block(b), out.block(b));
    return out;
}

template <typename T>
BlockGrid<T> idct2_grid(const BlockGrid<T>& freq) {
    BlockGrid<T> out = freq;
    const DctPlan<T> plan(freq.block_size);
    for (int b = 0; b < freq.block_count(); ++b) plan.inverse(freq.block(b), out.block(b));
    return out;
}

template <typename T>
BlockGrid<T> apply_filter_bank(const BlockGrid<T>& grid, const FilterBank<T>& fb) {
    require(grid.block_size == fb.size, "apply_filter_bank: size mismatch");
    BlockGrid<T> out = grid;
    const int nn = grid.block_size * grid.block_size;
    for (int b = 0; b < grid.block_count(); ++b) {
        const T* src = grid.block(b);
        T* dst = out.block(b);
        for (int k = 0; k < nn; ++k) dst[k] = fb.q[k] * src[k];
    }
    return out;
}

template <typename T>
std::vector<T> filter_bank_gradient(const BlockGrid<T>& original, const BlockGrid<T>& upstream) {
    require(original.block_size == upstream.block_size &&
                original.block_count() == upstream.block_count(),
            "filter_bank_gradient: shape mismatch");
    const int nn = original.block_size * original.block_size;
    std::vector<T> grad(nn, T(0));
    for (int k = 0; k < nn; ++k) {
        T acc = T(0);
        for (int b = 0; b < original.block_count(); ++b)
            acc += upstream.block(b)[k] * original.block(b)[k];
        grad[k] = acc;
    }
    return grad;
}

}  // namespace reference

}  // namespace mufia
