#include <cmath>
#include <random>

#include "doctest.h"
#include "mufia/blockdct.hpp"
#include "mufia/rng.hpp"

using namespace mufia;

namespace {

std::vector<double> random_block(int n, std::mt19937_64& rng) {
    std::vector<double> b(static_cast<std::size_t>(n) * n);
    for (double& v : b) v = uniform_range(rng, -1.0, 1.0);
    return b;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Plane<double> random_plane(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Plane<double> p(h, w);
    for (double& v : p.v) v = uniform_range(rng, -1.0, 1.0);
    return p;
}

}  // namespace

TEST_SUITE("blockdct") {

TEST_CASE("partition and assemble invert each other") {
    const Plane<double> p = random_plane(12, 8, 5);
    const BlockGrid<double> grid = partition_blocks(p, 4);
    CHECK(grid.rows == 3);
    CHECK(grid.cols == 2);
    const Plane<double> back = assemble_blocks(grid);
    CHECK(back.v == p.v);

    SUBCASE("single block is verbatim") {
        const Plane<double> q = random_plane(4, 4, 6);
        const BlockGrid<double> g1 = partition_blocks(q, 4);
        CHECK(g1.block_count() == 1);
        CHECK(std::vector<double>(g1.block(0), g1.block(0) + 16) == q.v);
    }
    SUBCASE("2x2 grid of constant blocks lands in quadrants") {
        Plane<double> q(4, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                q.at(y, x) = (y / 2) * 2 + (x / 2);  // quadrant id
        const BlockGrid<double> g = partition_blocks(q, 2);
        for (int b = 0; b < 4; ++b)
            for (int k = 0; k < 4; ++k) CHECK(g.block(b)[k] == double(b));
    }
    SUBCASE("non-divisible dimensions error") {
        const Plane<double> bad = random_plane(33, 32, 7);
        CHECK_THROWS(partition_blocks(bad, 32));
    }
}

TEST_CASE("dct2 of known 2x2 blocks") {
    // constant block: only the DC term, equal to N for all-ones
    const std::vector<double> ones = {1, 1, 1, 1};
    const std::vector<double> f = dct2(ones, 2);
    CHECK(f[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(f[1]) < 1e-12);
    CHECK(std::abs(f[2]) < 1e-12);
    CHECK(std::abs(f[3]) < 1e-12);

    // impulse spreads evenly
    const std::vector<double> impulse = {1, 0, 0, 0};
    const std::vector<double> fi = dct2(impulse, 2);
    for (double v : fi) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

    // mirror example for the inverse
    const std::vector<double> dc = {2, 0, 0, 0};
    const std::vector<double> back = idct2(dc, 2);
    for (double v : back) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> zeros = {0, 0, 0, 0};
    for (double v : idct2(zeros, 2)) CHECK(v == 0.0);
}

TEST_CASE("plan matches the direct-summation reference") {
    std::mt19937_64 rng(11);
    for (int n : {2, 3, 4, 8, 16}) {
        const std::vector<double> x = random_block(n, rng);
        const std::vector<double> fast = dct2(x, n);
        const std::vector<double> ref = reference::dct2(x, n);
        for (std::size_t i = 0; i < fast.size(); ++i)
            CHECK(fast[i] == doctest::Approx(ref[i]).epsilon(1e-10));

        const std::vector<double> fast_inv = idct2(x, n);
        const std::vector<double> ref_inv = reference::idct2(x, n);
        for (std::size_t i = 0; i < fast_inv.size(); ++i)
            CHECK(fast_inv[i] == doctest::Approx(ref_inv[i]).epsilon(1e-10));
    }
}

TEST_CASE("inverse pair and Parseval over random blocks") {
    std::mt19937_64 rng(13);
    for (int n : {2, 4, 8, 16, 32}) {
        for (int trial = 0; trial < 10; ++trial) {
            const std::vector<double> x = random_block(n, rng);
            const std::vector<double> f = dct2(x, n);
            CHECK(std::abs(norm2(f) - norm2(x)) < 1e-9);
            const std::vector<double> back = idct2(f, n);
            double max_err = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                max_err = std::max(max_err, std::abs(back[i] - x[i]));
            CHECK(max_err < 1e-9);
        }
    }
}

TEST_CASE("filter bank application") {
    const Plane<double> p = random_plane(8, 8, 21);
    const BlockGrid<double> grid = dct2_grid(partition_blocks(p, 4));

    SUBCASE("all-ones leaves the grid unchanged") {
        const BlockGrid<double> out = apply_filter_bank(grid, FilterBank<double>::ones(4));
        CHECK(out.coeffs == grid.coeffs);
    }
    SUBCASE("all-zeros zeroes every block") {
        FilterBank<double> fb = FilterBank<double>::ones(4);
        for (double& q : fb.q) q = 0.0;
        const BlockGrid<double> out = apply_filter_bank(grid, fb);
        for (double v : out.coeffs) CHECK(v == 0.0);
    }
    SUBCASE("scaling the DC entry only") {
        FilterBank<double> fb = FilterBank<double>::ones(2);
        fb.at(0, 0) = 0.5;
        BlockGrid<double> g;
        g.block_size = 2;
        g.rows = g.cols = 1;
        g.coeffs = {2, 0, 0, 0};
        const BlockGrid<double> out = apply_filter_bank(g, fb);
        CHECK(out.coeffs[0] == 1.0);
        CHECK(out.coeffs[1] == 0.0);
    }
    SUBCASE("size mismatch errors") {
        CHECK_THROWS(apply_filter_bank(grid, FilterBank<double>::ones(8)));
    }
}

TEST_CASE("filter bank gradient sums per-cell block products") {
    BlockGrid<double> orig;
    orig.block_size = 2;
    orig.rows = 1;
    orig.cols = 2;
    orig.coeffs = {1, 2, 3, 4, 10, 20, 30, 40};

    BlockGrid<double> upstream = orig;
    upstream.coeffs = {1, 1, 1, 1, 1, 1, 1, 1};
    const std::vector<double> g = filter_bank_gradient(orig, upstream);
    CHECK(g == std::vector<double>{11, 22, 33, 44});

    upstream.coeffs.assign(8, 0.0);
    const std::vector<double> gz = filter_bank_gradient(orig, upstream);
    for (double v : gz) CHECK(v == 0.0);

    SUBCASE("single block with unit upstream returns the block") {
        BlockGrid<double> one;
        one.block_size = 2;
        one.rows = one.cols = 1;
        one.coeffs = {5, -6, 7, 8};
        BlockGrid<double> up = one;
        up.coeffs = {1, 1, 1, 1};
        CHECK(filter_bank_gradient(one, up) == one.coeffs);
    }
}

TEST_CASE("filter bank gradient matches finite differences") {
    std::mt19937_64 rng(31);
    const Plane<double> p = random_plane(8, 8, 33);
    const BlockGrid<double> grid = dct2_grid(partition_blocks(p, 4));

    // scalar functional: weighted sum of squares of the filtered grid
    std::vector<double> w(grid.coeffs.size());
    for (double& v : w) v = uniform_range(rng, -1.0, 1.0);
    auto functional = [&](const FilterBank<double>& fb) {
        const BlockGrid<double> out = apply_filter_bank(grid, fb);
        double s = 0.0;
        for (std::size_t i = 0; i < out.coeffs.size(); ++i) s += w[i] * out.coeffs[i] * out.coeffs[i];
        return s;
    };

    FilterBank<double> fb = FilterBank<double>::ones(4);
    for (double& q : fb.q) q = uniform_range(rng, 0.5, 1.5);

    const BlockGrid<double> filtered = apply_filter_bank(grid, fb);
    BlockGrid<double> upstream = filtered;
    for (std::size_t i = 0; i < upstream.coeffs.size(); ++i)
        upstream.coeffs[i] = 2.0 * w[i] * filtered.coeffs[i];
    const std::vector<double> grad = filter_bank_gradient(grid, upstream);

    const double step = 1e-6;
    for (int u = 0; u < 4; ++u)
        for (int v = 0; v < 4; ++v) {
            FilterBank<double> hi = fb, lo = fb;
            hi.at(u, v) += step;
            lo.at(u, v) -= step;
            const double fd = (functional(hi) - functional(lo)) / (2 * step);
            const double got = grad[u * 4 + v];
            CHECK(got == doctest::Approx(fd).epsilon(1e-6));
        }
}

TEST_CASE("uniformity: blocks share one bank, outputs stay independent") {
    const Plane<double> p = random_plane(8, 4, 41);
    BlockGrid<double> grid = partition_blocks(p, 4);
    FilterBank<double> fb = FilterBank<double>::ones(4);
    fb.at(1, 2) = 3.0;
    BlockGrid<double> out = apply_filter_bank(grid, fb);
    const double other_before = out.block(1)[5];
    out.block(0)[5] = 99.0;
    CHECK(out.block(1)[5] == other_before);
    for (int k = 0; k < 16; ++k)
        CHECK(out.block(1)[k] == fb.q[k] * grid.block(1)[k]);
}

TEST_CASE("parallel grid kernels match the serial reference bitwise") {
    const Plane<double> p = random_plane(32, 64, 55);
    for (int n : {2, 8, 16}) {
        const BlockGrid<double> spatial = partition_blocks(p, n);
        const BlockGrid<double> f_par = dct2_grid(spatial);
        const BlockGrid<double> f_ser = reference::dct2_grid(spatial);
        CHECK(f_par.coeffs == f_ser.coeffs);

        const BlockGrid<double> i_par = idct2_grid(f_par);
        const BlockGrid<double> i_ser = reference::idct2_grid(f_ser);
        CHECK(i_par.coeffs == i_ser.coeffs);

        FilterBank<double> fb = FilterBank<double>::ones(n);
        std::mt19937_64 rng(n);
        for (double& q : fb.q) q = uniform_range(rng, -2.0, 2.0);
        CHECK(apply_filter_bank(f_par, fb).coeffs == reference::apply_filter_bank(f_ser, fb).coeffs);
        CHECK(filter_bank_gradient(spatial, f_par) == reference::filter_bank_gradient(spatial, f_ser));
    }
}

}  // TEST_SUITE
