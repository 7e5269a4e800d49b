#include <cmath>
#include <random>

#include "doctest.h"
#include "mufia/losses.hpp"
#include "mufia/rng.hpp"

using namespace mufia;

namespace {

// central finite differences of a scalar function of a vector
template <typename F>
std::vector<double> fd_gradient(F&& f, const std::vector<double>& x, double step = 1e-4) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> hi = x, lo = x;
        hi[i] += step;
        lo[i] -= step;
        g[i] = (f(hi) - f(lo)) / (2 * step);
    }
    return g;
}

void check_close(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max({std::abs(got[i]), std::abs(want[i]), 1e-8});
        CHECK(std::abs(got[i] - want[i]) / denom < tol);
    }
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("cosine similarity values") {
    CHECK(cosine_similarity<double>({3, 4}, {3, 4}).value == 1.0);
    CHECK(cosine_similarity<double>({1, 0}, {0, 1}).value == 0.0);
    CHECK(cosine_similarity<double>({1, 1}, {1, 0}).value ==
          doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
    CHECK(cosine_similarity<double>({1, 2}, {-1, -2}).value == doctest::Approx(-1.0));

    SUBCASE("identical inputs give an exactly zero gradient") {
        const auto r = cosine_similarity<double>({0.3, -1.7, 2.9}, {0.3, -1.7, 2.9});
        for (double g : r.grad_a) CHECK(g == 0.0);
    }
    SUBCASE("near-zero norms error") {
        CHECK_THROWS(cosine_similarity<double>({0, 0}, {1, 0}));
        CHECK_THROWS(cosine_similarity<double>({1, 0}, {1e-13, 0}));
    }
}

TEST_CASE("cosine gradient matches finite differences") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a(5), b(5);
        for (double& v : a) v = uniform_range(rng, -2.0, 2.0);
        for (double& v : b) v = uniform_range(rng, -2.0, 2.0);
        const auto r = cosine_similarity(a, b);
        const auto fd = fd_gradient(
            [&](const std::vector<double>& x) { return cosine_similarity(x, b).value; }, a);
        check_close(std::vector<double>(r.grad_a.begin(), r.grad_a.end()), fd, 1e-4);
    }
}

TEST_CASE("adversarial hinge loss") {
    SUBCASE("perfect alignment") {
        const auto r = adversarial_loss<double>({5, 0, 0}, 0, 0.99);
        CHECK(r.cos_to_label == doctest::Approx(1.0));
        CHECK(r.value == doctest::Approx(1.99));
    }
    SUBCASE("hinge inactive at full misalignment") {
        const auto r = adversarial_loss<double>({-1, 0, 0}, 0, 0.99);
        CHECK(r.cos_to_label == doctest::Approx(-1.0));
        CHECK(r.value == 0.0);
        for (double g : r.grad) CHECK(g == 0.0);
    }
    SUBCASE("orthogonal logits") {
        const auto r = adversarial_loss<double>({0, 1, 0}, 0, 0.99);
        CHECK(r.cos_to_label == doctest::Approx(0.0));
        CHECK(r.value == doctest::Approx(0.99));
    }
    SUBCASE("zero exactly when cos <= -kappa") {
        // cos = -0.6 against kappa 0.6 sits at the kink: value and grad 0
        const double c = -0.6;
        std::vector<double> logits = {c, std::sqrt(1 - c * c), 0.0};
        const auto r = adversarial_loss<double>(logits, 0, 0.6);
        CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));
        const auto below = adversarial_loss<double>({-0.7, std::sqrt(1 - 0.49), 0.0}, 0, 0.6);
        CHECK(below.value == 0.0);
        for (double g : below.grad) CHECK(g == 0.0);
        const auto above = adversarial_loss<double>({-0.5, std::sqrt(1 - 0.25), 0.0}, 0, 0.6);
        CHECK(above.value > 0.0);
    }
    SUBCASE("gradient matches finite differences where the hinge is active") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> logits(4);
            for (double& v : logits) v = uniform_range(rng, 0.1, 2.0);
            const auto r = adversarial_loss<double>(logits, 2, 0.5);
            REQUIRE(r.value > 0.0);
            const auto fd = fd_gradient(
                [&](const std::vector<double>& x) {
                    return adversarial_loss<double>(x, 2, 0.5).value;
                },
                logits);
            check_close(std::vector<double>(r.grad.begin(), r.grad.end()), fd, 1e-4);
        }
    }
    SUBCASE("bad arguments") {
        CHECK_THROWS(adversarial_loss<double>({1, 0}, 2, 0.5));
        CHECK_THROWS(adversarial_loss<double>({1, 0}, 0, 1.5));
    }
}

TEST_CASE("similarity loss") {
    SUBCASE("identical spectra give exactly zero") {
        const std::vector<double> s = {0.4, -1.2, 3.3, 0.01};
        const auto r = similarity_loss(s, s);
        CHECK(r.value == 0.0);
        for (double g : r.grad) CHECK(g == 0.0);
    }
    SUBCASE("antipodal spectra give 2") {
        const std::vector<double> s = {1, -2, 3};
        std::vector<double> neg = s;
        for (double& v : neg) v = -v;
        CHECK(similarity_loss(s, neg).value == doctest::Approx(2.0));
    }
    SUBCASE("orthogonal spectra give 1") {
        CHECK(similarity_loss<double>({1, 0}, {0, 1}).value == doctest::Approx(1.0));
    }
    SUBCASE("invariant to positive scaling of the adversarial spectrum") {
        std::mt19937_64 rng(7);
        std::vector<double> orig(6), adv(6);
        for (double& v : orig) v = uniform_range(rng, -1.0, 1.0);
        for (double& v : adv) v = uniform_range(rng, -1.0, 1.0);
        const double base = similarity_loss(orig, adv).value;
        for (double s : {0.25, 4.0, 1e3}) {
            std::vector<double> scaled = adv;
            for (double& v : scaled) v *= s;
            CHECK(similarity_loss(orig, scaled).value == doctest::Approx(base).epsilon(1e-12));
        }
    }
    SUBCASE("gradient matches finite differences") {
        std::mt19937_64 rng(9);
        std::vector<double> orig(5), adv(5);
        for (double& v : orig) v = uniform_range(rng, -2.0, 2.0);
        for (double& v : adv) v = uniform_range(rng, -2.0, 2.0);
        const auto r = similarity_loss(orig, adv);
        const auto fd = fd_gradient(
            [&](const std::vector<double>& x) { return similarity_loss(orig, x).value; }, adv);
        check_close(std::vector<double>(r.grad.begin(), r.grad.end()), fd, 1e-4);
    }
}

TEST_CASE("total loss arithmetic") {
    const auto t = total_loss<double>(0.5, 0.02, 20.0);
    CHECK(t.total == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(t.adv == 0.5);
    CHECK(t.sim == 0.02);

    CHECK(total_loss<double>(0.7, 0.5, 0.0).total == 0.7);
    CHECK(total_loss<double>(0.0, 0.0, 20.0).total == 0.0);
    CHECK_THROWS(total_loss<double>(0.1, 0.1, -1.0));
}

TEST_CASE("cross-entropy losses") {
    SUBCASE("uniform logits") {
        const auto r = cross_entropy_adversarial_loss<double>({0.7, 0.7, 0.7}, 1);
        CHECK(r.value == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
    }
    SUBCASE("confident true class pushes value toward zero from below") {
        const auto r = cross_entropy_adversarial_loss<double>({30, 0, 0}, 0);
        CHECK(r.value < 0.0);
        CHECK(r.value > -1e-9);
    }
    SUBCASE("large logits stay finite through the max shift") {
        const auto r = softmax_cross_entropy<double>({1e4, -1e4, 0.0}, 1);
        CHECK(std::isfinite(r.value));
        CHECK(r.value == doctest::Approx(2e4));
    }
    SUBCASE("gradients match finite differences") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 8; ++trial) {
            std::vector<double> logits(4);
            for (double& v : logits) v = uniform_range(rng, -2.0, 2.0);

            const auto adv = cross_entropy_adversarial_loss<double>(logits, 1);
            const auto fd_adv = fd_gradient(
                [&](const std::vector<double>& x) {
                    return cross_entropy_adversarial_loss<double>(x, 1).value;
                },
                logits);
            check_close(std::vector<double>(adv.grad.begin(), adv.grad.end()), fd_adv, 1e-5);

            const auto ce = softmax_cross_entropy<double>(logits, 2);
            const auto fd_ce = fd_gradient(
                [&](const std::vector<double>& x) {
                    return softmax_cross_entropy<double>(x, 2).value;
                },
                logits);
            check_close(std::vector<double>(ce.grad.begin(), ce.grad.end()), fd_ce, 1e-5);
        }
    }
}

}  // TEST_SUITE
