#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "uavbeam/geometry.hpp"

using namespace uavbeam;

namespace {

// Plain loop: sum_n conj(w_n) a_n.
std::complex<double> gain_loop(const ComplexVecd& w, const ComplexVecd& a)
{
    std::complex<double> s{0.0, 0.0};
    for (Eigen::Index n = 0; n < w.size(); ++n)
        s += std::conj(w(n)) * a(n);
    return s;
}

} // namespace

TEST_SUITE("geometry")
{
    TEST_CASE("steering vectors have unit norm")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ang(-4.0, 4.0);
        for (std::size_t n : {1u, 2u, 7u, 8u, 16u, 64u})
            for (int k = 0; k < 20; ++k) {
                const auto a = steering_vector(ang(rng), UlaConfig{n, 0.5});
                CHECK(std::abs(a.norm() - 1.0) < 1e-12);
            }
    }

    TEST_CASE("steering vector entries follow the array phase law")
    {
        const UlaConfig cfg{8, 0.5};
        const double theta = 0.3;
        const auto a = steering_vector(theta, cfg);
        for (int l = 0; l < 8; ++l) {
            const std::complex<double> expect =
                std::exp(std::complex<double>(0.0, 2.0 * std::numbers::pi * 0.5 * l * std::sin(theta))) /
                std::sqrt(8.0);
            CHECK(std::abs(a(l) - expect) < 1e-14);
        }
    }

    TEST_CASE("codebook angles and vectors")
    {
        const auto cb = make_codebook(UlaConfig{8, 0.5});
        REQUIRE(cb.size() == 8);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(cb.angles[i] == doctest::Approx(static_cast<double>(i) * std::numbers::pi / 8.0).epsilon(1e-15));
            CHECK(std::abs(cb.vectors[i].norm() - 1.0) < 1e-12);
        }
    }

    TEST_CASE("beamforming gain matches the scalar loop")
    {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> g;
        for (int trial = 0; trial < 50; ++trial) {
            const Eigen::Index n = 1 + trial % 16;
            ComplexVecd w(n), a(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                w(i) = {g(rng), g(rng)};
                a(i) = {g(rng), g(rng)};
            }
            CHECK(std::abs(beamforming_gain(w, a) - gain_loop(w, a)) < 1e-12);
        }
    }

    TEST_CASE("matched beam is maximal for on-grid angles")
    {
        for (std::size_t n : {4u, 8u, 16u}) {
            const UlaConfig cfg{n, 0.5};
            const auto cb = make_codebook(cfg);
            for (std::size_t i = 0; i < n; ++i) {
                const auto a = steering_vector(cb.angles[i], cfg);
                const double matched = std::abs(beamforming_gain(cb.vectors[i], a));
                CHECK(std::abs(matched - 1.0) < 1e-12);
                for (std::size_t j = 0; j < n; ++j)
                    CHECK(std::abs(beamforming_gain(cb.vectors[j], a)) <= matched + 1e-12);
            }
        }
    }

    TEST_CASE("mirror angles give identical codewords")
    {
        // sin(b) = sin(pi - b): codewords i and n - i coincide.
        const auto cb = make_codebook(UlaConfig{8, 0.5});
        for (std::size_t i = 1; i < 8; ++i)
            CHECK((cb.vectors[i] - cb.vectors[8 - i]).norm() < 1e-12);
    }

    TEST_CASE("single precision instantiation")
    {
        const auto cb = make_codebook<float>(UlaConfig{8, 0.5});
        CHECK(std::abs(cb.vectors[3].norm() - 1.0f) < 1e-6f);
    }

    TEST_CASE("invalid inputs")
    {
        CHECK_THROWS_AS(steering_vector(0.1, UlaConfig{0, 0.5}), ConfigError);
        CHECK_THROWS_AS(steering_vector(0.1, UlaConfig{4, 0.0}), ConfigError);
        CHECK_THROWS_AS(steering_vector(std::nan(""), UlaConfig{4, 0.5}), DomainError);
        ComplexVecd a(3), b(4);
        a.setOnes();
        b.setOnes();
        CHECK_THROWS_AS(beamforming_gain(a, b), DimensionError);
    }
}
