#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "gradcheck.hpp"
#include "uavbeam/error.hpp"
#include "uavbeam/neural.hpp"

using namespace uavbeam;

namespace {

// Forward pass with explicit loops.
Eigen::VectorXd forward_loop(const MlpParams& p, const Eigen::VectorXd& x)
{
    std::vector<double> a(x.data(), x.data() + x.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& L = p.layers[l];
        std::vector<double> z(static_cast<std::size_t>(L.weights.rows()));
        for (Eigen::Index i = 0; i < L.weights.rows(); ++i) {
            double s = L.bias(i);
            for (Eigen::Index j = 0; j < L.weights.cols(); ++j)
                s += L.weights(i, j) * a[static_cast<std::size_t>(j)];
            z[static_cast<std::size_t>(i)] = (l + 1 < p.layers.size()) ? std::max(0.0, s) : s;
        }
        a = std::move(z);
    }
    return Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
}

Eigen::VectorXd random_input(std::size_t n, Rng& rng)
{
    std::normal_distribution<double> g;
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (auto& v : x)
        v = g(rng);
    return x;
}

} // namespace

TEST_SUITE("neural")
{
    const std::vector<std::size_t> kShape{67, 128, 128, 64};

    TEST_CASE("forward matches the scalar loop")
    {
        Rng rng(1);
        const auto p = MlpParams::kaiming(kShape, rng);
        for (int t = 0; t < 20; ++t) {
            const auto x = random_input(67, rng);
            CHECK((forward(p, x) - forward_loop(p, x)).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    TEST_CASE("batch forward equals column-wise forward")
    {
        Rng rng(2);
        const auto p = MlpParams::kaiming(kShape, rng);
        Eigen::MatrixXd xs(67, 9);
        for (Eigen::Index c = 0; c < 9; ++c)
            xs.col(c) = random_input(67, rng);
        const auto ys = forward_batch(p, xs);
        for (Eigen::Index c = 0; c < 9; ++c)
            CHECK((ys.col(c) - forward(p, xs.col(c))).cwiseAbs().maxCoeff() < 1e-12);
        CHECK_THROWS_AS(forward(p, Eigen::VectorXd::Zero(5)), DimensionError);
    }

    TEST_CASE("gradients agree with central differences")
    {
        Rng rng(3);
        const std::vector<std::size_t> shape{6, 9, 7, 5};
        std::uniform_int_distribution<std::size_t> pick(0, 4);
        std::normal_distribution<double> g;
        double worst = 0.0;
        for (int t = 0; t < 120; ++t) {
            auto p = testing::random_instance(shape, rng);
            auto x = random_input(6, rng);
            while (testing::kink_distance(p, x) < 1e-5) {
                p = testing::random_instance(shape, rng);
                x = random_input(6, rng);
            }
            worst = std::max(worst, testing::gradient_relative_error(p, x, pick(rng), g(rng)));
        }
        CHECK(worst < 1e-4);
    }

    TEST_CASE("batch gradient is the mean of sample gradients")
    {
        Rng rng(4);
        const std::vector<std::size_t> shape{4, 6, 3};
        const auto p = MlpParams::kaiming(shape, rng);
        Eigen::MatrixXd xs(4, 3);
        const std::vector<std::size_t> idx{0, 2, 1};
        const std::vector<double> ys{0.5, -1.0, 2.0};
        MlpParams sum = MlpParams::zeros(shape);
        double loss = 0.0;
        for (Eigen::Index c = 0; c < 3; ++c) {
            xs.col(c) = random_input(4, rng);
            const auto one = mse_loss_and_grad(p, Eigen::VectorXd(xs.col(c)), idx[c], ys[c]);
            loss += one.loss / 3;
            for (std::size_t l = 0; l < sum.layers.size(); ++l) {
                sum.layers[l].weights += one.grads.layers[l].weights / 3;
                sum.layers[l].bias += one.grads.layers[l].bias / 3;
            }
        }
        const auto batch = mse_loss_and_grad(p, xs, idx, ys);
        CHECK(batch.loss == doctest::Approx(loss).epsilon(1e-12));
        for (std::size_t l = 0; l < sum.layers.size(); ++l) {
            CHECK((batch.grads.layers[l].weights - sum.layers[l].weights).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((batch.grads.layers[l].bias - sum.layers[l].bias).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    TEST_CASE("Adam matches a hand trace")
    {
        const std::vector<std::size_t> shape{1, 1};
        auto p = MlpParams::zeros(shape);
        AdamConfig cfg;
        cfg.learning_rate = 0.1;
        auto opt = AdamState::init(p, cfg);
        auto g = MlpParams::zeros(shape);

        g.layers[0].weights(0, 0) = 2.0;
        g.layers[0].bias(0) = -0.5;
        adam_step(p, g, opt);
        // first step: m_hat = g, v_hat = g^2, so the move is lr * sign(g) up to eps
        CHECK(p.layers[0].weights(0, 0) == doctest::Approx(-0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
        CHECK(p.layers[0].bias(0) == doctest::Approx(0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));

        const double w1 = p.layers[0].weights(0, 0);
        g.layers[0].weights(0, 0) = 1.0;
        adam_step(p, g, opt);
        const double m = 0.9 * 0.1 * 2.0 + 0.1 * 1.0;
        const double v = 0.999 * 0.001 * 4.0 + 0.001 * 1.0;
        const double m_hat = m / (1 - 0.9 * 0.9);
        const double v_hat = v / (1 - 0.999 * 0.999);
        CHECK(p.layers[0].weights(0, 0) == doctest::Approx(w1 - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-12));
        CHECK(opt.step == 2);
    }

    TEST_CASE("Kaiming initialisation statistics")
    {
        Rng rng(5);
        const auto p = MlpParams::kaiming(kShape, rng);
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            const auto& w = p.layers[l].weights;
            const double fan_in = static_cast<double>(w.cols());
            const double mean = w.mean();
            const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(w.size() - 1));
            CHECK(std::abs(sd / std::sqrt(2.0 / fan_in) - 1.0) < 0.10);
            CHECK(p.layers[l].bias.isZero());
        }
        CHECK(p.layer_sizes() == kShape);
    }

    TEST_CASE("checkpoint round trip")
    {
        Rng rng(6);
        const auto p = MlpParams::kaiming(kShape, rng);
        std::stringstream ss;
        save_checkpoint(ss, p);
        CHECK(ss.str().substr(0, 8) == "UAVBQNET");
        const auto q = load_checkpoint(ss);
        REQUIRE(q.same_shape(p));
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            CHECK(q.layers[l].weights == p.layers[l].weights);
            CHECK(q.layers[l].bias == p.layers[l].bias);
        }
        std::stringstream bad("NOTAQNET........");
        CHECK_THROWS_AS(load_checkpoint(bad), ConfigError);
        std::string s = ss.str();
        std::stringstream cut(s.substr(0, s.size() / 2));
        CHECK_THROWS_AS(load_checkpoint(cut), ConfigError);
    }
}
