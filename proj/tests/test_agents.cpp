#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "uavbeam/agents.hpp"

using namespace uavbeam;

namespace {

Transition tagged(double tag)
{
    Transition t;
    t.state = Eigen::VectorXd::Constant(1, tag);
    t.next_state = t.state;
    return t;
}

EnvConfig grid_env(std::size_t cells)
{
    EnvConfig cfg;
    cfg.grid = GridConfig::preset(cells);
    return cfg;
}

} // namespace

TEST_SUITE("agents")
{
    TEST_CASE("replay buffer is a ring")
    {
        ReplayBuffer rb(3);
        for (int i = 0; i < 5; ++i)
            rb.push(tagged(i));
        REQUIRE(rb.size() == 3);
        std::vector<double> seen;
        for (std::size_t i = 0; i < 3; ++i)
            seen.push_back(rb[i].state(0));
        std::sort(seen.begin(), seen.end());
        CHECK(seen == std::vector<double>{2, 3, 4});
        CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);
        Rng rng(1);
        CHECK_THROWS_AS(ReplayBuffer(4).sample_indices(1, rng), ContractError);
    }

    TEST_CASE("replay sampling is uniform")
    {
        const std::size_t n = 50, draws = 200000;
        ReplayBuffer rb(n);
        for (std::size_t i = 0; i < n; ++i)
            rb.push(tagged(static_cast<double>(i)));
        Rng rng(4);
        std::vector<double> counts(n, 0.0);
        for (std::size_t k : rb.sample_indices(draws, rng))
            counts[k] += 1.0;
        // binomial: mean d/n, sd sqrt(d p (1 - p))
        const double p = 1.0 / n;
        const double mean = draws * p;
        const double sd = std::sqrt(draws * p * (1 - p));
        std::size_t outside = 0;
        for (double c : counts)
            outside += std::abs(c - mean) > 3 * sd;
        CHECK(outside <= 1); // about 0.14 expected out of 50
    }

    TEST_CASE("epsilon schedule")
    {
        EpsilonSchedule e{1.0, 0.05, 20.0};
        CHECK(e.at(0) == 1.0);
        CHECK(e.at(20) == doctest::Approx(0.05 + 0.95 * std::exp(-1.0)));
        CHECK(e.at(100000) == doctest::Approx(0.05));
        CHECK_THROWS_AS((EpsilonSchedule{0.1, 0.5, 1.0}.validate()), ConfigError);

        DqnAgent agent(3, 2, DqnConfig{}, 1);
        Rng rng(1);
        Eigen::VectorXd s = Eigen::VectorXd::Zero(3);
        CHECK(agent.epsilon() == 1.0);
        agent.select_action(s, rng);
        CHECK(agent.exploration_steps() == 0); // warmup does not advance the schedule
        agent.set_phase(AgentPhase::Training);
        for (int i = 0; i < 20; ++i)
            agent.select_action(s, rng);
        CHECK(agent.epsilon() == doctest::Approx(agent.config().epsilon.at(20)));
    }

    TEST_CASE("target network lags by the sync period")
    {
        DqnConfig cfg;
        cfg.hidden = {8};
        cfg.minibatch = 4;
        cfg.target_period = 5;
        DqnAgent agent(2, 3, cfg, 7);
        Rng rng(2);
        CHECK_FALSE(agent.train_step(rng).has_value());
        for (int i = 0; i < 8; ++i) {
            Transition t;
            t.state = Eigen::Vector2d(i, 1.0);
            t.next_state = Eigen::Vector2d(i + 1, 1.0);
            t.action = static_cast<std::size_t>(i % 3);
            t.reward = 1.0;
            agent.remember(t);
        }
        const MlpParams initial = agent.target();
        for (int k = 1; k <= 4; ++k) {
            REQUIRE(agent.train_step(rng).has_value());
            CHECK(agent.target().layers[0].weights == initial.layers[0].weights);
            CHECK(agent.primary().layers[0].weights != initial.layers[0].weights);
        }
        agent.train_step(rng);
        CHECK(agent.updates() == 5);
        CHECK(agent.target().layers[0].weights == agent.primary().layers[0].weights);
        CHECK(agent.target().layers[1].bias == agent.primary().layers[1].bias);
    }

    TEST_CASE("gamma = 0 regresses Q onto the immediate reward")
    {
        DqnConfig cfg;
        cfg.hidden = {16};
        cfg.gamma = 0.0;
        cfg.minibatch = 16;
        cfg.adam.learning_rate = 1e-2;
        DqnAgent agent(2, 3, cfg, 3);
        const std::vector<double> reward{1.0, -1.0, 0.4};
        const Eigen::Vector2d s(0.3, -0.2);
        for (int i = 0; i < 300; ++i) {
            const auto a = static_cast<std::size_t>(i % 3);
            agent.remember({s, a, reward[a], s, false});
        }
        Rng rng(5);
        for (int i = 0; i < 1500; ++i)
            agent.train_step(rng);
        const auto q = agent.q_values(s);
        for (std::size_t a = 0; a < 3; ++a)
            CHECK(std::abs(q(static_cast<Eigen::Index>(a)) - reward[a]) < 0.1);
        CHECK(agent.greedy_action(s) == 0);
    }

    TEST_CASE("agent checkpoint round trip")
    {
        DqnConfig cfg;
        cfg.hidden = {8, 8};
        DqnAgent a(4, 5, cfg, 1), b(4, 5, cfg, 2);
        std::stringstream ss;
        a.save(ss);
        b.load(ss);
        const Eigen::Vector4d s(0.1, 0.2, -0.3, 0.4);
        CHECK(a.q_values(s) == b.q_values(s));
        DqnAgent wrong(4, 6, cfg, 1);
        std::stringstream again;
        a.save(again);
        CHECK_THROWS_AS(wrong.load(again), DimensionError);
    }

    TEST_CASE("gUCB tries every arm once, then follows UCB1")
    {
        GucbAgent g(2, 4);
        for (std::size_t a = 0; a < 4; ++a) {
            CHECK(g.select(0) == a);
            g.update(0, a, a == 2 ? 1 : -1);
        }
        CHECK(g.pulls(0) == 4);
        CHECK(g.pulls(1) == 0);
        CHECK(g.select(1) == 0);
        // All counts are 1, so the bonus is equal and the mean decides.
        CHECK(g.select(0) == 2);
        g.update(0, 2, -1);
        CHECK(g.mean(0, 2) == 0.0);
        CHECK(g.count(0, 2) == 2);
        // index_a = mean_a + sqrt(2 ln 5 / n_a): arm 2 has 0 + 1.2686, the others -1 + 1.7941
        const double others = -1.0 + std::sqrt(2.0 * std::log(5.0));
        const double arm2 = 0.0 + std::sqrt(2.0 * std::log(5.0) / 2.0);
        CHECK(g.select(0) == (arm2 > others ? 2u : 0u));

        GucbAgent greedy(1, 3, GucbConfig{0.0});
        greedy.update(0, 0, -1);
        greedy.update(0, 1, 1);
        greedy.update(0, 2, 1);
        CHECK(greedy.select(0) == 1); // tie between 1 and 2, lowest index
    }

    TEST_CASE("warmup sweeps every action of every cell")
    {
        BeamEnv env(grid_env(72), 3);
        DqnConfig cfg;
        cfg.hidden = {8};
        DqnAgent agent(env.encoding_size(), env.num_actions(), cfg, 3);
        Rng rng(3);
        RunLog log;
        std::vector<std::size_t> cells(72);
        std::iota(cells.begin(), cells.end(), std::size_t{0});
        const auto ttu = run_warmup(agent, env, cells, rng, log);
        CHECK(ttu == 72 * 64);
        CHECK(env.ttu() == 4608);
        CHECK(log.episodes.size() == 72);
        CHECK(agent.replay().size() == 4608);
        for (std::size_t c = 0; c < 72; ++c) {
            CHECK(log.episodes[c].length == 64);
            CHECK(log.episodes[c].ttu_cost == 64);
            CHECK(*env.record().best_rate[c] == doctest::Approx(env.rate(c, env.best_action(c))).epsilon(1e-12));
        }
        CHECK(agent.phase() == AgentPhase::Training);
    }

    TEST_CASE("exhaustive alignment costs |A| TTU")
    {
        BeamEnv env(grid_env(8), 1);
        Rng rng(1);
        RunLog log;
        run_exhaustive(env, 25, rng, log);
        for (const auto& e : log.episodes)
            CHECK(e.ttu_cost == 64);
        CHECK(env.ttu() == 25 * 64);
    }

    TEST_CASE("DQN learns one cell")
    {
        BeamEnv env(grid_env(1), 5);
        DqnAgent agent(env.encoding_size(), env.num_actions(), DqnConfig{}, 5);
        Rng rng(5);
        RunLog log;
        const std::size_t cells[] = {0};
        run_warmup(agent, env, cells, rng, log);
        run_training(agent, env, 300, rng, log);
        // mirrored codewords make some pairs exact duplicates, so compare rates
        CHECK(std::abs(env.rate(0, dqn_policy(agent, env)(0)) - env.rate(0, env.best_action(0))) < 1e-9);
        std::uint64_t ttu = 0;
        for (const auto& e : log.episodes)
            ttu += e.ttu_cost;
        CHECK(ttu == env.ttu());
    }

    TEST_CASE("gUCB converges on one cell")
    {
        BeamEnv env(grid_env(1), 5);
        GucbAgent agent(1, env.num_actions());
        Rng rng(5);
        RunLog log;
        run_gucb(agent, env, 300, rng, log);
        CHECK(std::abs(env.rate(0, gucb_policy(agent, env)(0)) - env.rate(0, env.best_action(0))) < 1e-9);
    }
}
