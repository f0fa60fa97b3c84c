#include <doctest.h>

#include <vector>

#include "dense_reference.hpp"
#include "sparsedge/checkpoint.hpp"
#include "sparsedge/engine.hpp"

using namespace sparsedge;

namespace {

InterleaverMap manual_map(int n_in, int n_out, int d_in, int d_out,
                          std::vector<std::int32_t> source) {
    InterleaverMap map;
    map.n_in = n_in;
    map.n_out = n_out;
    map.d_in = d_in;
    map.d_out = d_out;
    map.z = 1;
    map.cycles = static_cast<std::int64_t>(source.size());
    map.source = std::move(source);
    return map;
}

Network make_functional_net(const std::vector<int>& layers,
                            const std::vector<int>& fanouts, std::uint64_t seed,
                            const Arith& arith = real_arith()) {
    const auto topo = build_topology(layers, fanouts);
    std::vector<InterleaverMap> maps;
    for (int j = 0; j < topo.junction_count(); ++j)
        maps.push_back(generate(topo.layer_sizes[j], topo.layer_sizes[j + 1],
                                topo.fan_ins[j], topo.fan_outs[j], 1,
                                derive_seed(seed, j), IlvMode::functional));
    return build_network(topo, maps, arith, false, derive_seed(seed, 100));
}

Network make_hardware_net(const std::vector<int>& layers,
                          const std::vector<int>& fanouts,
                          const std::vector<int>& zs, std::uint64_t seed,
                          const Arith& arith = real_arith(),
                          bool hardware = true) {
    const auto topo = build_topology(layers, fanouts);
    std::vector<InterleaverMap> maps;
    for (int j = 0; j < topo.junction_count(); ++j)
        maps.push_back(generate(topo.layer_sizes[j], topo.layer_sizes[j + 1],
                                topo.fan_ins[j], topo.fan_outs[j], zs[j],
                                derive_seed(seed, j), IlvMode::hardware));
    return build_network(topo, maps, arith, hardware, derive_seed(seed, 100));
}

BankedMemory vec_bank(const std::vector<double>& v, int z = 1) {
    BankedMemory bank(z, static_cast<std::int64_t>(v.size()) / z);
    for (std::size_t i = 0; i < v.size(); ++i)
        bank.set(static_cast<std::int64_t>(i), v[i]);
    return bank;
}

std::vector<double> random_vec(SplitMix64& rng, int n, double r = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.next_symmetric(r);
    return v;
}

std::vector<double> weights_of(const Network& net) {
    std::vector<double> all;
    for (const auto& js : net.junctions) {
        const auto w = js.weights.data();
        all.insert(all.end(), w.begin(), w.end());
        all.insert(all.end(), js.biases.begin(), js.biases.end());
    }
    return all;
}

}  // namespace

TEST_CASE("feedforward: hand-computed 2->1 junction") {
    const auto topo = build_topology({2, 1}, {1});
    Network net = build_network(topo, {manual_map(2, 1, 2, 1, {0, 1})},
                                real_arith(), false, 0);
    auto w = net.junctions[0].weights.data();
    w[0] = 0.5;
    w[1] = -0.25;
    const auto res = ff_junction(net, net.junctions[0], vec_bank({1.0, 0.5}));
    // preact = 0.5*1.0 - 0.25*0.5 = 0.375
    CHECK(res.a[0] == doctest::Approx(0.59269).epsilon(1e-4));
    CHECK(res.deriv[0] == doctest::Approx(0.24141).epsilon(1e-4));
}

TEST_CASE("feedforward: zero weights give sigma(0) everywhere") {
    Network net = make_functional_net({8, 4, 2}, {2, 1}, 5);
    for (auto& js : net.junctions)
        js.weights.fill(0.0);
    SplitMix64 rng(1);
    const auto res = ff_junction(net, net.junctions[0], vec_bank(random_vec(rng, 8)));
    for (double a : res.a) CHECK(a == 0.5);
}

TEST_CASE("feedforward matches the dense oracle on a FC junction") {
    Network net = make_functional_net({10, 5}, {5}, 11);
    SplitMix64 rng(3);
    const auto input = random_vec(rng, 10);
    const auto res = ff_junction(net, net.junctions[0], vec_bank(input));

    const auto dense = dense_ref::from_network(net);
    const auto tr = dense_ref::forward(dense, input);
    for (int o = 0; o < 5; ++o) {
        CHECK(res.a[o] == doctest::Approx(tr.a[1][o]).epsilon(1e-12));
        CHECK(res.deriv[o] == doctest::Approx(tr.deriv[1][o]).epsilon(1e-12));
    }
}

TEST_CASE("output delta") {
    const Arith ar = real_arith();
    SUBCASE("perfect output gives zero delta") {
        const std::vector<double> a{0.3, 0.9}, deriv{0.21, 0.09};
        const auto d = output_delta(a, a, deriv, ar);
        CHECK(d[0] == 0.0);
        CHECK(d[1] == 0.0);
    }
    SUBCASE("scalar example") {
        const auto d = output_delta(std::vector<double>{0.8},
                                    std::vector<double>{0.0},
                                    std::vector<double>{0.16}, ar);
        CHECK(d[0] == doctest::Approx(0.128).epsilon(1e-12));
    }
    SUBCASE("fixed mode quantizes the real-mode result") {
        const FxFormat fmt = FxFormat::make(10, 3);
        const Arith fx = fixed_arith(fmt);
        const double a = quantize_real(0.8, fmt), t = 0.0,
                     dv = quantize_real(0.16, fmt);
        const auto d = output_delta(std::vector<double>{a}, std::vector<double>{t},
                                    std::vector<double>{dv}, fx);
        CHECK(d[0] == quantize_real((a - t) * dv, fmt));
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(output_delta(std::vector<double>{0.1},
                                     std::vector<double>{0.1, 0.2},
                                     std::vector<double>{0.1}, ar),
                        ShapeError);
    }
}

TEST_CASE("backpropagation") {
    SUBCASE("FC junction equals transpose matrix-vector times deriv") {
        Network net = make_functional_net({6, 4}, {4}, 21);
        SplitMix64 rng(9);
        const auto delta_next = random_vec(rng, 4);
        const auto deriv_prev = random_vec(rng, 6, 0.25);
        const auto got = bp_junction(net, net.junctions[0], delta_next,
                                     vec_bank(deriv_prev));
        const auto dense = dense_ref::from_network(net);
        for (int i = 0; i < 6; ++i) {
            double s = 0.0;
            for (int o = 0; o < 4; ++o) s += dense.layers[0].weight[o][i] * delta_next[o];
            CHECK(got[i] == doctest::Approx(s * deriv_prev[i]).epsilon(1e-12));
        }
    }
    SUBCASE("zero deltas propagate zeros") {
        Network net = make_functional_net({8, 4, 2}, {2, 1}, 23);
        const auto got = bp_junction(net, net.junctions[0],
                                     std::vector<double>(4, 0.0),
                                     vec_bank(std::vector<double>(8, 0.3)));
        for (double d : got) CHECK(d == 0.0);
    }
    SUBCASE("single-edge junction: delta_prev = w * delta * deriv") {
        const auto topo = build_topology({1, 1}, {1});
        Network net = build_network(topo, {manual_map(1, 1, 1, 1, {0})},
                                    real_arith(), false, 0);
        net.junctions[0].weights.data()[0] = 0.7;
        const auto got = bp_junction(net, net.junctions[0],
                                     std::vector<double>{0.2},
                                     vec_bank({0.5}));
        CHECK(got[0] == doctest::Approx(0.7 * 0.2 * 0.5).epsilon(1e-15));
    }
}

TEST_CASE("weight update") {
    SUBCASE("zero gradient leaves weights unchanged") {
        Network net = make_functional_net({8, 4}, {2}, 31);
        const auto before = weights_of(net);
        up_junction(net, net.junctions[0], std::vector<double>(4, 0.0),
                    vec_bank(std::vector<double>(8, 0.9)));
        CHECK(weights_of(net) == before);
    }
    SUBCASE("scalar case") {
        const auto topo = build_topology({1, 1}, {1});
        Network net = build_network(topo, {manual_map(1, 1, 1, 1, {0})},
                                    real_arith(), false, 0);
        net.use_bias = false;
        net.eta = 0.5;
        net.junctions[0].weights.data()[0] = 1.0;
        up_junction(net, net.junctions[0], std::vector<double>{0.2},
                    vec_bank({0.5}));
        CHECK(net.junctions[0].weights.data()[0] == doctest::Approx(0.95).epsilon(1e-15));
    }
    SUBCASE("FC junction equals the outer-product oracle") {
        Network net = make_functional_net({5, 3}, {3}, 33);
        net.eta = 0.25;
        SplitMix64 rng(12);
        const auto delta_next = random_vec(rng, 3);
        const auto a_prev = random_vec(rng, 5);
        auto dense = dense_ref::from_network(net);
        up_junction(net, net.junctions[0], delta_next, vec_bank(a_prev));
        const auto updated = dense_ref::from_network(net);
        for (int o = 0; o < 3; ++o) {
            for (int i = 0; i < 5; ++i)
                CHECK(updated.layers[0].weight[o][i] ==
                      doctest::Approx(dense.layers[0].weight[o][i] -
                                      0.25 * delta_next[o] * a_prev[i])
                          .epsilon(1e-12));
            CHECK(updated.layers[0].bias[o] ==
                  doctest::Approx(dense.layers[0].bias[o] - 0.25 * delta_next[o])
                      .epsilon(1e-12));
        }
    }
}

TEST_CASE("run_sequential equals the dense masked reference") {
    SplitMix64 rng(77);
    for (int iter = 0; iter < 30; ++iter) {
        // random small topology with guaranteed integral fan-ins
        const int layers = 2 + static_cast<int>(rng.next_below(3));
        std::vector<int> sizes;
        std::vector<int> fanouts;
        int n = 2 + static_cast<int>(rng.next_below(6));
        sizes.push_back(n * (1 + static_cast<int>(rng.next_below(3))));
        for (int j = 1; j < layers; ++j) {
            sizes.push_back(n);
            fanouts.push_back(1 + static_cast<int>(rng.next_below(n)));
        }
        Network net = make_functional_net(sizes, fanouts, rng.next());
        net.eta = 0.5;
        auto dense = dense_ref::from_network(net);

        for (int step = 0; step < 3; ++step) {
            const auto input = random_vec(rng, sizes.front());
            std::vector<double> target(sizes.back(), 0.0);
            target[rng.next_below(sizes.back())] = 1.0;
            const auto out = run_sequential(net, input, target);
            const auto dense_out = dense_ref::sgd_step(dense, input, target, net.eta);
            for (std::size_t o = 0; o < out.size(); ++o)
                CHECK(out[o] == doctest::Approx(dense_out[o]).epsilon(1e-12));
            const auto updated = dense_ref::from_network(net);
            for (std::size_t j = 0; j < dense.layers.size(); ++j)
                for (std::size_t o = 0; o < dense.layers[j].weight.size(); ++o)
                    for (std::size_t i = 0; i < dense.layers[j].weight[o].size(); ++i)
                        CHECK(updated.layers[j].weight[o][i] ==
                              doctest::Approx(dense.layers[j].weight[o][i])
                                  .epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    SplitMix64 rng(123);
    for (int iter = 0; iter < 5; ++iter) {
        Network net = make_functional_net({6, 4, 2}, {2, 1}, rng.next());
        const auto input = random_vec(rng, 6);
        std::vector<double> target{1.0, 0.0};

        auto loss_of = [&](const Network& n) {
            const auto out = forward(n, input);
            double loss = 0.0;
            for (std::size_t o = 0; o < out.size(); ++o) {
                const double d = out[o] - target[o];
                loss += 0.5 * d * d;
            }
            return loss;
        };

        // analytic gradient: delta[j][o] * a[j-1][src] per edge
        std::vector<BankedMemory> act, deriv;
        act.push_back(vec_bank(input));
        for (int j = 0; j < 2; ++j) {
            const auto res = ff_junction(net, net.junctions[j], act.back());
            act.push_back(vec_bank(res.a));
            deriv.push_back(vec_bank(res.deriv));
        }
        std::vector<std::vector<double>> delta(3);
        {
            std::vector<double> a_out(act[2].data().begin(), act[2].data().end());
            std::vector<double> d_out(deriv[1].data().begin(), deriv[1].data().end());
            delta[2] = output_delta(a_out, target, d_out, net.arith);
        }
        delta[1] = bp_junction(net, net.junctions[1], delta[2], deriv[0]);

        const double h = 1e-6;
        for (int j = 0; j < 2; ++j) {
            auto& js = net.junctions[j];
            for (std::int64_t e = 0; e < js.map.edge_count(); ++e) {
                const double analytic =
                    delta[j + 1][e / js.d_in()] * act[j].get(js.map.source[e]);
                auto w = js.weights.data();
                const double saved = w[e];
                w[e] = saved + h;
                const double lp = loss_of(net);
                w[e] = saved - h;
                const double lm = loss_of(net);
                w[e] = saved;
                const double fd = (lp - lm) / (2.0 * h);
                // denominator floor keeps finite-difference roundoff noise
                // (~1e-12 absolute) out of the relative-error comparison
                const double denom = std::max({1e-3, std::abs(analytic), std::abs(fd)});
                CHECK(std::abs(analytic - fd) / denom <= 1e-6);
            }
        }
    }
}

TEST_CASE("pipeline schedule reproduces the worked example") {
    // J=2: when junction 1 is on FF input n+2, junction 2 runs FF n+1,
    // BP n, UP n-1, and junction 1 runs BP n-1, UP n-2.
    const int J = 2;
    const std::int64_t n = 40;
    const std::int64_t t = n + 2;  // junction 1 FF input = t
    const auto s1 = schedule_at(t, 1, J);
    const auto s2 = schedule_at(t, 2, J);
    CHECK(s1.ff == n + 2);
    CHECK(s1.bp == n - 1);
    CHECK(s1.up == n - 2);
    CHECK(s2.ff == n + 1);
    CHECK(s2.bp == n);
    CHECK(s2.up == n - 1);

    // J=3 consistency: FF of junction j trails junction 1 by j-1 steps and
    // each junction's UP trails its BP by one step.
    for (int j = 1; j <= 3; ++j) {
        const auto s = schedule_at(100, j, 3);
        CHECK(s.ff == 100 - (j - 1));
        CHECK(s.up == s.bp - 1);
    }
}

TEST_CASE("bubbled pipeline is bit-identical to run_sequential") {
    struct Case {
        Arith arith;
        bool hardware;
    };
    const FxFormat fmt = FxFormat::make(10, 3);
    const std::vector<Case> cases{{real_arith(), true},
                                  {real_arith(), false},
                                  {fixed_arith(fmt), true},
                                  {fixed_arith(fmt), false}};
    for (const auto& c : cases) {
        CAPTURE(c.hardware);
        Network pipe_net = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 42,
                                             c.arith, c.hardware);
        Network seq_net = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 42,
                                            c.arith, c.hardware);
        pipe_net.eta = seq_net.eta = 0.5;
        const int J = 2;

        SplitMix64 rng(4242);
        std::vector<std::vector<double>> inputs, targets;
        for (int i = 0; i < 5; ++i) {
            inputs.push_back(random_vec(rng, 8));
            std::vector<double> t(2, 0.0);
            t[rng.next_below(2)] = 1.0;
            targets.push_back(t);
            if (c.arith.fixed())
                for (auto& x : inputs.back()) x = c.arith.q(x);
        }

        Pipeline pipe(pipe_net);
        for (int i = 0; i < 5; ++i) {
            pipe.step(inputs[i], targets[i]);
            for (int b = 0; b < 2 * J - 1; ++b) pipe.step_bubble();
        }
        pipe.drain();
        for (int i = 0; i < 5; ++i) run_sequential(seq_net, inputs[i], targets[i]);

        CHECK(weights_of(pipe_net) == weights_of(seq_net));
    }
}

TEST_CASE("steady-state concurrency is 3 ops per junction") {
    SUBCASE("J=2") {
        Network net = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 1);
        Pipeline pipe(net);
        SplitMix64 rng(5);
        for (int i = 0; i < 10; ++i) {
            pipe.step(random_vec(rng, 8), std::vector<double>{1.0, 0.0});
            if (i >= 2 * 2) CHECK(pipe.concurrent_ops_last_step() == 6);
        }
    }
    SUBCASE("J=3, functional") {
        Network net = make_functional_net({8, 4, 4, 2}, {2, 4, 1}, 2);
        Pipeline pipe(net);
        SplitMix64 rng(6);
        for (int i = 0; i < 12; ++i) {
            pipe.step(random_vec(rng, 8), std::vector<double>{1.0, 0.0});
            if (i >= 2 * 3) CHECK(pipe.concurrent_ops_last_step() == 9);
        }
    }
}

TEST_CASE("steady-state pipelined training is deterministic") {
    auto run = [] {
        Network net = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 9);
        Pipeline pipe(net);
        SplitMix64 rng(31);
        for (int i = 0; i < 50; ++i) {
            std::vector<double> in(8);
            for (auto& x : in) x = rng.next_unit();
            pipe.step(in, std::vector<double>{0.0, 1.0});
        }
        pipe.drain();
        return weights_of(net);
    };
    CHECK(run() == run());
}

TEST_CASE("banked and flat execution produce identical numerics") {
    for (bool pipelined : {false, true}) {
        CAPTURE(pipelined);
        Network hw = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 13, real_arith(), true);
        Network fn = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 13, real_arith(), false);
        SplitMix64 rng(8);
        std::vector<std::vector<double>> inputs;
        for (int i = 0; i < 20; ++i) inputs.push_back(random_vec(rng, 8));
        const std::vector<double> target{1.0, 0.0};
        if (pipelined) {
            Pipeline ph(hw), pf(fn);
            for (const auto& in : inputs) {
                ph.step(in, target);
                pf.step(in, target);
            }
            ph.drain();
            pf.drain();
        } else {
            for (const auto& in : inputs) {
                run_sequential(hw, in, target);
                run_sequential(fn, in, target);
            }
        }
        CHECK(weights_of(hw) == weights_of(fn));
    }
}

TEST_CASE("weight bank row locality stays within the 2-row budget") {
    Network net = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 3);
    Pipeline pipe(net);
    SplitMix64 rng(14);
    for (int i = 0; i < 20; ++i)
        pipe.step(random_vec(rng, 8), std::vector<double>{1.0, 0.0});
    pipe.drain();
    CHECK(net.counters.max_distinct_rows_per_cycle >= 1);
    CHECK(net.counters.max_distinct_rows_per_cycle <= 2);
}

TEST_CASE("a corrupted interleaver raises a clash") {
    Network net = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 17);
    // force two lanes of cycle 0 onto the same memory
    auto& map = net.junctions[0].map;
    map.source[1] = map.source[0];
    SplitMix64 rng(2);
    CHECK_THROWS_AS(
        ff_junction(net, net.junctions[0], vec_bank(random_vec(rng, 8), 8)),
        ClashError);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Network net = make_hardware_net({8, 4, 2}, {2, 1}, {8, 2}, 55,
                                    fixed_arith(FxFormat::make(10, 3)));
    net.eta = 0.75;
    SplitMix64 rng(66);
    Pipeline pipe(net);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> in(8);
        for (auto& x : in) x = net.arith.q(rng.next_unit());
        pipe.step(in, std::vector<double>{0.0, 1.0});
    }
    pipe.drain();

    std::stringstream ss;
    save_checkpoint(ss, net);
    Network loaded = load_checkpoint(ss);
    CHECK(weights_of(loaded) == weights_of(net));
    CHECK(loaded.eta == net.eta);
    CHECK(loaded.step_count == net.step_count);
    CHECK(loaded.hardware == net.hardware);
    for (int j = 0; j < 2; ++j)
        CHECK(loaded.junctions[j].map.source == net.junctions[j].map.source);

    std::stringstream ss2;
    save_checkpoint(ss2, loaded);
    CHECK(ss.str() == ss2.str());
}

TEST_CASE("eta = 0 leaves the network unchanged") {
    Network net = make_functional_net({8, 4, 2}, {2, 1}, 71);
    net.eta = 0.0;
    const auto before = weights_of(net);
    SplitMix64 rng(1);
    run_sequential(net, random_vec(rng, 8), std::vector<double>{1.0, 0.0});
    CHECK(weights_of(net) == before);
}
