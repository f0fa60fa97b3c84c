#ifndef SPARSEDGE_ENGINE_HPP
#define SPARSEDGE_ENGINE_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sparsedge/errors.hpp"
#include "sparsedge/fixedpoint.hpp"
#include "sparsedge/interleaver.hpp"
#include "sparsedge/memory_bank.hpp"
#include "sparsedge/rng.hpp"
#include "sparsedge/topology.hpp"

namespace sparsedge {

/// Arithmetic mode: real64, or saturating fixed point in the given format.
/// In fixed mode every stored value sits on the format grid; dot products
/// accumulate in a wide (double) accumulator and are rounded and saturated
/// once per neuron.
struct Arith {
    std::optional<FxFormat> fmt;

    bool fixed() const { return fmt.has_value(); }
    double q(double x) const { return fmt ? quantize_real(x, *fmt) : x; }
};

inline Arith real_arith() { return Arith{}; }
inline Arith fixed_arith(const FxFormat& f) { return Arith{f}; }

/// Weights and biases of one junction. Row r of the weight bank holds edges
/// r*z .. r*z+z-1 in natural order.
struct JunctionState {
    InterleaverMap map;
    BankedMemory weights;        // z x C, item e = edge e
    std::vector<double> biases;  // one per succeeding neuron

    int n_in() const { return map.n_in; }
    int n_out() const { return map.n_out; }
    int d_in() const { return map.d_in; }
    int z() const { return map.z; }
    std::int64_t cycles() const { return map.cycles; }
};

struct EngineCounters {
    std::int64_t permuted_reads = 0;       // clash-checked access groups
    int max_distinct_rows_per_cycle = 0;   // weight bank, per simulated cycle
};

struct Network {
    TopologySpec topo;
    std::vector<JunctionState> junctions;
    Arith arith;
    bool hardware = false;   // banked, clash-checked access vs flat access
    bool use_bias = true;
    double eta = 0.1;
    std::uint64_t init_seed = 0;
    std::int64_t step_count = 0;   // pipeline steps / sequential samples seen

    int junction_count() const { return static_cast<int>(junctions.size()); }

    mutable EngineCounters counters;
};

/// Uniform [-r, r] with r = sqrt(3 / d_in), one splitmix stream per junction.
inline Network build_network(const TopologySpec& topo,
                             const std::vector<InterleaverMap>& maps,
                             const Arith& arith, bool hardware,
                             std::uint64_t init_seed, bool use_bias = true) {
    if (maps.size() != static_cast<std::size_t>(topo.junction_count()))
        throw ShapeError("need one interleaver map per junction");
    Network net;
    net.topo = topo;
    net.arith = arith;
    net.hardware = hardware;
    net.use_bias = use_bias;
    net.init_seed = init_seed;
    for (int j = 0; j < topo.junction_count(); ++j) {
        const auto& map = maps[j];
        if (map.n_in != topo.layer_sizes[j] || map.n_out != topo.layer_sizes[j + 1] ||
            map.d_in != topo.fan_ins[j] || map.d_out != topo.fan_outs[j])
            throw ShapeError("interleaver map does not match topology");
        JunctionState js;
        js.map = map;
        js.weights = BankedMemory(map.z, map.cycles);
        js.biases.assign(map.n_out, 0.0);
        const double r = std::sqrt(3.0 / map.d_in);
        SplitMix64 rng(derive_seed(init_seed, static_cast<std::uint64_t>(j)));
        auto w = js.weights.data();
        for (std::int64_t e = 0; e < map.edge_count(); ++e)
            w[e] = arith.q(rng.next_symmetric(r));
        net.junctions.push_back(std::move(js));
    }
    return net;
}

struct FfResult {
    std::vector<double> a;      // sigma(preact + bias)
    std::vector<double> deriv;  // a * (1 - a)
};

/// Feedforward through one junction. Hardware mode reads the z source
/// activations per cycle in permuted order through the banked memory
/// (clash-checked); functional mode reads flat. Both accumulate in edge
/// order, so the numerics are identical.
inline FfResult ff_junction(const Network& net, const JunctionState& js,
                            const BankedMemory& a_prev) {
    if (a_prev.item_count() != js.n_in())
        throw ShapeError("activation vector does not match junction input");
    const auto& map = js.map;
    const Arith& ar = net.arith;
    std::vector<double> pre(js.n_out(), 0.0);
    const int d_in = js.d_in();
    if (net.hardware) {
        const int za = a_prev.z();
        std::vector<BankedMemory::Access> acc(js.z());
        std::vector<double> vals(js.z());
        for (std::int64_t c = 0; c < js.cycles(); ++c) {
            for (int l = 0; l < js.z(); ++l) {
                const std::int32_t s = map.at(c, l);
                acc[l] = {static_cast<int>(s % za), s / za};
            }
            a_prev.read_permuted(acc, vals);
            ++net.counters.permuted_reads;
            const auto wrow = js.weights.read_natural(c);
            const std::int64_t base = c * js.z();
            for (int l = 0; l < js.z(); ++l)
                pre[(base + l) / d_in] += wrow[l] * vals[l];
        }
    } else {
        const auto w = js.weights.data();
        const auto av = a_prev.data();
        for (std::int64_t e = 0; e < map.edge_count(); ++e)
            pre[e / d_in] += w[e] * av[map.source[e]];
    }
    FfResult res{std::vector<double>(js.n_out()), std::vector<double>(js.n_out())};
    for (int o = 0; o < js.n_out(); ++o) {
        const double bias = net.use_bias ? js.biases[o] : 0.0;
        const double p = ar.q(pre[o] + bias);
        const double a = ar.q(sigmoid(p));
        res.a[o] = a;
        res.deriv[o] = ar.q(a * (1.0 - a));
    }
    return res;
}

/// Output-layer delta for the quadratic cost: (a - target) .* deriv.
inline std::vector<double> output_delta(std::span<const double> a,
                                        std::span<const double> target,
                                        std::span<const double> deriv,
                                        const Arith& ar) {
    if (a.size() != target.size() || a.size() != deriv.size())
        throw ShapeError("output delta shape mismatch");
    std::vector<double> delta(a.size());
    for (std::size_t o = 0; o < a.size(); ++o)
        delta[o] = ar.q((a[o] - target[o]) * deriv[o]);
    return delta;
}

/// Backpropagate deltas through one junction:
/// delta_prev[source(e)] += w_e * delta_next[e div d_in], then .* deriv_prev.
/// Hardware mode accumulates through permuted read-modify-write on a banked
/// delta memory sized by this junction's z.
inline std::vector<double> bp_junction(const Network& net, const JunctionState& js,
                                       std::span<const double> delta_next,
                                       const BankedMemory& deriv_prev) {
    if (static_cast<int>(delta_next.size()) != js.n_out() ||
        deriv_prev.item_count() != js.n_in())
        throw ShapeError("bp shapes do not match junction");
    const auto& map = js.map;
    const Arith& ar = net.arith;
    const int d_in = js.d_in();
    std::vector<double> delta_prev(js.n_in());
    if (net.hardware) {
        BankedMemory acc(js.z(), js.n_in() / js.z());
        std::vector<BankedMemory::Access> pairs(js.z());
        std::vector<double> vals(js.z());
        const auto w = js.weights.data();
        for (std::int64_t c = 0; c < js.cycles(); ++c) {
            const std::int64_t base = c * js.z();
            for (int l = 0; l < js.z(); ++l) {
                const std::int32_t s = map.at(c, l);
                pairs[l] = {static_cast<int>(s % js.z()), s / js.z()};
                vals[l] = w[base + l] * delta_next[(base + l) / d_in];
            }
            acc.rmw_permuted(std::span<const BankedMemory::Access>(pairs),
                             std::span<const double>(vals),
                             [](double cell, double v) { return cell + v; });
            ++net.counters.permuted_reads;
        }
        for (int s = 0; s < js.n_in(); ++s)
            delta_prev[s] = ar.q(ar.q(acc.get(s)) * deriv_prev.get(s));
    } else {
        std::vector<double> accv(js.n_in(), 0.0);
        const auto w = js.weights.data();
        for (std::int64_t e = 0; e < map.edge_count(); ++e)
            accv[map.source[e]] += w[e] * delta_next[e / d_in];
        for (int s = 0; s < js.n_in(); ++s)
            delta_prev[s] = ar.q(ar.q(accv[s]) * deriv_prev.get(s));
    }
    return delta_prev;
}

/// Weight update: w_e <- w_e - eta * delta_next[e div d_in] * a_prev[source(e)],
/// one rounding per weight; bias_o <- bias_o - eta * delta_next[o].
inline void up_junction(const Network& net, JunctionState& js,
                        std::span<const double> delta_next,
                        const BankedMemory& a_prev) {
    if (static_cast<int>(delta_next.size()) != js.n_out() ||
        a_prev.item_count() != js.n_in())
        throw ShapeError("up shapes do not match junction");
    const auto& map = js.map;
    const Arith& ar = net.arith;
    const double eta = net.eta;
    const int d_in = js.d_in();
    if (net.hardware) {
        const int za = a_prev.z();
        std::vector<BankedMemory::Access> acc(js.z());
        std::vector<double> vals(js.z());
        for (std::int64_t c = 0; c < js.cycles(); ++c) {
            for (int l = 0; l < js.z(); ++l) {
                const std::int32_t s = map.at(c, l);
                acc[l] = {static_cast<int>(s % za), s / za};
            }
            a_prev.read_permuted(acc, vals);
            ++net.counters.permuted_reads;
            auto wrow = js.weights.row_natural(c);
            const std::int64_t base = c * js.z();
            for (int l = 0; l < js.z(); ++l)
                wrow[l] = ar.q(wrow[l] - eta * delta_next[(base + l) / d_in] * vals[l]);
        }
    } else {
        auto w = js.weights.data();
        const auto av = a_prev.data();
        for (std::int64_t e = 0; e < map.edge_count(); ++e)
            w[e] = ar.q(w[e] - eta * delta_next[e / d_in] * av[map.source[e]]);
    }
    if (net.use_bias) {
        for (int o = 0; o < js.n_out(); ++o)
            js.biases[o] = ar.q(js.biases[o] - eta * delta_next[o]);
    }
}

namespace detail {

// Activation / derivative / delta banks of layer k are sized by the z of the
// junction that reads them in permuted order (junction k+1 for activations,
// junction k+1's BP for deltas of layer k).
inline int layer_bank_z(const Network& net, int layer) {
    if (!net.hardware) return 1;
    if (layer < net.junction_count()) return net.junctions[layer].z();
    return 1;  // output layer is never read in permuted order
}

inline BankedMemory make_layer_bank(const Network& net, int layer) {
    const int n = net.topo.layer_sizes[layer];
    const int z = layer_bank_z(net, layer);
    return BankedMemory(z, n / z);
}

inline void fill_bank(BankedMemory& bank, std::span<const double> values) {
    auto cells = bank.data();
    for (std::size_t i = 0; i < values.size(); ++i) cells[i] = values[i];
}

}  // namespace detail

/// FF only, flat access; banking changes scheduling, not math, so this is
/// valid for hardware-mode networks too.
inline std::vector<double> forward(const Network& net,
                                   std::span<const double> input) {
    const int J = net.junction_count();
    std::vector<double> a(input.begin(), input.end());
    for (int j = 0; j < J; ++j) {
        const auto& js = net.junctions[j];
        if (static_cast<int>(a.size()) != js.n_in())
            throw ShapeError("input does not match network");
        std::vector<double> pre(js.n_out(), 0.0);
        const auto w = js.weights.data();
        const auto& src = js.map.source;
        const int d_in = js.d_in();
        for (std::int64_t e = 0; e < js.map.edge_count(); ++e)
            pre[e / d_in] += w[e] * a[src[e]];
        std::vector<double> next(js.n_out());
        for (int o = 0; o < js.n_out(); ++o) {
            const double bias = net.use_bias ? js.biases[o] : 0.0;
            next[o] = net.arith.q(sigmoid(net.arith.q(pre[o] + bias)));
        }
        a = std::move(next);
    }
    return a;
}

/// Reference single-sample SGD step: full FF, then full BP, then all UP.
/// Returns the output activations (pre-update) for metrics.
inline std::vector<double> run_sequential(Network& net,
                                          std::span<const double> input,
                                          std::span<const double> target) {
    const int J = net.junction_count();
    // FF
    std::vector<BankedMemory> act(J + 1);
    std::vector<BankedMemory> deriv(J + 1);
    act[0] = detail::make_layer_bank(net, 0);
    detail::fill_bank(act[0], input);
    for (int j = 1; j <= J; ++j) {
        FfResult res = ff_junction(net, net.junctions[j - 1], act[j - 1]);
        act[j] = detail::make_layer_bank(net, j);
        detail::fill_bank(act[j], res.a);
        deriv[j] = detail::make_layer_bank(net, j);
        detail::fill_bank(deriv[j], res.deriv);
    }
    std::vector<double> output(act[J].data().begin(), act[J].data().end());
    std::vector<double> deriv_out(deriv[J].data().begin(), deriv[J].data().end());
    // BP
    std::vector<std::vector<double>> delta(J + 1);
    delta[J] = output_delta(output, target, deriv_out, net.arith);
    for (int j = J; j >= 2; --j)
        delta[j - 1] = bp_junction(net, net.junctions[j - 1], delta[j], deriv[j - 1]);
    // UP
    for (int j = 1; j <= J; ++j)
        up_junction(net, net.junctions[j - 1], delta[j], act[j - 1]);
    ++net.step_count;
    return output;
}

/// Pipeline schedule: at step t, junction j (1-based) runs FF on input
/// t-(j-1), BP on input t-(2J-j), and UP on input t-(2J-j+1). Negative or
/// unfed indices are bubbles.
struct JunctionSchedule {
    std::int64_t ff;
    std::int64_t bp;
    std::int64_t up;
};

inline JunctionSchedule schedule_at(std::int64_t t, int j, int J) {
    return {t - (j - 1), t - (2 * J - j), t - (2 * J - j + 1)};
}

/// Junction-pipelined execution with operational parallelization: every
/// junction runs FF, BP, and UP each step, on different in-flight inputs.
///
/// Within a step, junction ops execute oldest-input-first (UP, then BP, then
/// FF), so a run with one input in flight matches run_sequential bit for
/// bit; queue snapshot writes commit at step end.
class Pipeline {
public:
    struct Completed {
        std::int64_t input_id = -1;
        std::vector<double> output;
        double loss = 0.0;   // 0.5 * sum (a - target)^2
    };

    explicit Pipeline(Network& net) : net_(net), J_(net.junction_count()) {
        const int J = J_;
        act_queues_.reserve(J);
        for (int k = 0; k < J; ++k) {
            const int z = detail::layer_bank_z(net, k);
            act_queues_.emplace_back(queue_depth(J, k, true), z,
                                     net.topo.layer_sizes[k] / z);
        }
        deriv_queues_.resize(J);  // index by layer, 1..J-1 used
        for (int k = 1; k < J; ++k) {
            const int z = detail::layer_bank_z(net, k);
            deriv_queues_[k] = QueueBank(queue_depth(J, k, false), z,
                                         net.topo.layer_sizes[k] / z);
        }
        const int ring = 2 * J + 2;
        fed_.assign(ring, 0);
        targets_.resize(ring);
        delta_slots_.assign(J + 1, std::vector<std::vector<double>>(4));
        delta_ids_.assign(J + 1, std::vector<std::int64_t>(4, -1));
    }

    std::int64_t t() const { return t_; }
    int concurrent_ops_last_step() const { return ops_last_step_; }
    const std::optional<Completed>& last_completed() const { return completed_; }

    /// Worst-junction cycle count; the steady-state cost of one step.
    std::int64_t cycles_per_step() const {
        std::int64_t c = 0;
        for (const auto& js : net_.junctions) c = std::max(c, js.cycles());
        return c;
    }

    void step(std::span<const double> input, std::span<const double> target) {
        step_impl(&input, &target);
    }
    void step_bubble() { step_impl(nullptr, nullptr); }

    /// Flush every in-flight input.
    void drain() {
        for (int i = 0; i < 2 * J_; ++i) step_bubble();
    }

private:
    bool fed(std::int64_t id) const {
        return id >= 0 && fed_[static_cast<std::size_t>(id % fed_.size())] != 0;
    }

    void put_delta(int layer, std::int64_t id, std::vector<double> v) {
        const std::size_t s = static_cast<std::size_t>(id % 4);
        delta_slots_[layer][s] = std::move(v);
        delta_ids_[layer][s] = id;
    }

    const std::vector<double>& get_delta(int layer, std::int64_t id) const {
        const std::size_t s = static_cast<std::size_t>(id % 4);
        if (delta_ids_[layer][s] != id)
            throw ShapeError("delta slot overwritten before use");
        return delta_slots_[layer][s];
    }

    void step_impl(std::span<const double>* input, std::span<const double>* target) {
        const int J = J_;
        const std::int64_t t = t_;
        completed_.reset();
        ops_last_step_ = 0;

        // Ingest: input t becomes available at step t, before any read.
        fed_[static_cast<std::size_t>(t % fed_.size())] = input ? 1 : 0;
        if (input) {
            if (static_cast<int>(input->size()) != net_.topo.layer_sizes[0] ||
                static_cast<int>(target->size()) != net_.topo.layer_sizes[J])
                throw ShapeError("input/target does not match network");
            BankedMemory& slot = act_queues_[0].acquire(t, t, t + 2 * J,
                                                        /*strict=*/true);
            detail::fill_bank(slot, *input);
            targets_[static_cast<std::size_t>(t % targets_.size())] =
                std::vector<double>(target->begin(), target->end());
        }

        // UP phase (oldest inputs).
        for (int j = 1; j <= J; ++j) {
            const std::int64_t i = schedule_at(t, j, J).up;
            if (!fed(i)) continue;
            up_junction(net_, net_.junctions[j - 1], get_delta(j, i),
                        act_queues_[j - 1].snapshot(i));
            ++ops_last_step_;
            note_rows(j);
        }

        // BP phase. Junction 1's slot is scheduled but computes nothing:
        // input deltas are never used.
        for (int j = J; j >= 1; --j) {
            const std::int64_t i = schedule_at(t, j, J).bp;
            if (!fed(i)) continue;
            if (j >= 2) {
                put_delta(j - 1, i,
                          bp_junction(net_, net_.junctions[j - 1], get_delta(j, i),
                                      deriv_queues_[j - 1].snapshot(i)));
            }
            ++ops_last_step_;
            note_rows(j);
        }

        // FF phase; output deltas fire as soon as an input completes layer J.
        struct Staged {
            int layer;
            std::int64_t id;
            std::vector<double> a, deriv;
        };
        std::vector<Staged> staged;
        for (int j = 1; j <= J; ++j) {
            const std::int64_t i = schedule_at(t, j, J).ff;
            if (!fed(i)) continue;
            FfResult res = ff_junction(net_, net_.junctions[j - 1],
                                       act_queues_[j - 1].snapshot(i));
            ++ops_last_step_;
            note_rows(j);
            if (j < J) {
                staged.push_back({j, i, std::move(res.a), std::move(res.deriv)});
            } else {
                const auto& tv = targets_[static_cast<std::size_t>(i % targets_.size())];
                put_delta(J, i, output_delta(res.a, tv, res.deriv, net_.arith));
                Completed done;
                done.input_id = i;
                double loss = 0.0;
                for (std::size_t o = 0; o < res.a.size(); ++o) {
                    const double d = res.a[o] - tv[o];
                    loss += 0.5 * d * d;
                }
                done.loss = loss;
                done.output = std::move(res.a);
                completed_ = std::move(done);
            }
        }

        // Commit staged queue writes at step end.
        for (auto& s : staged) {
            BankedMemory& a_slot =
                act_queues_[s.layer].acquire(s.id, t, s.id + 2 * J - s.layer);
            detail::fill_bank(a_slot, s.a);
            BankedMemory& d_slot =
                deriv_queues_[s.layer].acquire(s.id, t, s.id + 2 * J - s.layer - 1);
            detail::fill_bank(d_slot, s.deriv);
        }

        ++t_;
        ++net_.step_count;
    }

    void note_rows(int j) {
        // At cycle c the junction's ops read row c while the update's write
        // of row c-1 commits: at most 2 distinct rows per simulated cycle.
        const int rows = net_.junctions[j - 1].cycles() > 1 ? 2 : 1;
        net_.counters.max_distinct_rows_per_cycle =
            std::max(net_.counters.max_distinct_rows_per_cycle, rows);
    }

    Network& net_;
    int J_;
    std::int64_t t_ = 0;
    int ops_last_step_ = 0;
    std::vector<QueueBank> act_queues_;    // layer 0..J-1
    std::vector<QueueBank> deriv_queues_;  // layer 1..J-1
    std::vector<std::uint8_t> fed_;
    std::vector<std::vector<double>> targets_;
    std::vector<std::vector<std::vector<double>>> delta_slots_;  // [layer][slot]
    std::vector<std::vector<std::int64_t>> delta_ids_;
    std::optional<Completed> completed_;
};

}  // namespace sparsedge

#endif  // SPARSEDGE_ENGINE_HPP
