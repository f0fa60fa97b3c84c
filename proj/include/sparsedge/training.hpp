#ifndef SPARSEDGE_TRAINING_HPP
#define SPARSEDGE_TRAINING_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparsedge/engine.hpp"
#include "sparsedge/errors.hpp"
#include "sparsedge/mnist.hpp"

namespace sparsedge {

/// Learning rate inversely proportional to connectivity, compensating for
/// the parameter reduction of a sparse network.
inline double scaled_lr(double eta_base, double connectivity) {
    if (connectivity <= 0.0)
        throw ConfigError("connectivity must be positive");
    return eta_base / connectivity;
}

struct TrainConfig {
    TopologySpec topo;
    std::optional<HardwareConfig> hw;   // absent: functional mode
    Arith arith;
    std::uint64_t seed_init = 1;
    std::uint64_t seed_il = 2;
    std::uint64_t seed_shuffle = 3;
    double eta_base = 0.1;
    int epochs = 5;
    int train_size = -1;  // -1: whole dataset
    int test_size = -1;
    bool pipelined = true;
    bool use_bias = true;

    bool hardware() const { return hw.has_value(); }

    /// eta_base / rho, clamped to the format bound in fixed mode and
    /// snapped onto the value grid.
    double effective_eta() const {
        double eta = scaled_lr(eta_base, topo.connectivity);
        if (arith.fixed()) {
            eta = std::min(eta, arith.fmt->max_value());
            eta = arith.q(eta);
            // A full-scale delta times a full-scale activation must still
            // move weights by a representable amount.
            if (eta * 0.25 > arith.fmt->max_value())
                throw ConfigError("learning rate overflows the fixed-point range");
        }
        return eta;
    }
};

struct EpochRecord {
    int epoch = 0;   // 1-based
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double mean_loss = 0.0;
};

struct MetricsSeries {
    std::vector<EpochRecord> records;
    std::string meta;
};

/// Fraction of items whose argmax over the first class_count outputs equals
/// the label argmax; ties break to the lowest index.
inline double evaluate(const Network& net, const Dataset& ds, int limit = -1) {
    std::size_t count = ds.size();
    if (limit >= 0 && static_cast<std::size_t>(limit) < count) count = limit;
    if (count == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const auto out = forward(net, ds.images[i]);
        if (static_cast<int>(out.size()) < ds.class_count)
            throw ShapeError("network output narrower than class count");
        int best = 0;
        for (int c = 1; c < ds.class_count; ++c)
            if (out[c] > out[best]) best = c;
        if (best == label_of(ds, i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(count);
}

inline std::vector<InterleaverMap> generate_maps(const TrainConfig& cfg) {
    std::vector<InterleaverMap> maps;
    for (int j = 0; j < cfg.topo.junction_count(); ++j) {
        const int z = cfg.hardware() ? cfg.hw->z_list[j] : 1;
        const IlvMode mode = cfg.hardware() ? IlvMode::hardware : IlvMode::functional;
        maps.push_back(generate(cfg.topo.layer_sizes[j], cfg.topo.layer_sizes[j + 1],
                                cfg.topo.fan_ins[j], cfg.topo.fan_outs[j], z,
                                derive_seed(cfg.seed_il, static_cast<std::uint64_t>(j)),
                                mode));
    }
    return maps;
}

struct TrainResult {
    MetricsSeries metrics;
    Network net;
};

/// Epochs of per-input SGD (pipelined or sequential) with seeded shuffling,
/// evaluating after each epoch. Deterministic given the three seeds.
/// Train accuracy and loss are measured on the fly at each input's output
/// step, so they see the weights as they evolve.
inline TrainResult train(const TrainConfig& cfg, const Dataset& train_ds,
                         const Dataset& test_ds) {
    if (cfg.hardware()) {
        const auto report = validate_hardware(cfg.topo, *cfg.hw);
        if (!report.ok())
            throw ConfigError("hardware constraints not met:\n" + report.describe());
    }
    const auto maps = generate_maps(cfg);
    TrainResult result{MetricsSeries{},
                       build_network(cfg.topo, maps, cfg.arith, cfg.hardware(),
                                     cfg.seed_init, cfg.use_bias)};
    Network& net = result.net;
    net.eta = cfg.effective_eta();

    std::size_t n_train = train_ds.size();
    if (cfg.train_size >= 0 && static_cast<std::size_t>(cfg.train_size) < n_train)
        n_train = cfg.train_size;
    const int J = net.junction_count();

    std::vector<std::size_t> order(n_train);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 rng(derive_seed(cfg.seed_shuffle, static_cast<std::uint64_t>(epoch)));
        shuffle_in_place(order, rng);

        std::size_t correct = 0;
        double loss_sum = 0.0;
        auto tally = [&](const std::vector<double>& out, std::size_t item, double loss) {
            int best = 0;
            for (int c = 1; c < train_ds.class_count; ++c)
                if (out[c] > out[best]) best = c;
            if (best == label_of(train_ds, item)) ++correct;
            loss_sum += loss;
        };

        if (cfg.pipelined) {
            Pipeline pipe(net);
            std::vector<std::size_t> in_flight;  // item per input id, id = feed step
            auto collect = [&] {
                if (const auto& done = pipe.last_completed()) {
                    tally(done->output, in_flight[done->input_id], done->loss);
                }
            };
            in_flight.reserve(n_train);
            for (std::size_t k = 0; k < n_train; ++k) {
                in_flight.push_back(order[k]);
                pipe.step(train_ds.images[order[k]], train_ds.labels[order[k]]);
                collect();
            }
            for (int b = 0; b < 2 * J; ++b) {
                pipe.step_bubble();
                collect();
            }
        } else {
            for (std::size_t k = 0; k < n_train; ++k) {
                const std::size_t item = order[k];
                const auto out =
                    run_sequential(net, train_ds.images[item], train_ds.labels[item]);
                double loss = 0.0;
                for (std::size_t o = 0; o < out.size(); ++o) {
                    const double d = out[o] - train_ds.labels[item][o];
                    loss += 0.5 * d * d;
                }
                tally(out, item, loss);
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_accuracy =
            n_train ? static_cast<double>(correct) / static_cast<double>(n_train) : 0.0;
        rec.mean_loss = n_train ? loss_sum / static_cast<double>(n_train) : 0.0;
        rec.test_accuracy = evaluate(net, test_ds, cfg.test_size);
        result.metrics.records.push_back(rec);
    }
    return result;
}

// --- metrics CSV ------------------------------------------------------------

inline void save_metrics_csv(std::ostream& os, const MetricsSeries& m) {
    os << "epoch,train_acc,test_acc,mean_loss\n";
    char buf[128];
    for (const auto& r : m.records) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g\n", r.epoch,
                      r.train_accuracy, r.test_accuracy, r.mean_loss);
        os << buf;
    }
}

inline void save_metrics_csv(const std::string& path, const MetricsSeries& m) {
    std::ofstream os(path);
    if (!os) throw IoError(IoError::Code::open_failed, "cannot write " + path);
    save_metrics_csv(os, m);
}

inline MetricsSeries load_metrics_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError(IoError::Code::open_failed, "cannot read " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("epoch,", 0) != 0)
        throw IoError(IoError::Code::bad_format, "not a metrics CSV: " + path);
    MetricsSeries m;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        EpochRecord r;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &r.epoch, &r.train_accuracy,
                        &r.test_accuracy, &r.mean_loss) != 4)
            throw IoError(IoError::Code::bad_format, "bad metrics row: " + line);
        m.records.push_back(r);
    }
    return m;
}

// --- fixed-vs-float comparison ---------------------------------------------

struct DiffSeries {
    std::vector<double> diffs;  // per epoch, a - b, in accuracy fraction
    double mean = 0.0;
    double mean_abs = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Per-epoch test-accuracy differences (a - b) with summary stats; feeds the
/// difference-histogram CSV.
inline DiffSeries compare_runs(const MetricsSeries& a, const MetricsSeries& b) {
    if (a.records.size() != b.records.size())
        throw ShapeError("metric series have different epoch counts");
    DiffSeries d;
    for (std::size_t i = 0; i < a.records.size(); ++i)
        d.diffs.push_back(a.records[i].test_accuracy - b.records[i].test_accuracy);
    if (!d.diffs.empty()) {
        d.min = d.max = d.diffs[0];
        for (double v : d.diffs) {
            d.mean += v;
            d.mean_abs += std::abs(v);
            d.min = std::min(d.min, v);
            d.max = std::max(d.max, v);
        }
        d.mean /= static_cast<double>(d.diffs.size());
        d.mean_abs /= static_cast<double>(d.diffs.size());
    }
    return d;
}

inline void save_diff_csv(const std::string& path, const DiffSeries& d) {
    std::ofstream os(path);
    if (!os) throw IoError(IoError::Code::open_failed, "cannot write " + path);
    os << "epoch,diff\n";
    char buf[64];
    for (std::size_t i = 0; i < d.diffs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.10g\n", i + 1, d.diffs[i]);
        os << buf;
    }
}

}  // namespace sparsedge

#endif  // SPARSEDGE_TRAINING_HPP
