#ifndef SPARSEDGE_CHECKPOINT_HPP
#define SPARSEDGE_CHECKPOINT_HPP

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sparsedge/engine.hpp"
#include "sparsedge/errors.hpp"

namespace sparsedge {

namespace detail {

// Hexfloat round-trips doubles exactly and prints identically everywhere.
inline std::string dump_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

}  // namespace detail

/// `netckpt v1` text checkpoint. Interleaver tables are regenerated from the
/// recorded (seed, mode) on load; weights and biases round-trip bit-exactly.
inline void save_checkpoint(std::ostream& os, const Network& net) {
    os << "netckpt v1\n";
    os << "layers";
    for (int n : net.topo.layer_sizes) os << " " << n;
    os << "\nfanouts";
    for (int d : net.topo.fan_outs) os << " " << d;
    os << "\nfmt " << (net.arith.fixed() ? net.arith.fmt->to_string() : "real64");
    os << "\nhardware " << (net.hardware ? 1 : 0);
    os << "\nbias " << (net.use_bias ? 1 : 0);
    os << "\nseed " << net.init_seed;
    os << "\nstep " << net.step_count;
    os << "\neta " << detail::dump_double(net.eta) << "\n";
    for (int j = 0; j < net.junction_count(); ++j) {
        const auto& js = net.junctions[j];
        os << "junction " << (j + 1) << " ilv_seed " << js.map.seed << " mode "
           << to_string(js.map.mode) << "\n";
        os << "bank v1 " << js.z() << " " << js.cycles() << " "
           << (net.arith.fixed() ? net.arith.fmt->to_string() : "real64") << "\n";
        for (std::int64_t r = 0; r < js.cycles(); ++r) {
            const auto row = js.weights.read_natural(r);
            for (int l = 0; l < js.z(); ++l) {
                if (l) os << " ";
                os << detail::dump_double(row[l]);
            }
            os << "\n";
        }
        os << "biases " << js.n_out();
        for (double b : js.biases) os << " " << detail::dump_double(b);
        os << "\n";
    }
}

inline void save_checkpoint(const std::string& path, const Network& net) {
    std::ofstream os(path);
    if (!os) throw IoError(IoError::Code::open_failed, "cannot write " + path);
    save_checkpoint(os, net);
}

inline Network load_checkpoint(std::istream& is) {
    auto expect = [&](const char* word) {
        std::string s;
        if (!(is >> s) || s != word)
            throw IoError(IoError::Code::bad_format,
                          std::string("checkpoint: expected '") + word + "' got '" + s + "'");
    };
    std::string s;
    if (!(is >> s) || s != "netckpt")
        throw IoError(IoError::Code::bad_magic, "not a netckpt file");
    if (!(is >> s) || s != "v1")
        throw IoError(IoError::Code::bad_format, "unsupported checkpoint version");

    expect("layers");
    std::vector<int> layers;
    // layer list runs until the "fanouts" keyword
    while (is >> s && s != "fanouts") layers.push_back(std::stoi(s));
    std::vector<int> fanouts(layers.size() - 1);
    for (auto& d : fanouts)
        if (!(is >> d)) throw IoError(IoError::Code::truncated_file, "truncated fanouts");

    expect("fmt");
    std::string fmt_str;
    is >> fmt_str;
    Arith arith = fmt_str == "real64" ? real_arith() : fixed_arith(FxFormat::parse(fmt_str));

    int hardware = 0, bias = 1;
    std::uint64_t seed = 0;
    std::int64_t step = 0;
    expect("hardware");
    is >> hardware;
    expect("bias");
    is >> bias;
    expect("seed");
    is >> seed;
    expect("step");
    is >> step;
    expect("eta");
    is >> s;
    const double eta = std::strtod(s.c_str(), nullptr);

    const TopologySpec topo = build_topology(layers, fanouts);
    std::vector<InterleaverMap> maps;
    struct BankInfo {
        std::uint64_t ilv_seed;
        IlvMode mode;
        int z;
        std::int64_t depth;
    };
    std::vector<std::vector<double>> weight_dumps, bias_dumps;
    for (int j = 0; j < topo.junction_count(); ++j) {
        expect("junction");
        int idx = 0;
        is >> idx;
        expect("ilv_seed");
        std::uint64_t ilv_seed = 0;
        is >> ilv_seed;
        expect("mode");
        std::string mode_str;
        is >> mode_str;
        expect("bank");
        std::string ver;
        is >> ver;
        int z = 0;
        std::int64_t depth = 0;
        is >> z >> depth >> s;  // s = per-bank fmt, informational
        if (!is || ver != "v1")
            throw IoError(IoError::Code::bad_format, "bad bank header");
        maps.push_back(generate(topo.layer_sizes[j], topo.layer_sizes[j + 1],
                                topo.fan_ins[j], topo.fan_outs[j], z, ilv_seed,
                                ilv_mode_from_string(mode_str)));
        std::vector<double> w(static_cast<std::size_t>(z) * depth);
        for (auto& v : w) {
            if (!(is >> s))
                throw IoError(IoError::Code::truncated_file, "truncated bank dump");
            v = std::strtod(s.c_str(), nullptr);
        }
        expect("biases");
        int nb = 0;
        is >> nb;
        std::vector<double> b(nb);
        for (auto& v : b) {
            if (!(is >> s))
                throw IoError(IoError::Code::truncated_file, "truncated biases");
            v = std::strtod(s.c_str(), nullptr);
        }
        weight_dumps.push_back(std::move(w));
        bias_dumps.push_back(std::move(b));
    }

    Network net = build_network(topo, maps, arith, hardware != 0, seed, bias != 0);
    net.eta = eta;
    net.step_count = step;
    for (int j = 0; j < net.junction_count(); ++j) {
        auto w = net.junctions[j].weights.data();
        if (w.size() != weight_dumps[j].size() ||
            net.junctions[j].biases.size() != bias_dumps[j].size())
            throw IoError(IoError::Code::bad_format, "bank shape does not match topology");
        std::copy(weight_dumps[j].begin(), weight_dumps[j].end(), w.begin());
        net.junctions[j].biases = bias_dumps[j];
    }
    return net;
}

inline Network load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError(IoError::Code::open_failed, "cannot read " + path);
    return load_checkpoint(is);
}

}  // namespace sparsedge

#endif  // SPARSEDGE_CHECKPOINT_HPP
