#ifndef SPARSEDGE_TOPOLOGY_HPP
#define SPARSEDGE_TOPOLOGY_HPP

#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sparsedge/errors.hpp"

namespace sparsedge {

/// Structure of a pre-specified sparse multilayer network.
///
/// A network with L layers has J = L-1 junctions. Junction j (1-based)
/// connects layer j-1 (N_{j-1} neurons) to layer j (N_j neurons). Fan-outs
/// are the user-facing knob; fan-ins and edge counts are derived.
struct TopologySpec {
    std::vector<int> layer_sizes;            // N_0 .. N_J
    std::vector<int> fan_outs;               // d_out per junction
    std::vector<int> fan_ins;                // derived d_in per junction
    std::vector<std::int64_t> edge_counts;   // E_j per junction
    double connectivity = 1.0;               // rho = sum E / sum N_{j-1}*N_j

    int junction_count() const { return static_cast<int>(fan_outs.size()); }
    int layer_count() const { return static_cast<int>(layer_sizes.size()); }

    std::int64_t total_edges() const {
        return std::accumulate(edge_counts.begin(), edge_counts.end(),
                               std::int64_t{0});
    }

    std::int64_t fully_connected_edges() const {
        std::int64_t fc = 0;
        for (std::size_t j = 1; j < layer_sizes.size(); ++j)
            fc += std::int64_t{layer_sizes[j - 1]} * layer_sizes[j];
        return fc;
    }

    bool fully_connected() const { return connectivity == 1.0; }
};

/// Per-junction degree of parallelism plus clock for timing estimates.
struct HardwareConfig {
    std::vector<int> z_list;       // z_1 .. z_J
    double clock_hz = 250e6;
};

inline std::int64_t cycles_per_junction(std::int64_t edges, std::int64_t z) {
    return (edges + z - 1) / z;
}

inline TopologySpec build_topology(const std::vector<int>& layer_sizes,
                                   const std::vector<int>& fan_outs) {
    if (layer_sizes.size() < 2 || fan_outs.size() != layer_sizes.size() - 1)
        throw TopologyError(TopologyError::Code::bad_argument,
                            "need L >= 2 layers and L-1 fan-outs");
    for (int n : layer_sizes)
        if (n <= 0)
            throw TopologyError(TopologyError::Code::bad_argument,
                                "layer sizes must be positive");
    for (int d : fan_outs)
        if (d <= 0)
            throw TopologyError(TopologyError::Code::bad_argument,
                                "fan-outs must be positive");

    TopologySpec spec;
    spec.layer_sizes = layer_sizes;
    spec.fan_outs = fan_outs;
    const int J = spec.junction_count();
    for (int j = 0; j < J; ++j) {
        const std::int64_t n_in = layer_sizes[j];
        const std::int64_t n_out = layer_sizes[j + 1];
        const std::int64_t d_out = fan_outs[j];
        if (d_out > n_out) {
            std::ostringstream os;
            os << "junction " << (j + 1) << ": fan-out " << d_out
               << " exceeds succeeding layer size " << n_out;
            throw TopologyError(TopologyError::Code::fan_out_too_large, os.str());
        }
        const std::int64_t edges = n_in * d_out;
        if (edges % n_out != 0) {
            std::ostringstream os;
            os << "junction " << (j + 1) << ": " << n_in << "*" << d_out
               << " edges not divisible by " << n_out << " succeeding neurons";
            throw TopologyError(TopologyError::Code::non_integer_fan_in, os.str());
        }
        const std::int64_t d_in = edges / n_out;
        if (d_in > n_in) {
            std::ostringstream os;
            os << "junction " << (j + 1) << ": derived fan-in " << d_in
               << " exceeds preceding layer size " << n_in;
            throw TopologyError(TopologyError::Code::fan_out_too_large, os.str());
        }
        spec.fan_ins.push_back(static_cast<int>(d_in));
        spec.edge_counts.push_back(edges);
    }
    spec.connectivity = static_cast<double>(spec.total_edges()) /
                        static_cast<double>(spec.fully_connected_edges());
    return spec;
}

struct JunctionCheck {
    int junction = 0;                 // 1-based
    std::int64_t cycles = 0;          // ceil(E_j / z_j)
    bool z_divides_edges = false;     // z_j | E_j
    bool fan_in_divides_z = false;    // d_in_j | z_j
    bool z_divides_prev_layer = false;  // z_j | N_{j-1}

    bool ok() const {
        return z_divides_edges && fan_in_divides_z && z_divides_prev_layer;
    }
};

struct ValidationReport {
    std::vector<JunctionCheck> junctions;
    bool balanced = false;   // all C_j equal; warning only when false

    bool ok() const {
        for (const auto& c : junctions)
            if (!c.ok()) return false;
        return true;
    }

    std::string describe() const {
        std::ostringstream os;
        for (const auto& c : junctions) {
            os << "junction " << c.junction << ": cycles=" << c.cycles
               << " z|E=" << (c.z_divides_edges ? "ok" : "FAIL")
               << " d_in|z=" << (c.fan_in_divides_z ? "ok" : "FAIL")
               << " z|N_prev=" << (c.z_divides_prev_layer ? "ok" : "FAIL")
               << "\n";
        }
        os << "balanced: " << (balanced ? "yes" : "no (pipeline stalls)") << "\n";
        return os.str();
    }
};

inline ValidationReport validate_hardware(const TopologySpec& spec,
                                          const HardwareConfig& hw) {
    if (hw.z_list.size() != static_cast<std::size_t>(spec.junction_count()))
        throw TopologyError(TopologyError::Code::bad_argument,
                            "need one z per junction");
    ValidationReport report;
    for (int j = 0; j < spec.junction_count(); ++j) {
        const std::int64_t z = hw.z_list[j];
        if (z < 1)
            throw TopologyError(TopologyError::Code::bad_argument, "z must be >= 1");
        JunctionCheck c;
        c.junction = j + 1;
        c.cycles = cycles_per_junction(spec.edge_counts[j], z);
        c.z_divides_edges = (spec.edge_counts[j] % z == 0);
        c.fan_in_divides_z = (z % spec.fan_ins[j] == 0);
        c.z_divides_prev_layer = (spec.layer_sizes[j] % z == 0);
        report.junctions.push_back(c);
    }
    report.balanced = true;
    for (const auto& c : report.junctions)
        if (c.cycles != report.junctions.front().cycles) report.balanced = false;
    return report;
}

}  // namespace sparsedge

#endif  // SPARSEDGE_TOPOLOGY_HPP
