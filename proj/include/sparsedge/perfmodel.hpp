#ifndef SPARSEDGE_PERFMODEL_HPP
#define SPARSEDGE_PERFMODEL_HPP

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sparsedge/errors.hpp"
#include "sparsedge/topology.hpp"

namespace sparsedge {

/// Analytical throughput scenario. Edge counts may be given directly or as
/// per-junction connectivity fractions (no integral fan-out required).
struct PerfScenario {
    std::vector<int> layer_sizes;
    std::vector<double> connectivity;       // rho_j in (0,1]; used when edge_counts empty
    std::vector<std::int64_t> edge_counts;  // explicit E_j, overrides connectivity
    std::vector<std::int64_t> z_list;
    double clock_hz = 250e6;
    std::int64_t images_per_epoch = 0;
    int epochs = 0;

    int junction_count() const { return static_cast<int>(layer_sizes.size()) - 1; }

    std::vector<std::int64_t> resolved_edges() const {
        const int J = junction_count();
        if (J < 1) throw ShapeError("scenario needs at least two layers");
        if (!edge_counts.empty()) {
            if (static_cast<int>(edge_counts.size()) != J)
                throw ShapeError("need one edge count per junction");
            return edge_counts;
        }
        if (static_cast<int>(connectivity.size()) != J)
            throw ShapeError("need one connectivity fraction per junction");
        std::vector<std::int64_t> edges(J);
        for (int j = 0; j < J; ++j) {
            if (connectivity[j] <= 0.0 || connectivity[j] > 1.0)
                throw ShapeError("connectivity must be in (0,1]");
            edges[j] = std::llround(connectivity[j] * layer_sizes[j] *
                                    static_cast<double>(layer_sizes[j + 1]));
        }
        return edges;
    }
};

struct PerfReport {
    std::vector<std::int64_t> cycles;  // per junction
    std::int64_t cycles_per_image = 0; // pipeline bottleneck
    double time_per_image_s = 0.0;
    double epoch_time_s = 0.0;
    double total_time_s = 0.0;

    std::string describe() const {
        std::ostringstream os;
        os << "junction cycles:";
        for (auto c : cycles) os << " " << c;
        os << "\ncycles/image:   " << cycles_per_image;
        os << "\ntime/image:     " << time_per_image_s * 1e6 << " us";
        os << "\nepoch time:     " << epoch_time_s << " s";
        os << "\ntotal time:     " << total_time_s << " s ("
           << total_time_s / 3600.0 << " h)\n";
        return os.str();
    }
};

/// Balanced-pipeline throughput bound: the slowest junction paces the
/// pipeline, so cycles/image = max_j ceil(E_j / z_j).
inline PerfReport estimate(const PerfScenario& s) {
    const auto edges = s.resolved_edges();
    const int J = s.junction_count();
    if (static_cast<int>(s.z_list.size()) != J)
        throw ShapeError("need one z per junction");
    if (s.clock_hz <= 0) throw ShapeError("clock must be positive");
    PerfReport r;
    for (int j = 0; j < J; ++j) {
        if (s.z_list[j] < 1) throw ShapeError("z must be >= 1");
        r.cycles.push_back(cycles_per_junction(edges[j], s.z_list[j]));
        r.cycles_per_image = std::max(r.cycles_per_image, r.cycles.back());
    }
    r.time_per_image_s = static_cast<double>(r.cycles_per_image) / s.clock_hz;
    r.epoch_time_s = r.time_per_image_s * static_cast<double>(s.images_per_epoch);
    r.total_time_s = r.epoch_time_s * s.epochs;
    return r;
}

inline double speedup(const PerfReport& r, double baseline_seconds) {
    if (baseline_seconds <= 0) throw ShapeError("baseline must be positive");
    return baseline_seconds / r.total_time_s;
}

/// Concurrent operations at steady state: FF+BP+UP on each of J junctions.
inline int pipeline_parallelism(int junctions) {
    if (junctions < 1) throw ShapeError("need at least one junction");
    return 3 * junctions;
}

}  // namespace sparsedge

#endif  // SPARSEDGE_PERFMODEL_HPP
