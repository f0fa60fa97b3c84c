#ifndef SPARSEDGE_INTERLEAVER_HPP
#define SPARSEDGE_INTERLEAVER_HPP

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sparsedge/errors.hpp"
#include "sparsedge/rng.hpp"
#include "sparsedge/topology.hpp"

namespace sparsedge {

enum class IlvMode { hardware, functional };

inline std::string to_string(IlvMode m) {
    return m == IlvMode::hardware ? "hardware" : "functional";
}

inline IlvMode ilv_mode_from_string(const std::string& s) {
    if (s == "hardware") return IlvMode::hardware;
    if (s == "functional") return IlvMode::functional;
    throw ConfigError("unknown interleaver mode: " + s);
}

/// The edge permutation of one junction.
///
/// Edge e = cycle*z + lane feeds succeeding neuron e / d_in (natural order)
/// and draws from preceding neuron source[e]. In hardware mode the table is
/// clash-free: within any cycle the z sources have pairwise distinct
/// residues mod z, so the z banked activation memories are each hit once.
struct InterleaverMap {
    int n_in = 0;
    int n_out = 0;
    int d_in = 0;
    int d_out = 0;
    int z = 1;
    std::int64_t cycles = 0;   // C = E / z
    std::uint64_t seed = 0;
    IlvMode mode = IlvMode::functional;
    std::vector<std::int32_t> source;  // flat edge -> source neuron

    std::int64_t edge_count() const {
        return static_cast<std::int64_t>(source.size());
    }
    std::int32_t at(std::int64_t cycle, int lane) const {
        return source[cycle * z + lane];
    }
};

namespace detail {

inline void check_dims(int n_in, int n_out, int d_in, int d_out) {
    if (n_in <= 0 || n_out <= 0 || d_in <= 0 || d_out <= 0 ||
        d_in > n_in || d_out > n_out ||
        std::int64_t{n_in} * d_out != std::int64_t{n_out} * d_in)
        throw InterleaverError(InterleaverError::Code::dimension_mismatch,
                               "inconsistent junction dimensions");
}

// True if window [begin, begin+len) of v contains a duplicate value.
inline bool window_has_duplicate(const std::vector<std::int32_t>& v,
                                 std::int64_t begin, int len) {
    for (int i = 1; i < len; ++i)
        for (int k = 0; k < i; ++k)
            if (v[begin + i] == v[begin + k]) return true;
    return false;
}

inline bool window_contains(const std::vector<std::int32_t>& v,
                            std::int64_t begin, int len, std::int32_t value,
                            std::int64_t skip) {
    for (int i = 0; i < len; ++i) {
        const std::int64_t p = begin + i;
        if (p != skip && v[p] == value) return true;
    }
    return false;
}

}  // namespace detail

/// Deterministic clash-free generation.
///
/// Hardware mode: lane l of cycle c reads memory (l + c) mod z; the address
/// within each memory column is a seeded shuffle of the multiset
/// {0 .. n_in/z - 1, each repeated d_out}, one independent shuffle per
/// column. Clash-freedom and exact balance hold by construction; with
/// d_in | z every succeeding neuron's window lies inside one cycle, so the
/// distinct residues also rule out parallel edges.
///
/// Functional mode: a seeded shuffle of the whole source multiset, with
/// bounded repair of any per-neuron window that contains duplicates.
inline InterleaverMap generate(int n_in, int n_out, int d_in, int d_out, int z,
                               std::uint64_t seed, IlvMode mode) {
    detail::check_dims(n_in, n_out, d_in, d_out);
    const std::int64_t edges = std::int64_t{n_in} * d_out;
    if (z < 1 || edges % z != 0)
        throw InterleaverError(InterleaverError::Code::constraint_violation,
                               "z must be >= 1 and divide the edge count");

    InterleaverMap map;
    map.n_in = n_in;
    map.n_out = n_out;
    map.d_in = d_in;
    map.d_out = d_out;
    map.z = z;
    map.cycles = edges / z;
    map.seed = seed;
    map.mode = mode;
    map.source.assign(edges, -1);

    if (mode == IlvMode::hardware) {
        if (z % d_in != 0 || n_in % z != 0)
            throw InterleaverError(
                InterleaverError::Code::constraint_violation,
                "hardware mode needs d_in | z and z | n_in");
        const int col_depth = n_in / z;
        std::vector<std::int32_t> column(
            static_cast<std::size_t>(col_depth) * d_out);
        for (int m = 0; m < z; ++m) {
            for (int a = 0; a < col_depth; ++a)
                for (int r = 0; r < d_out; ++r)
                    column[static_cast<std::size_t>(a) * d_out + r] = a;
            SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
            shuffle_in_place(column, rng);
            // Column m is consumed once per cycle, by lane (m - c) mod z.
            for (std::int64_t c = 0; c < map.cycles; ++c) {
                const int lane = static_cast<int>(((m - c) % z + z) % z);
                map.source[c * z + lane] =
                    column[static_cast<std::size_t>(c)] * z + m;
            }
        }
    } else {
        auto& src = map.source;
        // Deal the source multiset round-robin: item k of a random source
        // ordering lands in window k mod n_out. A value's d_out copies are
        // consecutive in the deal and d_out <= n_out, so no window receives
        // the same source twice; balance is exact by construction.
        SplitMix64 rng(derive_seed(seed, 0));
        std::vector<std::int32_t> order(n_in);
        for (int n = 0; n < n_in; ++n) order[n] = static_cast<std::int32_t>(n);
        shuffle_in_place(order, rng);
        std::int64_t idx = 0;
        for (int n = 0; n < n_in; ++n) {
            for (int r = 0; r < d_out; ++r, ++idx)
                src[(idx % n_out) * d_in + idx / n_out] = order[n];
        }
        // Break the deal's regularity with validity-preserving cross-window
        // swaps; rejected proposals just leave the table unchanged.
        for (std::int64_t k = 0; k < 4 * edges; ++k) {
            const std::int64_t a = static_cast<std::int64_t>(rng.next_below(edges));
            const std::int64_t b = static_cast<std::int64_t>(rng.next_below(edges));
            const std::int64_t wa = a / d_in, wb = b / d_in;
            if (wa == wb || src[a] == src[b]) continue;
            if (detail::window_contains(src, wa * d_in, d_in, src[b], a)) continue;
            if (detail::window_contains(src, wb * d_in, d_in, src[a], b)) continue;
            std::swap(src[a], src[b]);
        }
    }
    return map;
}

struct VerificationReport {
    bool balanced = true;
    bool no_parallel_edges = true;
    bool clash_free = true;

    // First counterexample, when a check fails.
    int unbalanced_neuron = -1;           // balance
    std::int64_t duplicate_output = -1;   // parallel edges
    std::int64_t clash_cycle = -1;        // clash
    int clash_lane_a = -1;
    int clash_lane_b = -1;

    bool all_ok() const { return balanced && no_parallel_edges && clash_free; }

    std::string describe() const {
        std::ostringstream os;
        os << "balance: " << (balanced ? "true" : "false");
        if (!balanced) os << " (neuron " << unbalanced_neuron << ")";
        os << "\nno-parallel-edges: " << (no_parallel_edges ? "true" : "false");
        if (!no_parallel_edges) os << " (succeeding neuron " << duplicate_output << ")";
        os << "\nclash-free: " << (clash_free ? "true" : "false");
        if (!clash_free)
            os << " (cycle " << clash_cycle << ", lanes " << clash_lane_a << ","
               << clash_lane_b << ")";
        os << "\n";
        return os.str();
    }
};

/// Checks balance, no-parallel-edges, and (hardware-relevant) clash-freedom.
/// Never throws; failures are reported with a first counterexample.
inline VerificationReport verify(const InterleaverMap& map) {
    VerificationReport rep;
    // Balance: every preceding neuron appears exactly d_out times.
    std::vector<std::int64_t> counts(map.n_in, 0);
    for (std::int32_t s : map.source)
        if (s >= 0 && s < map.n_in) ++counts[s];
    for (int n = 0; n < map.n_in; ++n) {
        if (counts[n] != map.d_out) {
            rep.balanced = false;
            rep.unbalanced_neuron = n;
            break;
        }
    }
    // No parallel edges: each succeeding neuron's d_in sources distinct.
    for (std::int64_t o = 0; o < map.n_out && rep.no_parallel_edges; ++o) {
        if (detail::window_has_duplicate(map.source, o * map.d_in, map.d_in)) {
            rep.no_parallel_edges = false;
            rep.duplicate_output = o;
        }
    }
    // Clash-freedom: within each cycle, residues mod z pairwise distinct.
    std::vector<std::int64_t> seen(map.z, -1);
    for (std::int64_t c = 0; c < map.cycles && rep.clash_free; ++c) {
        for (int l = 0; l < map.z; ++l) {
            const int m = static_cast<int>(map.at(c, l) % map.z);
            if (seen[m] == c) {
                rep.clash_free = false;
                rep.clash_cycle = c;
                rep.clash_lane_b = l;
                for (int k = 0; k < l; ++k)
                    if (map.at(c, k) % map.z == m) { rep.clash_lane_a = k; break; }
                break;
            }
            seen[m] = c;
        }
    }
    return rep;
}

/// Fraction of (input neuron, output neuron) pairs connected by at least
/// one directed path, via layer-by-layer reachability over bitsets.
inline double spatial_spread(const TopologySpec& spec,
                             const std::vector<InterleaverMap>& maps) {
    if (maps.size() != static_cast<std::size_t>(spec.junction_count()))
        throw ShapeError("need one interleaver map per junction");
    const int n0 = spec.layer_sizes.front();
    const std::size_t words = (static_cast<std::size_t>(n0) + 63) / 64;
    // reach[n] = set of input neurons with a path to neuron n of this layer
    std::vector<std::vector<std::uint64_t>> reach(
        n0, std::vector<std::uint64_t>(words, 0));
    for (int n = 0; n < n0; ++n) reach[n][n / 64] = std::uint64_t{1} << (n % 64);

    for (const auto& map : maps) {
        std::vector<std::vector<std::uint64_t>> next(
            map.n_out, std::vector<std::uint64_t>(words, 0));
        for (std::int64_t e = 0; e < map.edge_count(); ++e) {
            const std::int64_t o = e / map.d_in;
            const auto& src = reach[map.source[e]];
            auto& dst = next[o];
            for (std::size_t w = 0; w < words; ++w) dst[w] |= src[w];
        }
        reach = std::move(next);
    }

    std::int64_t connected = 0;
    for (const auto& bits : reach)
        for (std::uint64_t w : bits) connected += __builtin_popcountll(w);
    return static_cast<double>(connected) /
           (static_cast<double>(n0) * spec.layer_sizes.back());
}

// --- text serialization -----------------------------------------------------
// Header `interleaver v1 N_in N_out d_in d_out z seed mode`, then C lines of
// z space-separated source indices.

inline void save_interleaver(std::ostream& os, const InterleaverMap& map) {
    os << "interleaver v1 " << map.n_in << " " << map.n_out << " " << map.d_in
       << " " << map.d_out << " " << map.z << " " << map.seed << " "
       << to_string(map.mode) << "\n";
    for (std::int64_t c = 0; c < map.cycles; ++c) {
        for (int l = 0; l < map.z; ++l) {
            if (l) os << " ";
            os << map.at(c, l);
        }
        os << "\n";
    }
}

inline void save_interleaver(const std::string& path, const InterleaverMap& map) {
    std::ofstream os(path);
    if (!os) throw IoError(IoError::Code::open_failed, "cannot write " + path);
    save_interleaver(os, map);
}

inline InterleaverMap load_interleaver(std::istream& is) {
    std::string tag, version, mode_str;
    InterleaverMap map;
    if (!(is >> tag >> version) || tag != "interleaver" || version != "v1")
        throw IoError(IoError::Code::bad_magic, "not an interleaver v1 file");
    if (!(is >> map.n_in >> map.n_out >> map.d_in >> map.d_out >> map.z >>
          map.seed >> mode_str))
        throw IoError(IoError::Code::truncated_file, "truncated interleaver header");
    map.mode = ilv_mode_from_string(mode_str);
    detail::check_dims(map.n_in, map.n_out, map.d_in, map.d_out);
    const std::int64_t edges = std::int64_t{map.n_in} * map.d_out;
    if (map.z < 1 || edges % map.z != 0)
        throw IoError(IoError::Code::bad_format, "bad z in interleaver header");
    map.cycles = edges / map.z;
    map.source.resize(edges);
    for (std::int64_t e = 0; e < edges; ++e) {
        if (!(is >> map.source[e]))
            throw IoError(IoError::Code::truncated_file, "truncated interleaver table");
        if (map.source[e] < 0 || map.source[e] >= map.n_in)
            throw IoError(IoError::Code::bad_format, "source index out of range");
    }
    return map;
}

inline InterleaverMap load_interleaver(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError(IoError::Code::open_failed, "cannot read " + path);
    return load_interleaver(is);
}

}  // namespace sparsedge

#endif  // SPARSEDGE_INTERLEAVER_HPP
