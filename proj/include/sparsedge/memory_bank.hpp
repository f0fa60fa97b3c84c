#ifndef SPARSEDGE_MEMORY_BANK_HPP
#define SPARSEDGE_MEMORY_BANK_HPP

#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sparsedge/errors.hpp"

namespace sparsedge {

/// z parallel memories of equal depth. Item i lives at memory (i mod z),
/// address (i div z); storage is row-major, so the flat item index doubles
/// as the storage index and a natural-order row is contiguous.
class BankedMemory {
public:
    BankedMemory() = default;
    BankedMemory(int z, std::int64_t depth, double init = 0.0)
        : z_(z), depth_(depth),
          cells_(static_cast<std::size_t>(z) * depth, init) {
        if (z < 1 || depth < 0) throw ShapeError("bad bank geometry");
    }

    int z() const { return z_; }
    std::int64_t depth() const { return depth_; }
    std::int64_t item_count() const { return static_cast<std::int64_t>(cells_.size()); }

    double get(std::int64_t item) const {
        check_item(item);
        return cells_[static_cast<std::size_t>(item)];
    }
    void set(std::int64_t item, double v) {
        check_item(item);
        cells_[static_cast<std::size_t>(item)] = v;
    }

    double at(int memory, std::int64_t address) const {
        check_cell(memory, address);
        return cells_[static_cast<std::size_t>(address) * z_ + memory];
    }

    /// One row across all z memories, in lane order.
    std::span<const double> read_natural(std::int64_t row) const {
        check_row(row);
        return {cells_.data() + static_cast<std::size_t>(row) * z_,
                static_cast<std::size_t>(z_)};
    }
    std::span<double> row_natural(std::int64_t row) {
        check_row(row);
        return {cells_.data() + static_cast<std::size_t>(row) * z_,
                static_cast<std::size_t>(z_)};
    }

    struct Access {
        int memory;
        std::int64_t address;
    };

    /// One cell per memory, interleaver-chosen addresses. All memory indices
    /// must be distinct: a duplicate is a clash and throws.
    void read_permuted(std::span<const Access> pairs, std::span<double> out) const {
        check_distinct(pairs);
        for (std::size_t i = 0; i < pairs.size(); ++i)
            out[i] = at(pairs[i].memory, pairs[i].address);
    }

    /// Read-modify-write variant (BP delta accumulation).
    template <typename Combine>
    void rmw_permuted(std::span<const Access> pairs, std::span<const double> values,
                      Combine&& combine) {
        check_distinct(pairs);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            check_cell(pairs[i].memory, pairs[i].address);
            double& cell =
                cells_[static_cast<std::size_t>(pairs[i].address) * z_ +
                       pairs[i].memory];
            cell = combine(cell, values[i]);
        }
    }

    std::span<const double> data() const { return cells_; }
    std::span<double> data() { return cells_; }
    void fill(double v) { cells_.assign(cells_.size(), v); }

    bool operator==(const BankedMemory& o) const {
        return z_ == o.z_ && depth_ == o.depth_ && cells_ == o.cells_;
    }

private:
    void check_item(std::int64_t item) const {
        if (item < 0 || item >= item_count())
            throw OutOfBounds("bank item index out of range");
    }
    void check_row(std::int64_t row) const {
        if (row < 0 || row >= depth_)
            throw OutOfBounds("bank row out of range");
    }
    void check_cell(int memory, std::int64_t address) const {
        if (memory < 0 || memory >= z_ || address < 0 || address >= depth_)
            throw OutOfBounds("bank cell out of range");
    }
    void check_distinct(std::span<const Access> pairs) const {
        seen_.assign(static_cast<std::size_t>(z_), 0);
        for (const auto& p : pairs) {
            if (p.memory < 0 || p.memory >= z_)
                throw OutOfBounds("bank memory index out of range");
            if (seen_[static_cast<std::size_t>(p.memory)]) {
                std::ostringstream os;
                os << "clash on memory " << p.memory;
                throw ClashError(p.memory, os.str());
            }
            seen_[static_cast<std::size_t>(p.memory)] = 1;
        }
    }

    int z_ = 1;
    std::int64_t depth_ = 0;
    std::vector<double> cells_;
    mutable std::vector<std::uint8_t> seen_;  // scratch for clash checks
};

/// Queue depth for a layer-k value memory in a J-junction pipeline: the
/// lifetime, in pipeline steps, from production to last scheduled read.
/// Layer-0 activations are written at step start (before any read of the
/// step), hence the extra slot.
inline int queue_depth(int junctions, int layer, bool activation) {
    const int J = junctions;
    if (layer < 0 || layer >= J) throw ShapeError("layer index out of range");
    if (activation) return layer == 0 ? 2 * J + 1 : 2 * J - 2 * layer + 1;
    if (layer == 0) throw ShapeError("layer-0 derivatives are never stored");
    return 2 * J - 2 * layer;
}

/// Ring of per-input snapshots of one layer's values, held until the
/// pipeline is done reading them. Overwriting a slot before its occupant's
/// last scheduled read aborts the run: that means the depth formula is wrong.
class QueueBank {
public:
    QueueBank() = default;
    QueueBank(int slots, int z, std::int64_t depth)
        : slots_(slots), banks_(slots, BankedMemory(z, depth)),
          input_ids_(slots, -1), last_reads_(slots, -1) {}

    int slots() const { return slots_; }

    /// Claim the slot for `input_id`, which will last be read at
    /// `last_read_step`. `write_step` is when this write commits;
    /// `strict` marks writes that precede the step's reads (layer 0).
    BankedMemory& acquire(std::int64_t input_id, std::int64_t write_step,
                          std::int64_t last_read_step, bool strict = false) {
        const int s = slot_of(input_id);
        const std::int64_t prev_last = last_reads_[s];
        if (input_ids_[s] >= 0 &&
            (strict ? prev_last >= write_step : prev_last > write_step)) {
            std::ostringstream os;
            os << "queue slot overwritten before final read: input "
               << input_ids_[s] << " still live at step " << write_step;
            throw ShapeError(os.str());
        }
        input_ids_[s] = input_id;
        last_reads_[s] = last_read_step;
        return banks_[s];
    }

    const BankedMemory& snapshot(std::int64_t input_id) const {
        const int s = slot_of(input_id);
        if (input_ids_[s] != input_id) {
            std::ostringstream os;
            os << "queue slot for input " << input_id << " holds input "
               << input_ids_[s];
            throw ShapeError(os.str());
        }
        return banks_[s];
    }

private:
    int slot_of(std::int64_t input_id) const {
        if (slots_ <= 0) throw ShapeError("empty queue bank");
        return static_cast<int>(input_id % slots_);
    }

    int slots_ = 0;
    std::vector<BankedMemory> banks_;
    std::vector<std::int64_t> input_ids_;
    std::vector<std::int64_t> last_reads_;
};

}  // namespace sparsedge

#endif  // SPARSEDGE_MEMORY_BANK_HPP
