#ifndef SPARSEDGE_ERRORS_HPP
#define SPARSEDGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sparsedge {

struct TopologyError : std::runtime_error {
    enum class Code { non_integer_fan_in, fan_out_too_large, bad_argument };
    TopologyError(Code c, const std::string& msg)
        : std::runtime_error(msg), code(c) {}
    Code code;
};

struct InterleaverError : std::runtime_error {
    enum class Code { dimension_mismatch, constraint_violation, generation_failure };
    InterleaverError(Code c, const std::string& msg)
        : std::runtime_error(msg), code(c) {}
    Code code;
};

// Two same-cycle accesses hit the same physical memory. Carrying the memory
// index lets callers report which bank the broken interleaver collided on.
struct ClashError : std::runtime_error {
    explicit ClashError(int memory, const std::string& msg)
        : std::runtime_error(msg), memory_index(memory) {}
    int memory_index;
};

struct OutOfBounds : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    enum class Code { bad_magic, truncated_file, count_mismatch, open_failed, bad_format };
    IoError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
    Code code;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sparsedge

#endif  // SPARSEDGE_ERRORS_HPP
