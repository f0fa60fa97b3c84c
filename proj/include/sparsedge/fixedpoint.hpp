#ifndef SPARSEDGE_FIXEDPOINT_HPP
#define SPARSEDGE_FIXEDPOINT_HPP

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "sparsedge/errors.hpp"

namespace sparsedge {

/// Two's-complement fixed-point format. The sign bit counts inside the
/// integer field, so fx10:3.7 spans [-4, 3.9921875] with step 2^-7.
struct FxFormat {
    int width = 10;      // W, total bits
    int int_bits = 3;    // I, integer bits including sign
    int frac_bits = 7;   // F = W - I

    static FxFormat make(int w, int i) {
        if (w < 8 || w > 32 || i < 1 || i > w)
            throw ConfigError("fixed-point format out of range");
        return FxFormat{w, i, w - i};
    }

    std::int64_t raw_min() const { return -(std::int64_t{1} << (width - 1)); }
    std::int64_t raw_max() const { return (std::int64_t{1} << (width - 1)) - 1; }
    double step() const { return std::ldexp(1.0, -frac_bits); }
    double min_value() const { return static_cast<double>(raw_min()) * step(); }
    double max_value() const { return static_cast<double>(raw_max()) * step(); }

    bool operator==(const FxFormat& o) const {
        return width == o.width && int_bits == o.int_bits && frac_bits == o.frac_bits;
    }
    bool operator!=(const FxFormat& o) const { return !(*this == o); }

    /// `fx<W>:<I>.<F>`, e.g. "fx10:3.7".
    std::string to_string() const {
        std::ostringstream os;
        os << "fx" << width << ":" << int_bits << "." << frac_bits;
        return os.str();
    }

    static FxFormat parse(const std::string& s) {
        int w = 0, i = 0, f = 0;
        char colon = 0, dot = 0;
        std::istringstream is(s);
        if (s.rfind("fx", 0) != 0) throw ConfigError("bad fixed-point format: " + s);
        is.ignore(2);
        if (!(is >> w >> colon >> i >> dot >> f) || colon != ':' || dot != '.' ||
            f != w - i)
            throw ConfigError("bad fixed-point format: " + s);
        return make(w, i);
    }
};

namespace detail {
// Round to nearest, ties away from zero, in raw (scaled-integer) units.
inline std::int64_t round_scaled(double x_scaled) {
    return std::llround(x_scaled);
}

inline std::int64_t saturate_raw(std::int64_t raw, const FxFormat& fmt) {
    if (raw < fmt.raw_min()) return fmt.raw_min();
    if (raw > fmt.raw_max()) return fmt.raw_max();
    return raw;
}
}  // namespace detail

struct FxValue {
    std::int32_t raw = 0;
    FxFormat fmt;

    double real() const { return static_cast<double>(raw) * fmt.step(); }
};

/// Round-to-nearest (ties away from zero), then saturate to the format range.
inline FxValue quantize(double x, const FxFormat& fmt) {
    // Clamp before llround so huge inputs cannot overflow the integer path.
    std::int64_t raw;
    if (x >= fmt.max_value()) {
        raw = fmt.raw_max();
    } else if (x <= fmt.min_value()) {
        raw = fmt.raw_min();
    } else {
        raw = detail::saturate_raw(
            detail::round_scaled(x * std::ldexp(1.0, fmt.frac_bits)), fmt);
    }
    return FxValue{static_cast<std::int32_t>(raw), fmt};
}

/// Same quantization, staying in the real domain (grid value returned).
inline double quantize_real(double x, const FxFormat& fmt) {
    return quantize(x, fmt).real();
}

inline FxValue fx_add(const FxValue& a, const FxValue& b, const FxFormat& fmt) {
    std::int64_t sum = std::int64_t{a.raw} + b.raw;
    return FxValue{static_cast<std::int32_t>(detail::saturate_raw(sum, fmt)), fmt};
}

inline FxValue fx_sub(const FxValue& a, const FxValue& b, const FxFormat& fmt) {
    std::int64_t diff = std::int64_t{a.raw} - b.raw;
    return FxValue{static_cast<std::int32_t>(detail::saturate_raw(diff, fmt)), fmt};
}

/// Exact integer product rescaled by 2^-F with round-to-nearest
/// (ties away from zero), then saturated.
inline FxValue fx_mul(const FxValue& a, const FxValue& b, const FxFormat& fmt) {
    const std::int64_t p = std::int64_t{a.raw} * b.raw;
    std::int64_t r;
    if (fmt.frac_bits == 0) {
        r = p;
    } else {
        const std::int64_t half = std::int64_t{1} << (fmt.frac_bits - 1);
        r = (p >= 0) ? ((p + half) >> fmt.frac_bits)
                     : -((-p + half) >> fmt.frac_bits);
    }
    return FxValue{static_cast<std::int32_t>(detail::saturate_raw(r, fmt)), fmt};
}

inline FxValue fx_mac(const FxValue& acc, const FxValue& a, const FxValue& b,
                      const FxFormat& fmt) {
    return fx_add(acc, fx_mul(a, b, fmt), fmt);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Quantized true sigmoid; exactly what a full-input LUT of size 2^W yields.
inline FxValue sigmoid_fx(const FxValue& x) {
    return quantize(sigmoid(x.real()), x.fmt);
}

/// sigma' recovered from the stored activation: a * (1 - a).
inline FxValue sigmoid_deriv_from_act(const FxValue& a) {
    const FxValue one = quantize(1.0, a.fmt);
    return fx_mul(a, fx_sub(one, a, a.fmt), a.fmt);
}

}  // namespace sparsedge

#endif  // SPARSEDGE_FIXEDPOINT_HPP
