#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

namespace tsn {

// Exact rational arithmetic for all curve/credit algebra. Time is in
// nanoseconds, amounts in bits, rates in bits per nanosecond; floating
// point appears only when emitting reports.
using Rat = boost::multiprecision::number<
    boost::multiprecision::backends::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
    boost::multiprecision::et_off>;

inline Rat rat(std::int64_t num, std::int64_t den = 1) {
    return Rat(num, den);
}

inline double to_double(const Rat& r) {
    return static_cast<double>(r);
}

inline std::int64_t floor_int(const Rat& r) {
    boost::multiprecision::cpp_int q = numerator(r) / denominator(r);
    if (numerator(r) < 0 && q * denominator(r) != numerator(r)) --q;
    return static_cast<std::int64_t>(q);
}

inline std::int64_t ceil_int(const Rat& r) {
    boost::multiprecision::cpp_int q = numerator(r) / denominator(r);
    if (numerator(r) > 0 && q * denominator(r) != numerator(r)) ++q;
    return static_cast<std::int64_t>(q);
}

inline std::string rat_str(const Rat& r) {
    std::string s = numerator(r).str();
    if (denominator(r) != 1) s += "/" + denominator(r).str();
    return s;
}

// microseconds (possibly fractional, given as micros*1000 = ns) helpers
inline Rat us(std::int64_t micros) { return Rat(micros) * 1000; }
inline Rat ms(std::int64_t millis) { return Rat(millis) * 1000000; }

}  // namespace tsn
