#include "mazer/numfmt.hpp"

#include <charconv>
#include <cmath>

namespace mazer {

std::string format_double(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string format_complex(const std::complex<double>& z) {
    std::string s = format_double(z.real());
    if (z.imag() >= 0.0 || std::isnan(z.imag())) s += '+';
    s += format_double(z.imag());
    s += 'i';
    return s;
}

}  // namespace mazer
