#ifndef MAZER_NUMFMT_HPP
#define MAZER_NUMFMT_HPP

#include <complex>
#include <string>

namespace mazer {

// Shortest representation that round-trips exactly; locale independent,
// at most 17 significant digits.
std::string format_double(double x);

// "a+bi" / "a-bi" using format_double for both parts.
std::string format_complex(const std::complex<double>& z);

}  // namespace mazer

#endif
