#ifndef MAZER_JET_HPP
#define MAZER_JET_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace mazer {

// Raised when an expression is evaluated outside its domain
// (division by zero, log/sqrt of a non-positive argument, ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Truncated second-order Taylor jet: value, first and second derivative
// with respect to the independent variable.  Arithmetic follows the
// usual composition rules; this is all the automatic differentiation
// the mode functions ever need (u, u', u'').
struct Jet2 {
    double v = 0.0;   // f(z)
    double d1 = 0.0;  // f'(z)
    double d2 = 0.0;  // f''(z)

    static Jet2 constant(double c) { return {c, 0.0, 0.0}; }
    static Jet2 variable(double z) { return {z, 1.0, 0.0}; }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    return {a.v * b.v,
            a.d1 * b.v + a.v * b.d1,
            a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) {
    if (b.v == 0.0) throw DomainError("division by zero");
    const double q = a.v / b.v;
    const double q1 = (a.d1 - q * b.d1) / b.v;
    const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.v;
    return {q, q1, q2};
}

// f(g) with f', f'' evaluated at g.v
inline Jet2 compose(double f, double fp, double fpp, const Jet2& g) {
    return {f, fp * g.d1, fp * g.d2 + fpp * g.d1 * g.d1};
}

inline Jet2 sin(const Jet2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return compose(s, c, -s, a);
}

inline Jet2 cos(const Jet2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return compose(c, -s, -c, a);
}

inline Jet2 exp(const Jet2& a) {
    const double e = std::exp(a.v);
    return compose(e, e, e, a);
}

inline Jet2 tanh(const Jet2& a) {
    const double t = std::tanh(a.v);
    const double sech2 = 1.0 - t * t;
    return compose(t, sech2, -2.0 * t * sech2, a);
}

inline Jet2 sech(const Jet2& a) {
    const double s = 1.0 / std::cosh(a.v);
    const double t = std::tanh(a.v);
    // f' = -sech tanh, f'' = sech tanh^2 - sech^3
    return compose(s, -s * t, s * t * t - s * s * s, a);
}

inline Jet2 log(const Jet2& a) {
    if (a.v <= 0.0) throw DomainError("log of non-positive value");
    return compose(std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v), a);
}

inline Jet2 sqrt(const Jet2& a) {
    if (a.v < 0.0) throw DomainError("sqrt of negative value");
    if (a.v == 0.0) {
        if (a.d1 == 0.0 && a.d2 == 0.0) return {0.0, 0.0, 0.0};
        throw DomainError("sqrt derivative singular at zero");
    }
    const double r = std::sqrt(a.v);
    return compose(r, 0.5 / r, -0.25 / (r * a.v), a);
}

// Integer power by the analytic rule; valid for any base, including
// negative and zero (n >= 1).
inline Jet2 powi(const Jet2& a, long n) {
    if (n == 0) return Jet2::constant(1.0);
    if (n < 0) return Jet2::constant(1.0) / powi(a, -n);
    const double vn1 = std::pow(a.v, static_cast<double>(n - 1));
    const double vn2 = (n >= 2) ? std::pow(a.v, static_cast<double>(n - 2)) : 0.0;
    const double dn = static_cast<double>(n);
    return compose(vn1 * a.v, dn * vn1, dn * (dn - 1.0) * vn2, a);
}

inline Jet2 pow(const Jet2& a, const Jet2& b) {
    // constant integer exponent: defined for negative bases too
    if (b.d1 == 0.0 && b.d2 == 0.0) {
        const double n = b.v;
        if (n == std::floor(n) && std::abs(n) <= 64.0) return powi(a, static_cast<long>(n));
        if (a.v <= 0.0) throw DomainError("pow of non-positive base with non-integer exponent");
        const double vp = std::pow(a.v, n);
        return compose(vp, n * vp / a.v, n * (n - 1.0) * vp / (a.v * a.v), a);
    }
    return exp(b * log(a));
}

}  // namespace mazer

#endif
