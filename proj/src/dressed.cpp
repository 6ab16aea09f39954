#include "mazer/dressed.hpp"

#include <cmath>

namespace mazer {

ManifoldParams::ManifoldParams(double g_, double delta_, int n_, double mass_, double omega_)
    : g(g_), delta(delta_), n(n_), mass(mass_), omega(omega_) {
    validate_and_finish();
}

void ManifoldParams::validate_and_finish() {
    if (n < 0) throw std::invalid_argument("ManifoldParams: photon number n must be >= 0");
    if (!(mass > 0.0)) throw std::invalid_argument("ManifoldParams: mass must be positive");
    if (!std::isfinite(g) || !std::isfinite(delta) || !std::isfinite(omega) || !std::isfinite(mass))
        throw std::invalid_argument("ManifoldParams: parameters must be finite");
    beta_ = g * std::sqrt(static_cast<double>(n) + 1.0);
    if (!std::isfinite(beta_)) throw std::invalid_argument("ManifoldParams: beta overflowed");
}

double BareVector2::norm() const {
    return std::sqrt(std::norm(comp_g) + std::norm(comp_e));
}

std::complex<double> BareVector2::dot(const BareVector2& other) const {
    return std::conj(comp_g) * other.comp_g + std::conj(comp_e) * other.comp_e;
}

double lambda_of(const ManifoldParams& p, double u) {
    return std::hypot(0.5 * p.delta, p.beta() * u);
}

Eigen::Matrix2d potential_matrix(const ManifoldParams& p, double u) {
    if (!std::isfinite(u)) throw std::invalid_argument("potential_matrix: u must be finite");
    Eigen::Matrix2d v;
    const double w = p.beta() * u;
    v << -0.5 * p.delta, w,
         w, 0.5 * p.delta;
    return v;
}

std::pair<double, double> eigenvalues(const ManifoldParams& p, double u) {
    const double lam = lambda_of(p, u);
    const double off = p.offset();
    return {off + lam, off - lam};
}

double mixing_angle(const ManifoldParams& p, double u) {
    const double w = p.beta() * u;
    const double c = -0.5 * p.delta;
    if (w == 0.0 && c == 0.0)
        throw DegeneratePoint("mixing_angle: lambda = 0, angle undefined");
    return 0.5 * std::atan2(w, c);
}

std::pair<double, double> trig_pair(const ManifoldParams& p, double u) {
    const double lam = lambda_of(p, u);
    if (lam == 0.0)
        throw DegeneratePoint("trig_pair: lambda = 0, angle undefined");
    return {-0.5 * p.delta / lam, p.beta() * u / lam};
}

std::pair<double, double> theta_derivatives(const ManifoldParams& p,
                                            double u, double du, double d2u) {
    const double b = p.beta();
    const double lam2 = 0.25 * p.delta * p.delta + b * b * u * u;
    if (lam2 == 0.0)
        throw DegeneratePoint("theta_derivatives: lambda = 0, angle undefined");
    const double bd4 = 0.25 * b * p.delta;
    const double dt = -bd4 * du / lam2;
    const double d2t = -bd4 * (d2u / lam2 - 2.0 * b * b * u * du * du / (lam2 * lam2));
    return {dt, d2t};
}

std::pair<BareVector2, BareVector2> dressed_vectors(double theta) {
    if (!std::isfinite(theta)) throw std::invalid_argument("dressed_vectors: theta must be finite");
    const double c = std::cos(theta), s = std::sin(theta);
    return {BareVector2{c, s}, BareVector2{-s, c}};
}

DressedPoint dressed_point(const ManifoldParams& p, double u, double du, double d2u) {
    DressedPoint d;
    d.u = u;
    d.lambda = lambda_of(p, u);
    d.theta = mixing_angle(p, u);
    std::tie(d.cos2t, d.sin2t) = trig_pair(p, u);
    std::tie(d.dtheta, d.d2theta) = theta_derivatives(p, u, du, d2u);
    std::tie(d.e_plus, d.e_minus) = eigenvalues(p, u);
    return d;
}

}  // namespace mazer
