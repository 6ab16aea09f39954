#ifndef MAZER_DRESSED_HPP
#define MAZER_DRESSED_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace mazer {

// Units: hbar = 1 throughout.  The detuning is Delta = omega_o - omega
// (atomic transition minus cavity frequency).  With the default mass
// m = 1/2 the kinetic operator is exactly -d^2/dz^2.
//
// All couplings act inside one photon-number manifold, the 2x2 space
// spanned by (|n+1,g>, |n,e>); that basis ordering is used everywhere.
struct ManifoldParams {
    double g = 1.0;       // atom-field coupling (energy)
    double delta = 0.0;   // detuning omega_o - omega (energy)
    int n = 0;            // photon number of the manifold
    double mass = 0.5;    // atomic mass (hbar = 1)
    double omega = 0.0;   // cavity frequency; enters only the offset omega*(n+1/2)

    ManifoldParams() = default;
    ManifoldParams(double g_, double delta_, int n_, double mass_ = 0.5, double omega_ = 0.0);

    // effective coupling beta = g*sqrt(n+1)
    double beta() const { return beta_; }
    // common energy offset omega*(n+1/2) shared by both channels
    double offset() const { return omega * (n + 0.5); }

private:
    double beta_ = 1.0;
    void validate_and_finish();
};

// Raised where the dressed basis is undefined: lambda = 0, i.e. the
// fully degenerate point u = 0 with Delta = 0.  No conventional angle
// is substituted; callers decide how to proceed.
struct DegeneratePoint : std::runtime_error {
    explicit DegeneratePoint(const std::string& what) : std::runtime_error(what) {}
};

// Amplitude pair over the bare basis (|n+1,g>, |n,e>).
struct BareVector2 {
    std::complex<double> comp_g{0.0, 0.0};
    std::complex<double> comp_e{0.0, 0.0};

    double norm() const;
    // Hermitian inner product <this|other>
    std::complex<double> dot(const BareVector2& other) const;
};

// Local dressed-state data at one position.
struct DressedPoint {
    double u = 0.0;        // mode value
    double lambda = 0.0;   // sqrt(Delta^2/4 + beta^2 u^2)
    double theta = 0.0;    // mixing angle
    double cos2t = 0.0;    // cos 2theta = (-Delta/2)/lambda
    double sin2t = 0.0;    // sin 2theta = beta*u/lambda
    double dtheta = 0.0;   // dtheta/dz
    double d2theta = 0.0;  // d^2theta/dz^2
    double e_plus = 0.0;   // E_n^+ including the omega*(n+1/2) offset
    double e_minus = 0.0;  // E_n^-
};

// sqrt(Delta^2/4 + beta^2 u^2)
double lambda_of(const ManifoldParams& p, double u);

// Interaction matrix restricted to the manifold, common offset
// omega*(n+1/2) excluded:  [[-Delta/2, beta*u], [beta*u, +Delta/2]].
Eigen::Matrix2d potential_matrix(const ManifoldParams& p, double u);

// E_n^+- = omega*(n+1/2) +- lambda; returned as (e_plus, e_minus).
std::pair<double, double> eigenvalues(const ManifoldParams& p, double u);

// Mixing angle from cot(2theta) = -(Delta/2)/(beta*u); computed as
// theta = atan2(beta*u, -Delta/2)/2, which lands in [0, pi/2] for
// beta*u >= 0.  Throws DegeneratePoint when lambda = 0.
double mixing_angle(const ManifoldParams& p, double u);

// (cos 2theta, sin 2theta) = ((-Delta/2)/lambda, beta*u/lambda).
std::pair<double, double> trig_pair(const ManifoldParams& p, double u);

// Closed forms
//   theta'  = -beta*Delta*u' / (4 lambda^2)
//   theta'' = -(beta*Delta/4) * (u''/lambda^2 - 2 beta^2 u u'^2 / lambda^4)
std::pair<double, double> theta_derivatives(const ManifoldParams& p,
                                            double u, double du, double d2u);

// Phi+ = ( cos theta, sin theta ),  Phi- = ( -sin theta, cos theta )
std::pair<BareVector2, BareVector2> dressed_vectors(double theta);

// Everything at once; requires lambda > 0.
DressedPoint dressed_point(const ManifoldParams& p, double u, double du, double d2u);

}  // namespace mazer

#endif
