#include "wqed/lattice.hpp"
#include <cmath>
#include <sstream>

namespace wqed {

void ArrayParams::validate() const {
    std::ostringstream err;
    if (n_sites < 2) err << "n_sites must be >= 2, got " << n_sites;
    else if (!(gamma0 > 0)) err << "gamma0 must be > 0, got " << gamma0;
    else if (!(omega > 0)) err << "omega must be > 0, got " << omega;
    else if (!(spacing > 0)) err << "spacing must be > 0, got " << spacing;
    else if (!(phi > 0) || !(phi < 2 * M_PI)) err << "phi must lie in (0, 2pi), got " << phi;
    else if (!(eta >= 0)) err << "eta must be >= 0, got " << eta;
    else return;
    throw validation_error(err.str());
}

static double cot(double x) { return std::cos(x) / std::sin(x); }

double dispersion_dark(double k, const ArrayParams& p) {
    const double d = p.spacing, k0 = p.k0();
    const double tol = 1e-9 / d;
    if (std::abs(k - k0) < tol || std::abs(k + k0) < tol)
        throw divergent_dispersion("k within 1e-9/d of +-k0");
    return (p.gamma0 / 4.0) * (cot((k0 + k) * d / 2.0) + cot((k0 - k) * d / 2.0));
}

cplx superradiant_eigenvalue(const ArrayParams& p) {
    // at k = k0 the cot((k0-k)d/2) term diverges and is dropped
    return cplx((p.gamma0 / 4.0) * cot(p.phi), -p.n_sites * p.gamma0 / 4.0);
}

BoundaryCoeffs boundary_coeffs(cplx k, const ArrayParams& p) {
    const double d = p.spacing, k0 = p.k0();
    const cplx i(0.0, 1.0);
    const double z1 = d, zN = p.n_sites * d;
    const cplx dg = 1.0 - std::exp(i * (k - k0) * d);
    const cplx dh = std::exp(-i * (k + k0) * d) - 1.0;
    if (std::abs(dg) < 1e-9 || std::abs(dh) < 1e-9)
        throw divergent_dispersion("boundary coefficients diverge at k = +-k0 (mod 2pi/d)");
    return {std::exp(i * (k - k0) * z1) / dg, std::exp(i * (k + k0) * zN) / dh, k};
}

double quantization_residual(cplx k, const ArrayParams& p) {
    const BoundaryCoeffs a = boundary_coeffs(k, p);
    const BoundaryCoeffs b = boundary_coeffs(-k, p);
    const cplx lhs = a.g * b.h, rhs = b.g * a.h;
    const double denom = std::abs(lhs) + std::abs(rhs);
    if (denom == 0.0) return 0.0;
    return std::abs(lhs - rhs) / denom;
}

double solve_k_omega(const ArrayParams& p, double k_ref) {
    const double d = p.spacing;
    const double target = dispersion_dark(k_ref, p) - p.omega;
    double a = p.k0() + 1e-6 / d, b = M_PI / d;
    double fa = dispersion_dark(a, p) - target;
    double fb = dispersion_dark(b, p) - target;
    if (fa * fb >= 0) {
        std::ostringstream err;
        err << "dispersion on (k0, pi/d) does not straddle eps(k_ref) - omega = " << target;
        throw no_bracket(err.str());
    }
    while ((b - a) > 1e-10 * b) {
        const double m = 0.5 * (a + b);
        const double fm = dispersion_dark(m, p) - target;
        if (fa * fm <= 0) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

SelfEnergy self_energy(double k, double E, const ArrayParams& p) {
    SelfEnergy s;
    s.domain_warning = p.phi > 0.1;
    const double e2 = p.eta * p.eta, g0 = p.gamma0, d = p.spacing;
    const cplx i(0.0, 1.0);
    const double eps_k = dispersion_dark(k, p);
    const double alpha = 4.0;
    s.sigma2 = -i * (g0 * e2 / 2.0) - e2 * eps_k;
    s.sigma_sr = i * (e2 * g0 / 2.0);
    const double im_d = -(e2 * g0 / 4.0) * std::sqrt(g0 / (p.omega * p.phi));
    const double dk = M_PI - std::abs(k) * d;
    const double re_d = -(e2 * g0 * g0 / 16.0) * (dk * dk / p.omega + alpha / (p.omega - E));
    s.sigma_d = cplx(re_d, im_d);
    s.total = s.sigma2 + s.sigma_sr + s.sigma_d;
    return s;
}

AnalyticEstimates analytic_estimates(const ArrayParams& p) {
    AnalyticEstimates est;
    est.domain_warning = p.phi > 0.1;
    const double d = p.spacing, g0 = p.gamma0, om = p.omega, e2 = p.eta * p.eta;
    est.k_omega = solve_k_omega(p, M_PI / d);
    est.beta = est.k_omega * d / M_PI;
    est.mass_ratio = 1.0 / (1.0 + e2 * g0 / (p.phi * om));
    est.z_factor = 1.0 / (1.0 + est.alpha * g0 * g0 * e2 / (16.0 * om * om));
    est.v_modulus = e2 * g0 * std::sqrt(g0 / (om * p.phi)) / 4.0;
    est.v_phase = -M_PI / 2.0;
    return est;
}

double swt_validity_ratio(const ArrayParams& p) {
    const double r = p.gamma0 / p.omega;
    return p.n_sites * p.eta * p.eta / p.phi * r * r * r;
}

} // namespace wqed
