#pragma once
#include <complex>
#include "wqed/errors.hpp"

namespace wqed {

using cplx = std::complex<double>;

/// Physical parameter set consumed by every builder.
/// Sites sit at z_m = m*d for m = 1..N; k is always in units of 1/d.
struct ArrayParams {
    int n_sites = 2;        // N
    double gamma0 = 1.0;    // single-emitter decay rate
    double omega = 1.0;     // phonon frequency
    double phi = 0.03;      // propagation phase per spacing, k0*d, folded mod 2pi
    double eta = 0.0;       // optomechanical coupling (dimensionless)
    double spacing = 1.0;   // lattice constant d

    double k0() const { return phi / spacing; }
    // second-order displacement expansion is not trustworthy past eta ~ 0.3
    bool lamb_dicke_warning() const { return eta >= 0.3; }
    void validate() const;
};

/// g_k, h_k entering the finite-array quantization condition.
struct BoundaryCoeffs {
    cplx g;
    cplx h;
    cplx k;
};

/// Closed-form infinite-array estimates for the emergent modulation.
struct AnalyticEstimates {
    double k_omega = 0.0;     // resonant momentum, units 1/d
    double beta = 0.0;        // k_omega*d/pi
    double mass_ratio = 1.0;  // m*/m
    double z_factor = 1.0;    // quasiparticle residue Z
    double alpha = 4.0;       // principal-value integral constant
    double v_modulus = 0.0;   // |V|
    double v_phase = 0.0;     // arg V
    bool domain_warning = false;  // set when phi > 0.1 (asymptotics unreliable)
};

struct SelfEnergy {
    cplx sigma2;
    cplx sigma_sr;
    cplx sigma_d;
    cplx total;
    bool domain_warning = false;
};

// Dark-state dispersion (gamma0/4)[cot((k0+k)d/2) + cot((k0-k)d/2)].
// k must be in (-pi/d, pi/d] and at least 1e-9/d away from +-k0.
double dispersion_dark(double k, const ArrayParams& p);

// Collective eigenvalue at k = +-k0: (gamma0/4)cot(k0 d) - i N gamma0/4,
// the divergent self-term dropped.
cplx superradiant_eigenvalue(const ArrayParams& p);

BoundaryCoeffs boundary_coeffs(cplx k, const ArrayParams& p);

// |g_k h_{-k} - g_{-k} h_k| / (|g_k h_{-k}| + |g_{-k} h_k|); zero exactly on
// finite-array eigen-wavenumbers.
double quantization_residual(cplx k, const ArrayParams& p);

// Root of eps(k_ref) = omega + eps(k) on (k0, pi/d), bisection to 1e-10 relative.
double solve_k_omega(const ArrayParams& p, double k_ref);
inline double solve_k_omega(const ArrayParams& p) { return solve_k_omega(p, M_PI / p.spacing); }

SelfEnergy self_energy(double k, double E, const ArrayParams& p);

AnalyticEstimates analytic_estimates(const ArrayParams& p);

// N eta^2 phi^-1 (gamma0/omega)^3; << 1 required for the decoupling to hold.
double swt_validity_ratio(const ArrayParams& p);

} // namespace wqed
