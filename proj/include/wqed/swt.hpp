#pragma once
#include "wqed/spectral.hpp"

namespace wqed {

/// Complex-orthonormal eigenbasis of the (complex symmetric) polariton matrix:
/// columns satisfy v_i^T v_j = delta_ij, so left vectors are plain transposes.
struct EigenBasis {
    CVec values;                       // sorted by ascending real part
    CMat right_vectors;
    std::vector<double> momentum_labels;  // per state, Bloch grid point in (-pi/d, pi/d]
};

/// Lazy view of the phonon-coupling tensor g[k1][k2][q] on the plane-wave grid
/// q_j = 2 pi j / (N d). Full storage is N^3 complex entries, so slices are
/// built on demand: slice(j)(k1,k2) = sum_{mn} v_k1(m) c^q_{mn} v_k2(n) with
/// c^q_{mn} = (eta gamma0/2) sign(m-n) e^{i phi|m-n|} (e^{i q z_m} - e^{i q z_n}).
class CouplingTensor {
public:
    CouplingTensor(const ArrayParams& p, const EigenBasis& basis);
    CMat slice(int j) const;
    cplx at(int k1, int k2, int j) const { return slice(j)(k1, k2); }
    int grid_size() const { return n_; }
private:
    int n_;
    double pref_, spacing_;
    CMat v_;   // right vectors
    CMat w_;   // K V with K_mn = sign(m-n) e^{i phi|m-n|}
};

struct SwtResult {
    CMat delta;            // second-order correction in the H0 eigenbasis
    ComplexMatrix h_prime; // effective polariton matrix in the site basis
    double validity_ratio = 0.0;
    bool near_resonance = false;
    EigenBasis basis;
};

/// Momentum-resolved emergent modulation read off the Delta stripes.
struct ExtractedModulation {
    std::vector<cplx> v_k;
    std::vector<double> theta_k;
    std::vector<cplx> delta_eps_k;
    Modulation collapsed;      // values at the grid point nearest k = pi/d
    int stripe_offset = 0;     // r = round(N beta)
    double stripe_ratio = 0.0; // mean |stripe| / median |off-stripe|
};

EigenBasis h0_eigenbasis(const ComplexMatrix& h0);

CouplingTensor coupling_tensor(const ArrayParams& p, const EigenBasis& basis);

// Schrieffer-Wolff decoupling at second order. Delta is assembled per q-slice
// (O(N^4) flops total); H' = (1-eta^2)H0 - i eta^2 gamma0/2 + V Delta V^T with
// the complex-orthogonal (plain transpose) change of basis.
SwtResult swt_hamiltonian(const ArrayParams& p);

ExtractedModulation extract_modulation(const SwtResult& result, const ArrayParams& p);

// Same extraction applied to an explicit site-basis correction matrix
// (exposed for the inverse test: inject a diagonal potential and read it back).
ExtractedModulation extract_modulation_site(const CMat& corr_site, const ArrayParams& p);

} // namespace wqed
