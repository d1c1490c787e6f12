#pragma once
#include <Eigen/Dense>
#include <string>
#include <vector>
#include "wqed/lattice.hpp"

namespace wqed {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct ComplexMatrix {
    CMat m;
    std::string label;
    int dim() const { return static_cast<int>(m.rows()); }
};

/// Emergent cosine modulation triple: diagonal term V cos(2 pi beta m + theta).
struct Modulation {
    cplx v = 0.0;
    double beta = 0.0;
    double theta = 0.0;  // folded to [0, 2pi)
};

struct TruncationPolicy {
    int max_phonons = 1;                // 0 or 1
    bool include_second_order = true;   // keep number-conserving eta^2 terms
};

// Basis layout of the truncated polariton-phonon problem: index m-1 is
// |e_m; vac>, index N + (m-1)*N + (p-1) is |e_m; 1_p>, m,p = 1..N.
inline int phonon_index(int n_sites, int m, int p) {
    return n_sites + (m - 1) * n_sites + (p - 1);
}

// Bare polariton matrix, entry (m,n) = -i(gamma0/2) e^{i phi |m-n|}.
ComplexMatrix build_h0(const ArrayParams& p);

// Truncated (<= 1 phonon) polariton-phonon matrix, dimension N + N^2.
ComplexMatrix build_full(const ArrayParams& p, const TruncationPolicy& policy = {});

// H0 plus the quasiperiodic on-site potential (near-constant shift omitted).
ComplexMatrix build_heff(const ArrayParams& p, const Modulation& mod);

// The two modulation phases compatible with the array's mirror symmetry,
// theta_n = n*pi - pi*beta*(N+1) mod 2pi, n = 0, 1.
std::vector<double> physical_thetas(const ArrayParams& p, double beta);

} // namespace wqed
