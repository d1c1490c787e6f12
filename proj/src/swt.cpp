#include "wqed/swt.hpp"
#include <algorithm>
#include <cmath>
#include <sstream>

namespace wqed {

EigenBasis h0_eigenbasis(const ComplexMatrix& h0) {
    const int n = h0.dim();
    Spectrum spec = eigendecompose(h0);  // sorted ascending Re, ties by Im
    EigenBasis basis;
    basis.values = spec.values;
    basis.right_vectors = spec.vectors;
    CMat& v = basis.right_vectors;

    // bilinear modified Gram-Schmidt in the v^T v inner product (no conjugation),
    // then fix the overall sign via the largest-magnitude component
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < j; ++i) {
            const cplx c = v.col(i).cwiseProduct(v.col(j)).sum();
            v.col(j) -= c * v.col(i);
        }
        const cplx s2 = v.col(j).cwiseProduct(v.col(j)).sum();
        if (std::abs(s2) < 1e-12) {
            std::ostringstream err;
            err << "complex-orthogonal normalization collapsed at index " << j
                << " (v^T v = " << std::abs(s2) << ")";
            throw degenerate_basis(err.str());
        }
        v.col(j) /= std::sqrt(s2);
        int kmax = 0;
        double amax = -1.0;
        for (int i = 0; i < n; ++i) {
            const double ai = std::abs(v(i, j));
            if (ai > amax) { amax = ai; kmax = i; }
        }
        const cplx top = v(kmax, j);
        if (top.real() < 0 || (top.real() == 0 && top.imag() < 0)) v.col(j) = -v.col(j);
    }

    const double ortho = (v.transpose() * v - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (ortho > 1e-8) {
        std::ostringstream err;
        err << "biorthogonality defect " << ortho << " exceeds 1e-8";
        throw degenerate_basis(err.str());
    }

    // nominal quasi-momentum: argmax Bloch overlap on the DFT grid, folded to
    // the first Brillouin zone
    CMat f(n, n);
    for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m)
            f(m, j) = std::exp(cplx(0.0, 2.0 * M_PI * j * (m + 1) / n)) / std::sqrt(double(n));
    CMat overlap = f.adjoint() * v;
    basis.momentum_labels.resize(n);
    for (int c = 0; c < n; ++c) {
        int jmax = 0;
        double amax = -1.0;
        for (int j = 0; j < n; ++j) {
            const double aj = std::abs(overlap(j, c));
            if (aj > amax) { amax = aj; jmax = j; }
        }
        double q = 2.0 * M_PI * jmax / n;  // units 1/d with the d factors cancelling
        if (q > M_PI) q -= 2.0 * M_PI;
        basis.momentum_labels[c] = q;
    }
    return basis;
}

CouplingTensor::CouplingTensor(const ArrayParams& p, const EigenBasis& basis)
    : n_(p.n_sites), pref_(0.5 * p.eta * p.gamma0), spacing_(p.spacing), v_(basis.right_vectors) {
    CMat k(n_, n_);
    for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b) {
            const double sgn = a > b ? 1.0 : (a < b ? -1.0 : 0.0);
            k(a, b) = sgn * std::exp(cplx(0.0, p.phi * std::abs(a - b)));
        }
    w_ = k * v_;
}

CMat CouplingTensor::slice(int j) const {
    CMat u(n_, n_);
    for (int m = 0; m < n_; ++m) {
        const cplx phase = std::exp(cplx(0.0, 2.0 * M_PI * j * (m + 1) / n_));
        u.row(m) = phase * v_.row(m);
    }
    CMat g = u.transpose() * w_;
    g += g.transpose().eval();
    return pref_ * g;
}

CouplingTensor coupling_tensor(const ArrayParams& p, const EigenBasis& basis) {
    return CouplingTensor(p, basis);
}

// Second-order correction in the eigenbasis: for each phonon momentum q the
// resolvent-weighted slice (G^q o D) multiplies G^{-q}; symmetrizing supplies
// the phonon-emission half of the commutator.
static CMat swt_delta(const ArrayParams& p, const EigenBasis& basis, bool* near_resonance) {
    const int n = p.n_sites;
    const CouplingTensor ct(p, basis);
    CMat dm(n, n);
    double min_denom = std::numeric_limits<double>::max();
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const cplx den = -p.omega + basis.values[a] - basis.values[b];
            min_denom = std::min(min_denom, std::abs(den));
            dm(a, b) = 1.0 / den;
        }
    if (near_resonance) *near_resonance = min_denom < 1e-6 * p.omega;

    CMat acc = CMat::Zero(n, n);
    for (int j = 0; 2 * j <= n; ++j) {
        const int jm = (n - j) % n;
        const CMat gq = ct.slice(j);
        if (jm == j) {
            acc += gq.cwiseProduct(dm) * gq;
            continue;
        }
        const CMat gmq = ct.slice(jm);
        acc += gq.cwiseProduct(dm) * gmq;
        acc += gmq.cwiseProduct(dm) * gq;
    }
    CMat delta = (acc + acc.transpose().eval()) / (2.0 * n);
    return delta;
}

SwtResult swt_hamiltonian(const ArrayParams& p) {
    p.validate();
    SwtResult res;
    const ComplexMatrix h0 = build_h0(p);
    res.basis = h0_eigenbasis(h0);
    res.validity_ratio = swt_validity_ratio(p);
    res.delta = swt_delta(p, res.basis, &res.near_resonance);

    const int n = p.n_sites;
    const double e2 = p.eta * p.eta;
    const CMat& v = res.basis.right_vectors;
    CMat hp = (1.0 - e2) * h0.m + (v * res.delta * v.transpose());
    hp.diagonal().array() += cplx(0.0, -0.5 * e2 * p.gamma0);
    hp = 0.5 * (hp + hp.transpose().eval());  // restore exact complex symmetry
    res.h_prime = {std::move(hp), "hprime"};
    return res;
}

ExtractedModulation extract_modulation_site(const CMat& corr_site, const ArrayParams& p) {
    const int n = p.n_sites;
    const double beta = solve_k_omega(p) * p.spacing / M_PI;
    const int r = static_cast<int>(std::lround(n * beta));

    CMat f(n, n);
    for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m)
            f(m, j) = std::exp(cplx(0.0, 2.0 * M_PI * j * (m + 1) / n)) / std::sqrt(double(n));
    const CMat dmom = f.adjoint() * corr_site * f;

    // quasiperiodicity shows up as dominant cyclic stripes at offsets +-r
    std::vector<double> offset_mean(n, 0.0);
    for (int o = 1; o < n; ++o) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += std::abs(dmom(j, (j + o) % n));
        offset_mean[o] = s / n;
    }
    const double stripe = 0.5 * (offset_mean[r % n] + offset_mean[(n - r) % n]);
    std::vector<double> off;
    for (int o = 1; o < n; ++o)
        if (o != r % n && o != (n - r) % n) off.push_back(offset_mean[o]);
    std::sort(off.begin(), off.end());
    const double med = off.empty() ? 0.0
                                   : (off.size() % 2 ? off[off.size() / 2]
                                                     : 0.5 * (off[off.size() / 2 - 1] + off[off.size() / 2]));
    if (!(stripe > 3.0 * med)) {
        std::ostringstream err;
        err << "stripe offset " << r << " mean " << stripe
            << " does not exceed 3x off-stripe median " << med;
        throw stripe_not_found(err.str());
    }

    ExtractedModulation em;
    em.stripe_offset = r;
    em.stripe_ratio = med > 0 ? stripe / med : std::numeric_limits<double>::infinity();
    em.v_k.resize(n);
    em.theta_k.resize(n);
    em.delta_eps_k.resize(n);
    for (int j = 0; j < n; ++j) {
        const cplx m1 = dmom(j, (j + r) % n);
        const cplx m2 = dmom((j + r) % n, j);
        em.v_k[j] = 2.0 * std::sqrt(m1 * m2);
        em.theta_k[j] = 0.5 * std::arg(m2 / m1);  // (-pi/2, pi/2]
        em.delta_eps_k[j] = dmom(j, j);
    }
    // continuity in k: the residual sign ambiguity of the principal root is a
    // theta shift by pi, resolved by walking the grid
    for (int j = 1; j < n; ++j) {
        while (em.theta_k[j] - em.theta_k[j - 1] > M_PI / 2) em.theta_k[j] -= M_PI;
        while (em.theta_k[j] - em.theta_k[j - 1] < -M_PI / 2) em.theta_k[j] += M_PI;
    }

    const int jstar = n / 2;  // grid point nearest k = pi/d, ties to the lower index
    em.collapsed.v = em.v_k[jstar];
    em.collapsed.beta = beta;
    double th = std::fmod(em.theta_k[jstar], 2.0 * M_PI);
    if (th < 0) th += 2.0 * M_PI;
    em.collapsed.theta = th;
    return em;
}

ExtractedModulation extract_modulation(const SwtResult& result, const ArrayParams& p) {
    const CMat& v = result.basis.right_vectors;
    const CMat corr = v * result.delta * v.transpose();
    return extract_modulation_site(corr, p);
}

} // namespace wqed
