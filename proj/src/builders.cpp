#include "wqed/builders.hpp"
#include <cmath>
#include <sstream>

namespace wqed {

static constexpr int kDimCap = 20000;

ComplexMatrix build_h0(const ArrayParams& p) {
    p.validate();
    const int n = p.n_sites;
    const cplx pref(0.0, -0.5 * p.gamma0);
    CMat h(n, n);
    for (int col = 0; col < n; ++col)
        for (int row = 0; row < n; ++row)
            h(row, col) = pref * std::exp(cplx(0.0, p.phi * std::abs(row - col)));
    return {std::move(h), "h0"};
}

ComplexMatrix build_full(const ArrayParams& p, const TruncationPolicy& policy) {
    p.validate();
    const int n = p.n_sites;
    // max_phonons = 0 keeps only the polariton sector (still with the 1-eta^2
    // hop renormalization when second-order terms are on)
    const long long dim = policy.max_phonons >= 1
                              ? static_cast<long long>(n) + static_cast<long long>(n) * n
                              : static_cast<long long>(n);
    if (dim > kDimCap) {
        std::ostringstream err;
        err << "polariton-phonon dimension " << dim << " exceeds cap " << kDimCap;
        throw dimension_overflow(err.str());
    }
    const bool so = policy.include_second_order;
    const double e2 = so ? p.eta * p.eta : 0.0;
    CMat h = CMat::Zero(dim, dim);

    // phase kernel and corrected zero-phonon block: the vacuum expectation of
    // the squared displacement difference renormalizes off-diagonal hops by 1-eta^2
    CMat E(n, n), h00(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            E(a, b) = std::exp(cplx(0.0, p.phi * std::abs(a - b)));
            h00(a, b) = cplx(0.0, -0.5 * p.gamma0) * E(a, b) * (a == b ? 1.0 : 1.0 - e2);
        }
    h.block(0, 0, n, n) = h00;

    auto idx = [n](int m, int pp) { return phonon_index(n, m, pp); };

    if (policy.max_phonons >= 1) {
        // single-phonon emission/absorption, (eta gamma0/2) sign(m-n) e^{i phi|m-n|}
        for (int m = 1; m <= n; ++m)
            for (int nn = 1; nn <= n; ++nn) {
                if (m == nn) continue;
                const double sgn = m > nn ? 1.0 : -1.0;
                const cplx c = 0.5 * p.eta * p.gamma0 * sgn * E(m - 1, nn - 1);
                h(idx(m, m), nn - 1) += c;
                h(idx(m, nn), nn - 1) -= c;
                h(nn - 1, idx(m, m)) += c;
                h(nn - 1, idx(m, nn)) -= c;
            }
        // one-phonon block: corrected polariton matrix, phonon a spectator
        for (int m = 1; m <= n; ++m)
            for (int nn = 1; nn <= n; ++nn)
                for (int pp = 1; pp <= n; ++pp)
                    h(idx(m, pp), idx(nn, pp)) += h00(m - 1, nn - 1);
        for (int m = 1; m <= n; ++m)
            for (int pp = 1; pp <= n; ++pp)
                h(idx(m, pp), idx(m, pp)) += p.omega;
        if (so) {
            // number-conserving second-order terms localized on the hop's endpoints;
            // the a^dag a part is already carried by h00 on the one-phonon block
            for (int m = 1; m <= n; ++m)
                for (int nn = 1; nn <= n; ++nn) {
                    if (m == nn) continue;
                    const cplx c = cplx(0.0, 0.25 * p.eta * p.eta * p.gamma0) * E(m - 1, nn - 1);
                    h(idx(m, m), idx(nn, m)) += 2.0 * c;
                    h(idx(m, nn), idx(nn, nn)) += 2.0 * c;
                    h(idx(m, m), idx(nn, nn)) -= 2.0 * c;
                    h(idx(m, nn), idx(nn, m)) -= 2.0 * c;
                }
        }
    }
    return {std::move(h), "full"};
}

ComplexMatrix build_heff(const ArrayParams& p, const Modulation& mod) {
    ComplexMatrix out = build_h0(p);
    for (int m = 1; m <= p.n_sites; ++m)
        out.m(m - 1, m - 1) += mod.v * std::cos(2.0 * M_PI * mod.beta * m + mod.theta);
    out.label = "heff";
    return out;
}

std::vector<double> physical_thetas(const ArrayParams& p, double beta) {
    const double twopi = 2.0 * M_PI;
    std::vector<double> out;
    for (int n = 0; n < 2; ++n) {
        double th = std::fmod(n * M_PI - M_PI * beta * (p.n_sites + 1), twopi);
        if (th < 0) th += twopi;
        out.push_back(th);
    }
    return out;
}

} // namespace wqed
