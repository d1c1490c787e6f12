#include "wqed/analysis.hpp"
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace wqed {

static void check_unit_norm(const CVec& state) {
    const double n = state.norm();
    if (std::abs(n - 1.0) > 1e-10) {
        std::ostringstream err;
        err << "state norm " << n << " is not 1 within 1e-10";
        throw not_normalized(err.str());
    }
}

double ipr(const CVec& state) {
    check_unit_norm(state);
    double s = 0.0;
    for (int i = 0; i < state.size(); ++i) {
        const double a2 = std::norm(state[i]);
        s += a2 * a2;
    }
    return s;
}

double boundary_weight(const CVec& state, int depth) {
    check_unit_norm(state);
    const int n = static_cast<int>(state.size());
    if (depth < 1 || 2 * depth > n)
        throw validation_error("boundary depth must satisfy 1 <= depth <= N/2");
    double s = 0.0;
    for (int i = 0; i < depth; ++i) s += std::norm(state[i]) + std::norm(state[n - 1 - i]);
    return s;
}

SpacingSeries level_spacings(std::vector<double> energies) {
    if (energies.size() < 3) throw too_few_levels("level spacings need at least 3 energies");
    std::sort(energies.begin(), energies.end());
    SpacingSeries s;
    const int n = static_cast<int>(energies.size());
    for (int i = 1; 2 * i <= n; ++i) s.e_o.push_back(energies[2 * i - 1] - energies[2 * i - 2]);
    for (int i = 1; 2 * i + 1 <= n; ++i) s.o_e.push_back(energies[2 * i] - energies[2 * i - 1]);
    s.energies = std::move(energies);
    return s;
}

std::vector<int> default_box_sizes(int n) {
    std::vector<int> sizes;
    const int smax = static_cast<int>(std::floor(std::log2(double(n)))) - 2;
    for (int s = 1; s <= smax; ++s) sizes.push_back(n >> s);
    return sizes;
}

struct FitLine {
    double slope = 0.0, r2 = 1.0;
};

static FitLine least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    FitLine f;
    const double det = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / det;
    const double icpt = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (int i = 0; i < n; ++i) {
        const double e = y[i] - (f.slope * x[i] + icpt);
        ss_res += e * e;
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

MultifractalResult fractal_dimensions(const CVec& state, double q,
                                      const std::vector<int>& box_sizes) {
    if (std::abs(q - 1.0) < 1e-12) throw validation_error("moment order q = 1 is excluded");
    const int n = static_cast<int>(state.size());
    std::vector<double> p(n);
    double tot = 0.0;
    for (int i = 0; i < n; ++i) {
        p[i] = std::norm(state[i]);
        tot += p[i];
    }
    for (double& v : p) v /= tot;

    std::vector<double> xs, yf, ya;
    std::vector<int> used;
    for (int l : box_sizes) {
        if (l < 1 || l > n) continue;
        const int nb = (n + l - 1) / l;  // final box truncated
        std::vector<double> mu;
        mu.reserve(nb);
        double msum = 0.0;
        for (int b = 0; b < nb; ++b) {
            double s = 0.0;
            const int hi = std::min((b + 1) * l, n);
            for (int i = b * l; i < hi; ++i) s += p[i];
            mu.push_back(s);
            msum += s;
        }
        double qsum = 0.0;
        std::vector<double> muq;
        for (double m : mu) {
            if (m <= 0) continue;
            muq.push_back(std::pow(m / msum, q));
            qsum += muq.back();
        }
        double vf = 0.0, va = 0.0;
        size_t k = 0;
        for (double m : mu) {
            if (m <= 0) continue;
            const double w = muq[k++] / qsum;
            vf += w * std::log(w);
            va += w * std::log(m / msum);
        }
        xs.push_back(std::log(double(l) / n));
        yf.push_back(vf);
        ya.push_back(va);
        used.push_back(l);
    }
    if (xs.size() < 3) throw degenerate_fit("fewer than 3 valid box sizes");

    const FitLine ff = least_squares(xs, yf);
    const FitLine fa = least_squares(xs, ya);
    MultifractalResult r;
    r.q = q;
    r.f_alpha = ff.slope;
    r.alpha_q = fa.slope;
    r.tau_q = q * fa.slope - ff.slope;
    r.d_q = r.tau_q / (q - 1.0);
    r.fit_r2 = std::min(ff.r2, fa.r2);
    r.box_sizes = used;
    return r;
}

double mean_band_d2(const Spectrum& spec, const std::vector<int>& band,
                    const std::vector<int>& box_sizes) {
    if (band.empty()) throw validation_error("mean_band_d2 needs a nonempty band");
    double s = 0.0;
    for (int i : band) s += fractal_dimensions(spec.vectors.col(i), 2.0, box_sizes).d_q;
    return s / band.size();
}

std::optional<GapLabel> gap_label(double rho, double beta, int nu_max, double tol) {
    std::optional<GapLabel> best;
    for (int nu = -nu_max; nu <= nu_max; ++nu) {
        if (nu == 0) continue;
        const int mu = static_cast<int>(std::lround(rho - nu * beta));
        const double res = std::abs(rho - mu - nu * beta);
        if (!best || res < best->residual - 1e-15 ||
            (std::abs(res - best->residual) <= 1e-15 && std::abs(nu) < std::abs(best->nu))) {
            best = GapLabel{rho, mu, nu, res};
        }
    }
    if (best && best->residual < tol) return best;
    return std::nullopt;
}

// largest generalized eigenvector of the Hermitian 2x2 pencil (A, B), B > 0
static Eigen::Vector2cd top_pencil_vector(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    const Eigen::Matrix2cd m = b.inverse() * a;
    // eigenvalues of the pencil are real; take the larger root
    const cplx tr = m.trace(), det = m.determinant();
    const cplx disc = std::sqrt(tr * tr - 4.0 * det);
    const cplx l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
    const cplx lam = l1.real() >= l2.real() ? l1 : l2;
    Eigen::Matrix2cd s = m - lam * Eigen::Matrix2cd::Identity();
    // null vector of s: pick the larger row to solve against
    Eigen::Vector2cd v;
    if (std::abs(s(0, 0)) + std::abs(s(0, 1)) >= std::abs(s(1, 0)) + std::abs(s(1, 1)))
        v << -s(0, 1), s(0, 0);
    else
        v << -s(1, 1), s(1, 0);
    if (v.norm() == 0) v << 1.0, 0.0;
    return v.normalized();
}

static double window_weight(const CVec& v, int lo, int hi) {
    double s = 0.0;
    for (int i = lo; i < hi; ++i) s += std::norm(v[i]);
    return s;
}

std::vector<EdgeStateRecord> detect_edge_states(const Spectrum& spec,
                                                const BandSegmentation& seg,
                                                const EdgeThresholds& thr) {
    const int n = spec.dim();
    const int nsites = static_cast<int>(spec.vectors.rows());
    const int depth = static_cast<int>(std::ceil(thr.depth_frac * nsites));
    std::vector<EdgeStateRecord> out;
    if (seg.gaps.empty()) return out;

    auto gap_of = [&](double re) {
        for (size_t g = 0; g < seg.gaps.size(); ++g)
            if (re > seg.gaps[g].lower && re < seg.gaps[g].upper) return static_cast<int>(g);
        return -1;
    };

    std::vector<int> cand;
    for (int i = 0; i < n; ++i) {
        if (gap_of(spec.values[i].real()) < 0) continue;
        if (boundary_weight(spec.vectors.col(i), depth) > thr.boundary_weight_min &&
            ipr(spec.vectors.col(i)) > thr.ipr_factor / nsites)
            cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end(), [&](int i, int j) {
        if (spec.values[i].real() != spec.values[j].real())
            return spec.values[i].real() < spec.values[j].real();
        return i < j;
    });

    auto raw_side = [&](int i) {
        const double wl = window_weight(spec.vectors.col(i), 0, depth);
        const double wr = window_weight(spec.vectors.col(i), nsites - depth, nsites);
        if (wl > 2 * wr) return EdgeSide::Left;
        if (wr > 2 * wl) return EdgeSide::Right;
        return EdgeSide::Both;
    };

    size_t x = 0;
    while (x < cand.size()) {
        const int i = cand[x];
        const int gi = gap_of(spec.values[i].real());
        const bool have_next = x + 1 < cand.size();
        const int j = have_next ? cand[x + 1] : -1;
        const bool degenerate =
            have_next && gap_of(spec.values[j].real()) == gi &&
            std::abs(spec.values[j].real() - spec.values[i].real()) < thr.pairing_tol;

        if (degenerate) {
            // a degenerate pair spans a 2-space with arbitrary mixing; pick the
            // extremal boundary-localized combinations before classifying sides
            CMat s(nsites, 2);
            s.col(0) = spec.vectors.col(i);
            s.col(1) = spec.vectors.col(j);
            const Eigen::Matrix2cd b = s.adjoint() * s;
            CMat pl = s;
            pl.block(depth, 0, nsites - depth, 2).setZero();
            CMat pr = s;
            pr.block(0, 0, nsites - depth, 2).setZero();
            const Eigen::Matrix2cd al = s.adjoint() * pl;
            const Eigen::Matrix2cd ar = s.adjoint() * pr;
            CVec vl = (s * top_pencil_vector(al, b)).normalized();
            CVec vr = (s * top_pencil_vector(ar, b)).normalized();
            const double bwl = window_weight(vl, 0, depth);
            const double bwr = window_weight(vr, nsites - depth, nsites);
            if (bwl > thr.boundary_weight_min && bwr > thr.boundary_weight_min) {
                EdgeStateRecord ri, rj;
                // keep raw side assignments when the raw states are already localized
                bool i_left = raw_side(i) == EdgeSide::Left ||
                              (raw_side(i) == EdgeSide::Both && raw_side(j) != EdgeSide::Left);
                if (raw_side(j) == EdgeSide::Left && raw_side(i) != EdgeSide::Left) i_left = false;
                const CVec& wi = i_left ? vl : vr;
                const CVec& wj = i_left ? vr : vl;
                ri = {i, ipr(wi), boundary_weight(wi, depth), i_left ? EdgeSide::Left : EdgeSide::Right, j, gi};
                rj = {j, ipr(wj), boundary_weight(wj, depth), i_left ? EdgeSide::Right : EdgeSide::Left, i, gi};
                out.push_back(ri);
                out.push_back(rj);
                x += 2;
                continue;
            }
        }
        EdgeStateRecord r;
        r.index = i;
        r.ipr = ipr(spec.vectors.col(i));
        r.boundary_weight = boundary_weight(spec.vectors.col(i), depth);
        r.side = raw_side(i);
        r.partner = -1;
        r.gap = gi;
        out.push_back(r);
        ++x;
    }
    std::sort(out.begin(), out.end(),
              [](const EdgeStateRecord& a, const EdgeStateRecord& b) { return a.index < b.index; });
    return out;
}

} // namespace wqed
