#include "wqed/protocol.hpp"
#include <algorithm>
#include <cmath>

namespace wqed {

static double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// spacing filter scale used by the two-level segmentation: drops exactly
// degenerate/split levels from the median estimate without a tuned threshold
static double degeneracy_floor(const std::vector<double>& energies) {
    std::vector<double> a(energies.size());
    for (size_t i = 0; i < a.size(); ++i) a[i] = std::abs(energies[i]);
    return 1e-7 * median_of(std::move(a));
}

// largest generalized eigenvalue of the Hermitian 2x2 pencil (A, B), B > 0:
// the maximal Rayleigh quotient c'Ac / c'Bc over the span
static double top_pencil_value(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    const Eigen::Matrix2cd m = b.inverse() * a;
    const cplx tr = m.trace(), det = m.determinant();
    const cplx disc = std::sqrt(tr * tr - 4.0 * det);
    const double l1 = (0.5 * (tr + disc)).real();
    const double l2 = (0.5 * (tr - disc)).real();
    return l1 > l2 ? l1 : l2;
}

WellAnalysis analyze_well_structure(const Spectrum& spec, const ArrayParams& p,
                                    double beta, const EdgeThresholds& thr,
                                    double gap_factor, int nu_max) {
    const int n = spec.dim();
    const int depth = static_cast<int>(std::ceil(thr.depth_frac * n));
    const double pair_tol = thr.pairing_tol > 0 ? thr.pairing_tol : 1e-6 * p.gamma0;

    WellAnalysis wa;
    std::vector<char> edgecand(n, 0);
    for (int i = 0; i < n; ++i) {
        if (boundary_weight(spec.vectors.col(i), depth) > thr.boundary_weight_min &&
            ipr(spec.vectors.col(i)) > thr.ipr_factor / n) {
            edgecand[i] = 1;
            wa.edge_candidates.push_back(i);
        }
    }

    const SubradiantSet win = select_subradiant(spec, SubradiantCriterion::by_count(n / 2));
    for (int i : win.indices)
        if (!edgecand[i]) wa.window.push_back(i);  // keeps the (Re, index) order

    std::vector<double> ew(wa.window.size());
    for (size_t k = 0; k < wa.window.size(); ++k) ew[k] = spec.values[wa.window[k]].real();

    std::vector<double> sec_all;
    for (int i = 0; i < n; ++i)
        if (spec.values[i].real() < 0) sec_all.push_back(spec.values[i].real());
    std::sort(sec_all.begin(), sec_all.end());
    wa.sector_size = static_cast<int>(sec_all.size());

    const BandSegmentation coarse = segment_bands(ew, gap_factor, n, degeneracy_floor(ew));
    const auto [a, b] = coarse.bands.back();  // topmost band: the trapped-well complex
    wa.complex_range = {a, b};

    const std::vector<double> cew(ew.begin() + a, ew.begin() + b + 1);
    const BandSegmentation fine = segment_bands(cew, gap_factor, n, degeneracy_floor(cew));
    for (const auto& [fs, fe] : fine.bands) wa.fine_bands.emplace_back(a + fs, a + fe);

    for (size_t gi = 0; gi + 1 < fine.bands.size(); ++gi) {
        const double lo = cew[fine.bands[gi].second];
        const double hi = cew[fine.bands[gi + 1].first];
        GapReport rep;
        rep.gap.lower = lo;
        rep.gap.upper = hi;
        rep.gap.width = hi - lo;
        rep.gap.midpoint = 0.5 * (lo + hi);
        const auto nb = std::upper_bound(sec_all.begin(), sec_all.end(), lo + 1e-18) -
                        sec_all.begin();
        rep.gap.rho = wa.sector_size > 0 ? double(nb) / wa.sector_size : 0.0;
        rep.label = gap_label(rep.gap.rho, beta, nu_max, 2.0 / n);

        for (int i = 0; i < n; ++i)
            if (lo < spec.values[i].real() && spec.values[i].real() < hi)
                rep.in_gap.push_back(i);
        std::sort(rep.in_gap.begin(), rep.in_gap.end(), [&](int i, int j) {
            if (spec.values[i].real() != spec.values[j].real())
                return spec.values[i].real() < spec.values[j].real();
            return i < j;
        });

        int npairs = 0;
        size_t x = 0;
        while (x + 1 < rep.in_gap.size()) {
            const int i = rep.in_gap[x], j = rep.in_gap[x + 1];
            const double split = std::abs(spec.values[j].real() - spec.values[i].real());
            if (split < pair_tol) {
                ++npairs;
                if (npairs == 1) {
                    CMat s(n, 2);
                    s.col(0) = spec.vectors.col(i);
                    s.col(1) = spec.vectors.col(j);
                    const Eigen::Matrix2cd bm = s.adjoint() * s;
                    CMat pl = s, pr = s;
                    pl.block(depth, 0, n - depth, 2).setZero();
                    pr.block(0, 0, n - depth, 2).setZero();
                    rep.pair_split = split;
                    rep.pair_bw_left = top_pencil_value(s.adjoint() * pl, bm);
                    rep.pair_bw_right = top_pencil_value(s.adjoint() * pr, bm);
                    rep.pair_a = i;
                    rep.pair_b = j;
                }
                x += 2;
            } else {
                ++x;
            }
        }
        rep.pair_found = npairs == 1;
        wa.gaps.push_back(std::move(rep));
    }
    return wa;
}

std::optional<int> butterfly_band_count(const Spectrum& spec, double gap_factor) {
    const int n = spec.dim();
    const SubradiantSet win = select_subradiant(spec, SubradiantCriterion::by_count(n / 2));
    std::vector<double> ew(win.indices.size());
    for (size_t k = 0; k < win.indices.size(); ++k) ew[k] = spec.values[win.indices[k]].real();
    if (ew.size() < 3) return std::nullopt;
    double mean_sp = (ew.back() - ew.front()) / (double(ew.size()) - 1.0);
    const BandSegmentation seg = segment_bands(ew, gap_factor, n, 1e-4 * mean_sp);
    if (seg.bands.size() < 3) return std::nullopt;
    std::vector<double> dn;
    for (size_t k = 0; k + 2 < seg.bands.size(); ++k) {
        const int d = seg.bands[k + 1].second - seg.bands[k].second;
        if (d >= 3) dn.push_back(d);
    }
    if (dn.empty()) return std::nullopt;
    return static_cast<int>(std::lround(double(n) / (median_of(std::move(dn)) + 1.0)));
}

static double series_cov(const std::vector<double>& s) {
    if (s.size() < 2) return 99.0;
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= s.size();
    if (!(mean > 0)) return 99.0;
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    return std::sqrt(var / s.size()) / mean;
}

TransitionPoint transition_diagnostics(const Spectrum& spec, const ArrayParams& p,
                                       double beta, int n_bands) {
    const int n = spec.dim();
    const int r = static_cast<int>(std::lround(n * beta));
    if (r < 2) throw validation_error("transition diagnostics need round(N*beta) >= 2");

    const SubradiantSet win = select_subradiant(spec, SubradiantCriterion::by_count(n / 2));
    std::vector<int> sector;
    for (int i : win.indices)
        if (spec.values[i].real() < 0) sector.push_back(i);
    std::sort(sector.begin(), sector.end(), [&](int i, int j) {
        if (spec.values[i].real() != spec.values[j].real())
            return spec.values[i].real() > spec.values[j].real();
        return i < j;
    });
    const int ns = static_cast<int>(sector.size());
    if (ns < n_bands * r + 4) throw too_few_levels("sector too small for band diagnostics");

    TransitionPoint tp;
    tp.eta = p.eta;
    const std::vector<int> sizes = default_box_sizes(n);

    // cut each nominal band edge at the largest local spacing: the top band can
    // run one state short of r, and a rigid slice pollutes the spacing series
    std::vector<int> cuts;
    int prev = 0;
    for (int b = 1; b <= n_bands; ++b) {
        const int lo = std::max(b * r - 3, prev + 1);
        const int hi = std::min(b * r + 3, ns - 1);
        int best = lo;
        double best_gap = -1.0;
        for (int c = lo; c <= hi; ++c) {
            const double g = spec.values[sector[c - 1]].real() - spec.values[sector[c]].real();
            if (g > best_gap) {
                best_gap = g;
                best = c;
            }
        }
        cuts.push_back(best);
        prev = best;
    }

    int start = 0;
    for (int b = 0; b < n_bands; ++b) {
        std::vector<int> band(sector.begin() + start, sector.begin() + cuts[b]);
        tp.band_ranges.emplace_back(start, cuts[b]);
        tp.band_d2.push_back(mean_band_d2(spec, band, sizes));
        start = cuts[b];
    }

    std::vector<double> top(3 * r);
    for (int k = 0; k < 3 * r; ++k) top[k] = spec.values[sector[k]].real();
    const SpacingSeries ss = level_spacings(std::move(top));
    tp.cov_eo = series_cov(ss.e_o);
    tp.cov_oe = series_cov(ss.o_e);
    return tp;
}

} // namespace wqed
