#include "wqed/spectral.hpp"
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#define LAPACK_COMPLEX_CPP
#include <complex>
#include <lapacke.h>

extern "C" void openblas_set_num_threads(int);

namespace wqed {

static constexpr int kDimCap = 20000;

static void pin_blas_threads() {
    // determinism contract: identical results across runs and worker counts
    static std::once_flag once;
    std::call_once(once, [] { openblas_set_num_threads(1); });
}

Spectrum eigendecompose(const ComplexMatrix& mat, double tol) {
    pin_blas_threads();
    const int n = mat.dim();
    if (n < 1 || mat.m.rows() != mat.m.cols())
        throw validation_error("eigendecompose needs a nonempty square matrix");
    if (n > kDimCap)
        throw validation_error("matrix dimension exceeds the configured cap");
    if (!mat.m.allFinite())
        throw validation_error("matrix has non-finite entries");

    CMat a = mat.m;  // zgeev overwrites its input
    CVec w(n);
    CMat vr(n, n);
    const lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'V', n,
        reinterpret_cast<lapack_complex_double*>(a.data()), n,
        reinterpret_cast<lapack_complex_double*>(w.data()),
        nullptr, 1,
        reinterpret_cast<lapack_complex_double*>(vr.data()), n);
    if (info != 0) {
        std::ostringstream err;
        if (info > 0)
            err << info << " eigenvalue(s) failed to converge (" << mat.label << ")";
        else
            err << "invalid argument " << -info << " to the eigensolver";
        throw convergence_failure(err.str());
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (w[i].real() != w[j].real()) return w[i].real() < w[j].real();
        if (w[i].imag() != w[j].imag()) return w[i].imag() < w[j].imag();
        return i < j;
    });

    Spectrum spec;
    spec.source_label = mat.label;
    spec.values.resize(n);
    spec.vectors.resize(n, n);
    for (int j = 0; j < n; ++j) {
        spec.values[j] = w[order[j]];
        CVec v = vr.col(order[j]);
        v /= v.norm();
        // phase convention: largest-magnitude component real positive
        int kmax = 0;
        double amax = -1.0;
        for (int i = 0; i < n; ++i) {
            const double ai = std::abs(v[i]);
            if (ai > amax) { amax = ai; kmax = i; }
        }
        v *= std::conj(v[kmax]) / std::abs(v[kmax]);
        spec.vectors.col(j) = v;
    }

    const double scale = tol * mat.m.norm();  // Frobenius
    CMat resid = mat.m * spec.vectors;
    spec.residuals.resize(n);
    for (int j = 0; j < n; ++j) {
        spec.residuals[j] = (resid.col(j) - spec.values[j] * spec.vectors.col(j)).norm();
        if (!(spec.residuals[j] <= scale)) {
            std::ostringstream err;
            err << "eigenpair " << j << " residual " << spec.residuals[j]
                << " exceeds " << scale << " (" << mat.label << ")";
            throw residual_exceeded(err.str());
        }
    }
    return spec;
}

SubradiantSet select_subradiant(const Spectrum& spec, const SubradiantCriterion& crit) {
    const int n = spec.dim();
    std::vector<int> sel;
    if (crit.kind == SubradiantCriterion::Count) {
        if (crit.count <= 0) throw empty_selection("count-based selection needs count >= 1");
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int i, int j) {
            if (spec.decay(i) != spec.decay(j)) return spec.decay(i) < spec.decay(j);
            return i < j;
        });
        const int m = std::min(crit.count, n);
        sel.assign(order.begin(), order.begin() + m);
    } else {
        for (int i = 0; i < n; ++i)
            if (spec.decay(i) < crit.gamma_cut) sel.push_back(i);
        if (sel.empty()) throw empty_selection("no state below the decay threshold");
    }
    std::sort(sel.begin(), sel.end(), [&](int i, int j) {
        if (spec.values[i].real() != spec.values[j].real())
            return spec.values[i].real() < spec.values[j].real();
        return i < j;
    });
    return {std::move(sel), crit};
}

static double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BandSegmentation segment_bands(const std::vector<double>& energies, double gap_factor,
                               int n_total, double min_spacing) {
    if (n_total < 1) throw validation_error("segment_bands needs n_total >= 1");
    BandSegmentation seg;
    const int n = static_cast<int>(energies.size());
    if (n == 0) return seg;
    std::vector<double> sp(n - 1), kept;
    for (int i = 0; i + 1 < n; ++i) {
        if (energies[i + 1] < energies[i])
            throw validation_error("segment_bands input must be sorted ascending");
        sp[i] = energies[i + 1] - energies[i];
        if (sp[i] >= min_spacing) kept.push_back(sp[i]);
    }
    seg.median_spacing = median_of(kept);
    int start = 0;
    for (int i = 0; i + 1 < n; ++i) {
        if (sp[i] > gap_factor * seg.median_spacing) {
            seg.bands.emplace_back(start, i);
            Gap g;
            g.lower = energies[i];
            g.upper = energies[i + 1];
            g.width = g.upper - g.lower;
            g.midpoint = 0.5 * (g.lower + g.upper);
            g.rho = static_cast<double>(i + 1) / n_total;
            seg.gaps.push_back(g);
            start = i + 1;
        }
    }
    seg.bands.emplace_back(start, n - 1);
    return seg;
}

} // namespace wqed
