#pragma once
#include "wqed/analysis.hpp"
#include "wqed/swt.hpp"

namespace wqed {

// Composite spectrum diagnostics shared by the swt/heff tasks and the
// regression suite. All conventions here are deliberately parameter-free
// (scale-free filters, fixed fractions of N) so reruns are reproducible.

struct GapReport {
    Gap gap;
    std::optional<GapLabel> label;
    std::vector<int> in_gap;      // spectrum indices strictly inside the gap
    bool pair_found = false;
    double pair_split = 0.0;
    double pair_bw_left = 0.0;    // boundary weight of the left-localized span vector
    double pair_bw_right = 0.0;
    int pair_a = -1, pair_b = -1;
};

/// Two-level segmentation of a quasiperiodic spectrum: the least-decaying
/// floor(N/2) states are segmented after removing boundary-localized
/// candidates, the topmost coarse band is the trapped-well complex, and a
/// fine pass inside it yields the observable gaps with filling factors
/// counted over the full Re < 0 sector.
struct WellAnalysis {
    std::vector<int> window;          // least-decaying states, ascending Re, edge candidates removed
    std::vector<int> edge_candidates; // boundary-localized states excluded from segmentation
    std::pair<int, int> complex_range;  // index range of the well complex inside `window`
    std::vector<std::pair<int, int>> fine_bands;  // ranges inside `window`
    std::vector<GapReport> gaps;
    int sector_size = 0;              // count of Re < 0 states
};

WellAnalysis analyze_well_structure(const Spectrum& spec, const ArrayParams& p,
                                    double beta, const EdgeThresholds& thr,
                                    double gap_factor = 5.0, int nu_max = 30);

// Band count of a modulated spectrum at first-order rational approximation:
// median index distance between detected gaps in the least-decaying floor(N/2)
// states gives the states-per-band; open boundaries clip one well per period,
// so the trapped multiplet runs one state short of the bulk period.
std::optional<int> butterfly_band_count(const Spectrum& spec, double gap_factor = 5.0);

// Criterion used by the eta sweep (multifractal transition): bands of width
// r = round(N*beta) cut at the largest spacing within +-3 of each nominal
// boundary, mean box-counting D2 per band, and the even-odd/odd-even spacing
// coefficient of variation over the top 3r sector states.
struct TransitionPoint {
    double eta = 0.0;
    std::vector<double> band_d2;     // one mean D2 per analyzed band, top first
    std::vector<std::pair<int,int>> band_ranges;  // into the descending-Re sector list
    double cov_eo = 0.0;
    double cov_oe = 0.0;
    double cov() const { return cov_eo > cov_oe ? cov_eo : cov_oe; }
};

TransitionPoint transition_diagnostics(const Spectrum& spec, const ArrayParams& p,
                                       double beta, int n_bands = 3);

} // namespace wqed
