#pragma once
#include <optional>
#include "wqed/spectral.hpp"

namespace wqed {

struct SpacingSeries {
    std::vector<double> e_o;       // E_2 - E_1, E_4 - E_3, ...
    std::vector<double> o_e;       // E_3 - E_2, E_5 - E_4, ...
    std::vector<double> energies;  // sorted ascending
};

struct MultifractalResult {
    double q = 0.0;
    double alpha_q = 0.0;
    double f_alpha = 0.0;
    double tau_q = 0.0;
    double d_q = 0.0;
    double fit_r2 = 0.0;
    std::vector<int> box_sizes;
};

struct GapLabel {
    double rho = 0.0;
    int mu = 0;
    int nu = 0;
    double residual = 0.0;
};

enum class EdgeSide { Left, Right, Both };

struct EdgeStateRecord {
    int index = -1;
    double ipr = 0.0;
    double boundary_weight = 0.0;
    EdgeSide side = EdgeSide::Both;
    int partner = -1;  // -1 when unpaired
    int gap = -1;      // which segmentation gap hosts it
};

struct EdgeThresholds {
    double boundary_weight_min = 0.5;
    double depth_frac = 0.05;      // boundary depth = ceil(depth_frac * N)
    double ipr_factor = 3.0;       // edge requires ipr > ipr_factor / N
    double pairing_tol = 0.0;      // absolute; callers default to 1e-6 * gamma0
};

double ipr(const CVec& state);
double boundary_weight(const CVec& state, int depth);

SpacingSeries level_spacings(std::vector<double> energies);

MultifractalResult fractal_dimensions(const CVec& state, double q,
                                      const std::vector<int>& box_sizes);

// {floor(N/2^s), s = 1..floor(log2 N)-2}
std::vector<int> default_box_sizes(int n);

double mean_band_d2(const Spectrum& spec, const std::vector<int>& band,
                    const std::vector<int>& box_sizes);

// Diophantine solve rho = mu + nu*beta over nu in [-nu_max, nu_max]\{0},
// mu = round(rho - nu*beta); smallest residual wins, ties to smaller |nu|.
std::optional<GapLabel> gap_label(double rho, double beta, int nu_max, double tol);

std::vector<EdgeStateRecord> detect_edge_states(const Spectrum& spec,
                                                const BandSegmentation& seg,
                                                const EdgeThresholds& thr);

} // namespace wqed
