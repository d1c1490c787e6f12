#pragma once
#include <optional>
#include "wqed/analysis.hpp"
#include "wqed/io.hpp"

namespace wqed {

enum class ModSource { Analytic, Extracted, Explicit };

struct ModulationConfig {
    ModSource source = ModSource::Extracted;
    std::optional<double> v_re, v_im, beta, theta;  // all three required for Explicit
};

struct Thresholds {
    double gap_factor = 5.0;
    int subradiant_count = 0;       // 0 = floor(N/2)
    double gamma_cut = 0.0;         // 0 = count-based selection
    double boundary_weight_min = 0.5;
    double boundary_depth_frac = 0.05;
    double ipr_factor = 3.0;
    double pairing_tol_factor = 1e-6;  // times gamma0
    double residual_tol = 1e-8;
    int nu_max = 30;
    double q = 2.0;                 // moment order for fractal tables
    std::vector<int> box_sizes;     // empty = default geometric set
};

struct Grids {
    std::vector<double> eta_over_phi;  // default {0.1,0.25,0.5,0.75,1.0,1.25,1.5}
    std::vector<double> theta;         // default 64 uniform on [0,2pi) + physical pair
    std::vector<double> beta;          // default 200 uniform on (0, 0.25]
};

struct RunConfig {
    std::string task;
    ArrayParams params;
    Grids grids;
    ModulationConfig modulation;
    Thresholds thresholds;
    std::string output_dir = "out";
    std::string input;             // matrix dump path for the analyze task
    bool dump_matrices = false;
    bool force = false;
    int threads = 1;

    EdgeThresholds edge_thresholds() const {
        return {thresholds.boundary_weight_min, thresholds.boundary_depth_frac,
                thresholds.ipr_factor, thresholds.pairing_tol_factor * params.gamma0};
    }
    json echo() const;  // fully resolved config, defaults filled
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const json& j);  // same validation, no file involved

} // namespace wqed
