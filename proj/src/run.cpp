#include "wqed/run.hpp"
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

namespace wqed {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int nw = std::min(threads, n);
    if (nw <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

namespace {

const std::vector<std::string> kSpectrumCols = {"index",          "re_energy", "im_energy",
                                                "decay",          "ipr",       "boundary_weight",
                                                "band_id",        "is_edge"};

int edge_depth(const RunConfig& cfg, int n) {
    return static_cast<int>(std::ceil(cfg.thresholds.boundary_depth_frac * n));
}

// spectrum rows are emitted in eigenvalue order (ascending Re), so the plain
// band segmentation maps positionally onto the rows
Table spectrum_table(std::string name, const Spectrum& spec, const RunConfig& cfg,
                     const std::vector<Gap>* protocol_gaps) {
    const int n = spec.dim();
    Table t;
    t.name = std::move(name);
    t.columns = kSpectrumCols;

    std::vector<double> re(n);
    for (int i = 0; i < n; ++i) re[i] = spec.values[i].real();
    const BandSegmentation seg = segment_bands(re, cfg.thresholds.gap_factor, n);
    std::vector<long long> band_of(n, 0);
    for (size_t b = 0; b < seg.bands.size(); ++b)
        for (int i = seg.bands[b].first; i <= seg.bands[b].second; ++i)
            band_of[i] = static_cast<long long>(b);

    BandSegmentation edge_seg = seg;
    if (protocol_gaps) edge_seg.gaps = *protocol_gaps;
    std::set<int> edge;
    for (const auto& r : detect_edge_states(spec, edge_seg, cfg.edge_thresholds()))
        edge.insert(r.index);

    const int depth = edge_depth(cfg, n);
    for (int i = 0; i < n; ++i) {
        t.add_row({static_cast<long long>(i), spec.values[i].real(), spec.values[i].imag(),
                   spec.decay(i), ipr(spec.vectors.col(i)),
                   boundary_weight(spec.vectors.col(i), depth), band_of[i],
                   static_cast<long long>(edge.count(i) ? 1 : 0)});
    }
    return t;
}

Table gaps_table(std::string name, const WellAnalysis& wa) {
    Table t;
    t.name = std::move(name);
    t.columns = {"gap_index", "lower",    "upper",      "width",         "midpoint",
                 "rho",       "labeled",  "mu",         "nu",            "residual",
                 "n_in_gap",  "pair",     "pair_split", "pair_bw_left",  "pair_bw_right"};
    for (size_t g = 0; g < wa.gaps.size(); ++g) {
        const GapReport& r = wa.gaps[g];
        t.add_row({static_cast<long long>(g), r.gap.lower, r.gap.upper, r.gap.width,
                   r.gap.midpoint, r.gap.rho, static_cast<long long>(r.label ? 1 : 0),
                   static_cast<long long>(r.label ? r.label->mu : 0),
                   static_cast<long long>(r.label ? r.label->nu : 0),
                   r.label ? r.label->residual : 0.0, static_cast<long long>(r.in_gap.size()),
                   static_cast<long long>(r.pair_found ? 1 : 0), r.pair_split, r.pair_bw_left,
                   r.pair_bw_right});
    }
    return t;
}

std::vector<Gap> protocol_gaps_of(const WellAnalysis& wa) {
    std::vector<Gap> gaps;
    for (const auto& r : wa.gaps) gaps.push_back(r.gap);
    return gaps;
}

double lattice_beta(const ArrayParams& p) { return solve_k_omega(p) * p.spacing / M_PI; }

OutputSet run_h0_spectrum(const RunConfig& cfg) {
    OutputSet out;
    const ComplexMatrix h0 = build_h0(cfg.params);
    const Spectrum spec = eigendecompose(h0, cfg.thresholds.residual_tol);
    out.tables.push_back(spectrum_table("spectrum", spec, cfg, nullptr));
    if (cfg.dump_matrices) out.matrices.push_back(h0);
    return out;
}

OutputSet run_full_ed(const RunConfig& cfg) {
    OutputSet out;
    const ComplexMatrix h = build_full(cfg.params, TruncationPolicy{});
    const Spectrum spec = eigendecompose(h, cfg.thresholds.residual_tol);
    out.tables.push_back(spectrum_table("spectrum", spec, cfg, nullptr));

    const int n = cfg.params.n_sites;
    Table sub;
    sub.name = "subradiant";
    sub.columns = {"index", "re_energy", "im_energy", "decay", "zero_phonon_weight"};
    std::vector<int> keep;
    for (int i = 0; i < spec.dim(); ++i)
        if (spec.vectors.col(i).head(n).squaredNorm() > 0.5) keep.push_back(i);
    std::sort(keep.begin(), keep.end(), [&](int a, int b) {
        if (spec.decay(a) != spec.decay(b)) return spec.decay(a) < spec.decay(b);
        return a < b;
    });
    for (int i : keep)
        sub.add_row({static_cast<long long>(i), spec.values[i].real(), spec.values[i].imag(),
                     spec.decay(i), spec.vectors.col(i).head(n).squaredNorm()});
    out.tables.push_back(std::move(sub));
    if (cfg.dump_matrices) out.matrices.push_back(h);
    return out;
}

json swt_meta(const SwtResult& swt, const ExtractedModulation& em, double beta, double k_omega) {
    json meta;
    meta["validity_ratio"] = swt.validity_ratio;
    meta["near_resonance"] = swt.near_resonance;
    meta["v_re"] = em.collapsed.v.real();
    meta["v_im"] = em.collapsed.v.imag();
    meta["beta"] = em.collapsed.beta;
    meta["theta"] = em.collapsed.theta;
    meta["stripe_offset"] = em.stripe_offset;
    meta["stripe_ratio"] = std::isfinite(em.stripe_ratio) ? em.stripe_ratio : -1.0;
    meta["lattice_beta"] = beta;
    meta["k_omega"] = k_omega;
    return meta;
}

OutputSet run_swt(const RunConfig& cfg) {
    OutputSet out;
    const ArrayParams& p = cfg.params;
    const SwtResult swt = swt_hamiltonian(p);
    const Spectrum spec = eigendecompose(swt.h_prime, cfg.thresholds.residual_tol);
    const ExtractedModulation em = extract_modulation(swt, p);
    const double k_omega = solve_k_omega(p);
    const double beta = k_omega * p.spacing / M_PI;
    const WellAnalysis wa = analyze_well_structure(spec, p, beta, cfg.edge_thresholds(),
                                                   cfg.thresholds.gap_factor,
                                                   cfg.thresholds.nu_max);
    const json meta = swt_meta(swt, em, beta, k_omega);

    const std::vector<Gap> pg = protocol_gaps_of(wa);
    Table ts = spectrum_table("spectrum", spec, cfg, &pg);
    ts.meta = meta;
    out.tables.push_back(std::move(ts));

    const int n = p.n_sites;
    Table tm;
    tm.name = "modulation";
    tm.columns = {"k_index", "q", "re_v", "im_v", "v_abs", "theta", "re_deps", "im_deps"};
    tm.meta = meta;
    for (int j = 0; j < n; ++j) {
        double q = 2.0 * M_PI * j / (n * p.spacing);
        if (2 * j > n) q -= 2.0 * M_PI / p.spacing;
        tm.add_row({static_cast<long long>(j), q, em.v_k[j].real(), em.v_k[j].imag(),
                    std::abs(em.v_k[j]), em.theta_k[j], em.delta_eps_k[j].real(),
                    em.delta_eps_k[j].imag()});
    }
    out.tables.push_back(std::move(tm));

    Table tg = gaps_table("gaps", wa);
    tg.meta = meta;
    out.tables.push_back(std::move(tg));

    if (cfg.dump_matrices) {
        out.matrices.push_back(swt.h_prime);
        out.matrices.push_back(ComplexMatrix{swt.delta, "delta"});
    }
    return out;
}

struct ResolvedModulation {
    cplx v;
    double beta = 0.0;
    std::optional<double> theta;  // empty: run the physical pair
};

ResolvedModulation resolve_modulation(const RunConfig& cfg) {
    ResolvedModulation rm;
    switch (cfg.modulation.source) {
        case ModSource::Explicit:
            rm.v = cplx(*cfg.modulation.v_re, *cfg.modulation.v_im);
            rm.beta = cfg.modulation.beta ? *cfg.modulation.beta : 0.0;
            rm.theta = cfg.modulation.theta;
            return rm;
        case ModSource::Analytic: {
            const AnalyticEstimates est = analytic_estimates(cfg.params);
            rm.v = std::polar(est.v_modulus, est.v_phase);
            rm.beta = est.beta;
            break;
        }
        case ModSource::Extracted: {
            const SwtResult swt = swt_hamiltonian(cfg.params);
            const ExtractedModulation em = extract_modulation(swt, cfg.params);
            rm.v = em.collapsed.v;
            rm.beta = em.collapsed.beta;
            break;
        }
    }
    if (cfg.modulation.v_re && cfg.modulation.v_im)
        rm.v = cplx(*cfg.modulation.v_re, *cfg.modulation.v_im);
    if (cfg.modulation.beta) rm.beta = *cfg.modulation.beta;
    rm.theta = cfg.modulation.theta;
    return rm;
}

void append_heff_run(OutputSet& out, const RunConfig& cfg, const ResolvedModulation& rm,
                     double theta, const std::string& suffix, int physical_index) {
    const ArrayParams& p = cfg.params;
    const Modulation mod{rm.v, rm.beta, theta};
    const ComplexMatrix h = build_heff(p, mod);
    const Spectrum spec = eigendecompose(h, cfg.thresholds.residual_tol);
    const WellAnalysis wa = analyze_well_structure(spec, p, rm.beta, cfg.edge_thresholds(),
                                                   cfg.thresholds.gap_factor,
                                                   cfg.thresholds.nu_max);
    json meta;
    meta["v_re"] = rm.v.real();
    meta["v_im"] = rm.v.imag();
    meta["beta"] = rm.beta;
    meta["theta"] = theta;
    if (physical_index >= 0) meta["physical_index"] = physical_index;

    const std::vector<Gap> pg = protocol_gaps_of(wa);
    Table ts = spectrum_table("spectrum" + suffix, spec, cfg, &pg);
    ts.meta = meta;
    out.tables.push_back(std::move(ts));
    Table tg = gaps_table("gaps" + suffix, wa);
    tg.meta = meta;
    out.tables.push_back(std::move(tg));
    if (cfg.dump_matrices) {
        ComplexMatrix dump = h;
        dump.label += suffix;
        out.matrices.push_back(std::move(dump));
    }
}

OutputSet run_heff(const RunConfig& cfg) {
    OutputSet out;
    const ResolvedModulation rm = resolve_modulation(cfg);
    if (!(rm.beta > 0.0 && rm.beta < 1.0))
        throw validation_error("heff requires a modulation wavenumber beta in (0, 1)");
    if (rm.theta) {
        append_heff_run(out, cfg, rm, *rm.theta, "", -1);
    } else {
        const auto thetas = physical_thetas(cfg.params, rm.beta);
        for (int n = 0; n < 2; ++n)
            append_heff_run(out, cfg, rm, thetas[n], "_theta" + std::to_string(n), n);
    }
    return out;
}

// one sweep point worth of rows for each sweep table, or a failure marker
struct PointRows {
    std::vector<std::vector<Cell>> sweep, extra;
    std::string status = "ok";
};

void mark_failure(PointRows& pr, const std::exception& e) {
    pr.sweep.clear();
    pr.extra.clear();
    const auto* err = dynamic_cast<const Error*>(&e);
    pr.status = err ? err->kind : "Error";
}

OutputSet run_sweep_eta(const RunConfig& cfg) {
    const ArrayParams& p = cfg.params;
    // the second-order correction scales exactly as eta^2, so the expensive
    // contraction is done once at unit coupling and rescaled per grid point
    ArrayParams pu = p;
    pu.eta = 1.0;
    const SwtResult unit = swt_hamiltonian(pu);
    const ComplexMatrix h0 = build_h0(p);
    CMat c_unit = unit.basis.right_vectors * unit.delta * unit.basis.right_vectors.transpose();
    c_unit = 0.5 * (c_unit + c_unit.transpose().eval());
    const double beta = lattice_beta(p);
    const int n = p.n_sites;
    const int npts = static_cast<int>(cfg.grids.eta_over_phi.size());

    std::vector<PointRows> pts(npts);
    parallel_for(npts, cfg.threads, [&](int g) {
        PointRows& pr = pts[g];
        const double ratio = cfg.grids.eta_over_phi[g];
        const double eta = ratio * p.phi;
        try {
            ArrayParams pe = p;
            pe.eta = eta;
            CMat hp = (1.0 - eta * eta) * h0.m + (eta * eta) * c_unit;
            hp.diagonal().array() += cplx(0.0, -0.5 * eta * eta * p.gamma0);
            const Spectrum spec =
                eigendecompose(ComplexMatrix{hp, "hprime"}, cfg.thresholds.residual_tol);
            const SubradiantSet sel =
                select_subradiant(spec, SubradiantCriterion::by_count(n / 2));
            for (int i : sel.indices)
                pr.sweep.push_back({static_cast<long long>(g), ratio, eta,
                                    static_cast<long long>(i), spec.values[i].real(),
                                    spec.values[i].imag(), spec.decay(i), std::string("ok")});
            const TransitionPoint tp = transition_diagnostics(spec, pe, beta);
            for (size_t b = 0; b < tp.band_d2.size(); ++b)
                pr.extra.push_back({static_cast<long long>(g), ratio, eta,
                                    static_cast<long long>(b), tp.band_d2[b],
                                    static_cast<long long>(tp.band_ranges[b].first),
                                    static_cast<long long>(tp.band_ranges[b].second), tp.cov_eo,
                                    tp.cov_oe, tp.cov(), std::string("ok")});
        } catch (const std::exception& e) {
            mark_failure(pr, e);
        }
    });

    OutputSet out;
    Table sweep;
    sweep.name = "sweep";
    sweep.columns = {"grid_index", "eta_over_phi", "eta", "index", "re_energy", "im_energy",
                     "decay", "status"};
    Table bands;
    bands.name = "bands";
    bands.columns = {"grid_index", "eta_over_phi", "eta",    "band",   "d2_mean", "start",
                     "end",        "cov_eo",       "cov_oe", "cov",    "status"};
    sweep.meta["lattice_beta"] = beta;
    bands.meta["lattice_beta"] = beta;
    for (int g = 0; g < npts; ++g) {
        const double ratio = cfg.grids.eta_over_phi[g];
        const double eta = ratio * p.phi;
        if (pts[g].status != "ok") {
            sweep.add_row({static_cast<long long>(g), ratio, eta, -1LL, 0.0, 0.0, 0.0,
                           pts[g].status});
            bands.add_row({static_cast<long long>(g), ratio, eta, -1LL, 0.0, -1LL, -1LL, 0.0,
                           0.0, 0.0, pts[g].status});
            continue;
        }
        for (auto& r : pts[g].sweep) sweep.rows.push_back(std::move(r));
        for (auto& r : pts[g].extra) bands.rows.push_back(std::move(r));
    }
    out.tables.push_back(std::move(sweep));
    out.tables.push_back(std::move(bands));
    return out;
}

OutputSet run_sweep_theta(const RunConfig& cfg) {
    const ArrayParams& p = cfg.params;
    const ResolvedModulation rm = resolve_modulation(cfg);
    if (!(rm.beta > 0.0 && rm.beta < 1.0))
        throw validation_error("sweep-theta requires a modulation wavenumber beta in (0, 1)");
    const int n = p.n_sites;
    const int depth = edge_depth(cfg, n);

    const std::vector<std::string> cols = {"grid_index", "theta",     "is_physical", "index",
                                           "re_energy",  "im_energy", "decay",
                                           "boundary_weight", "status"};
    auto run_point = [&](double theta, long long g, long long physical, PointRows& pr) {
        try {
            const ComplexMatrix h = build_heff(p, Modulation{rm.v, rm.beta, theta});
            const Spectrum spec = eigendecompose(h, cfg.thresholds.residual_tol);
            for (int i = 0; i < n; ++i)
                pr.sweep.push_back({g, theta, physical, static_cast<long long>(i),
                                    spec.values[i].real(), spec.values[i].imag(), spec.decay(i),
                                    boundary_weight(spec.vectors.col(i), depth),
                                    std::string("ok")});
        } catch (const std::exception& e) {
            mark_failure(pr, e);
        }
    };

    const int npts = static_cast<int>(cfg.grids.theta.size());
    std::vector<PointRows> pts(npts);
    parallel_for(npts, cfg.threads,
                 [&](int g) { run_point(cfg.grids.theta[g], g, 0, pts[g]); });

    const auto phys = physical_thetas(p, rm.beta);
    std::vector<PointRows> ppts(2);
    for (int k = 0; k < 2; ++k) run_point(phys[k], k, 1, ppts[k]);

    OutputSet out;
    Table sweep;
    sweep.name = "sweep";
    sweep.columns = cols;
    Table physical;
    physical.name = "physical";
    physical.columns = cols;
    json meta;
    meta["v_re"] = rm.v.real();
    meta["v_im"] = rm.v.imag();
    meta["beta"] = rm.beta;
    meta["theta_physical"] = {phys[0], phys[1]};
    sweep.meta = meta;
    physical.meta = meta;

    auto flush = [](Table& t, std::vector<PointRows>& src, const std::vector<double>& grid,
                    long long is_physical) {
        for (size_t g = 0; g < src.size(); ++g) {
            if (src[g].status != "ok") {
                t.add_row({static_cast<long long>(g), grid[g], is_physical, -1LL, 0.0, 0.0, 0.0,
                           0.0, src[g].status});
                continue;
            }
            for (auto& r : src[g].sweep) t.rows.push_back(std::move(r));
        }
    };
    flush(sweep, pts, cfg.grids.theta, 0);
    const std::vector<double> pgrid = {phys[0], phys[1]};
    flush(physical, ppts, pgrid, 1);
    out.tables.push_back(std::move(sweep));
    out.tables.push_back(std::move(physical));
    return out;
}

OutputSet run_sweep_beta(const RunConfig& cfg) {
    const ArrayParams& p = cfg.params;
    const ResolvedModulation rm = resolve_modulation(cfg);
    const double theta = rm.theta ? *rm.theta : 0.0;
    const int n = p.n_sites;
    const int npts = static_cast<int>(cfg.grids.beta.size());

    std::vector<PointRows> pts(npts);
    parallel_for(npts, cfg.threads, [&](int g) {
        PointRows& pr = pts[g];
        const double beta = cfg.grids.beta[g];
        try {
            const ComplexMatrix h = build_heff(p, Modulation{rm.v, beta, theta});
            const Spectrum spec = eigendecompose(h, cfg.thresholds.residual_tol);
            for (int i = 0; i < n; ++i)
                pr.sweep.push_back({static_cast<long long>(g), beta, static_cast<long long>(i),
                                    spec.values[i].real(), spec.values[i].imag(), spec.decay(i),
                                    std::string("ok")});
            const auto bc = butterfly_band_count(spec, cfg.thresholds.gap_factor);
            pr.extra.push_back({static_cast<long long>(g), beta,
                                static_cast<long long>(bc ? *bc : -1), std::string("ok")});
        } catch (const std::exception& e) {
            mark_failure(pr, e);
        }
    });

    OutputSet out;
    Table sweep;
    sweep.name = "sweep";
    sweep.columns = {"grid_index", "beta", "index", "re_energy", "im_energy", "decay", "status"};
    Table counts;
    counts.name = "counts";
    counts.columns = {"grid_index", "beta", "band_count", "status"};
    json meta;
    meta["v_re"] = rm.v.real();
    meta["v_im"] = rm.v.imag();
    meta["theta"] = theta;
    sweep.meta = meta;
    counts.meta = meta;
    for (int g = 0; g < npts; ++g) {
        const double beta = cfg.grids.beta[g];
        if (pts[g].status != "ok") {
            sweep.add_row({static_cast<long long>(g), beta, -1LL, 0.0, 0.0, 0.0, pts[g].status});
            counts.add_row({static_cast<long long>(g), beta, -1LL, pts[g].status});
            continue;
        }
        for (auto& r : pts[g].sweep) sweep.rows.push_back(std::move(r));
        for (auto& r : pts[g].extra) counts.rows.push_back(std::move(r));
    }
    out.tables.push_back(std::move(sweep));
    out.tables.push_back(std::move(counts));
    return out;
}

OutputSet run_analyze(const RunConfig& cfg) {
    OutputSet out;
    const ComplexMatrix mat = read_matrix(cfg.input);
    const Spectrum spec = eigendecompose(mat, cfg.thresholds.residual_tol);
    const int n = spec.dim();
    out.tables.push_back(spectrum_table("spectrum", spec, cfg, nullptr));

    Table sp;
    sp.name = "spacings";
    sp.columns = {"series", "i", "value"};
    std::vector<double> re(n);
    for (int i = 0; i < n; ++i) re[i] = spec.values[i].real();
    const SpacingSeries ss = level_spacings(re);
    for (size_t i = 0; i < ss.e_o.size(); ++i)
        sp.add_row({std::string("e_o"), static_cast<long long>(i), ss.e_o[i]});
    for (size_t i = 0; i < ss.o_e.size(); ++i)
        sp.add_row({std::string("o_e"), static_cast<long long>(i), ss.o_e[i]});
    out.tables.push_back(std::move(sp));

    Table fr;
    fr.name = "fractal";
    fr.columns = {"index", "q", "d_q", "alpha_q", "f_alpha", "tau_q", "fit_r2"};
    const std::vector<int> sizes =
        cfg.thresholds.box_sizes.empty() ? default_box_sizes(n) : cfg.thresholds.box_sizes;
    for (int i = 0; i < n; ++i) {
        const MultifractalResult mf =
            fractal_dimensions(spec.vectors.col(i), cfg.thresholds.q, sizes);
        fr.add_row({static_cast<long long>(i), mf.q, mf.d_q, mf.alpha_q, mf.f_alpha, mf.tau_q,
                    mf.fit_r2});
    }
    out.tables.push_back(std::move(fr));
    return out;
}

OutputSet run_labels(const RunConfig& cfg) {
    OutputSet out;
    const ArrayParams& p = cfg.params;
    const SwtResult swt = swt_hamiltonian(p);
    const Spectrum spec = eigendecompose(swt.h_prime, cfg.thresholds.residual_tol);
    const double beta = lattice_beta(p);
    const WellAnalysis wa = analyze_well_structure(spec, p, beta, cfg.edge_thresholds(),
                                                   cfg.thresholds.gap_factor,
                                                   cfg.thresholds.nu_max);
    Table t;
    t.name = "labels";
    t.columns = {"gap_index", "rho", "labeled", "mu", "nu", "residual", "lower", "upper",
                 "width"};
    t.meta["lattice_beta"] = beta;
    t.meta["sector_size"] = wa.sector_size;
    for (size_t g = 0; g < wa.gaps.size(); ++g) {
        const GapReport& r = wa.gaps[g];
        t.add_row({static_cast<long long>(g), r.gap.rho,
                   static_cast<long long>(r.label ? 1 : 0),
                   static_cast<long long>(r.label ? r.label->mu : 0),
                   static_cast<long long>(r.label ? r.label->nu : 0),
                   r.label ? r.label->residual : 0.0, r.gap.lower, r.gap.upper, r.gap.width});
    }
    out.tables.push_back(std::move(t));
    return out;
}

} // namespace

OutputSet run_task(const RunConfig& config) {
    if (config.task == "h0-spectrum") return run_h0_spectrum(config);
    if (config.task == "full-ed") return run_full_ed(config);
    if (config.task == "swt") return run_swt(config);
    if (config.task == "heff") return run_heff(config);
    if (config.task == "sweep-eta") return run_sweep_eta(config);
    if (config.task == "sweep-theta") return run_sweep_theta(config);
    if (config.task == "sweep-beta") return run_sweep_beta(config);
    if (config.task == "analyze") return run_analyze(config);
    if (config.task == "labels") return run_labels(config);
    throw validation_error("unknown task '" + config.task + "'");
}

void run_and_write(const RunConfig& config) {
    const OutputSet out = run_task(config);
    write_outputs(out, config.echo(), config.task, config.output_dir, config.force);
}

} // namespace wqed
