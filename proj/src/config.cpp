#include "wqed/config.hpp"
#include "wqed/errors.hpp"
#include <algorithm>
#include <cmath>

namespace wqed {

static const std::vector<std::string> kTasks = {
    "h0-spectrum", "full-ed", "swt",        "heff",  "sweep-eta",
    "sweep-theta", "sweep-beta", "analyze", "labels"};

static int levenshtein(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

static std::string closest(const std::string& key, const std::vector<std::string>& options) {
    std::string best;
    int best_d = 1 << 20;
    for (const auto& o : options) {
        const int d = levenshtein(key, o);
        if (d < best_d) {
            best_d = d;
            best = o;
        }
    }
    const int limit = std::max<int>(2, static_cast<int>(key.size()) / 2);
    return best_d <= limit ? best : std::string();
}

static void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
        std::string msg = "unknown key '" + key + "' in " + where;
        const std::string hint = closest(key, allowed);
        if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
        throw validation_error(msg);
    }
}

static double get_double(const json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number())
        throw validation_error(std::string("field '") + key + "' must be a number");
    return j[key].get<double>();
}

static long long get_int(const json& j, const char* key, long long dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number_integer())
        throw validation_error(std::string("field '") + key + "' must be an integer");
    return j[key].get<long long>();
}

static bool get_bool(const json& j, const char* key, bool dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_boolean())
        throw validation_error(std::string("field '") + key + "' must be a boolean");
    return j[key].get<bool>();
}

static std::string get_string(const json& j, const char* key, const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_string())
        throw validation_error(std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
}

static std::vector<double> get_double_array(const json& j, const char* key) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array())
        throw validation_error(std::string("field '") + key + "' must be an array of numbers");
    for (const auto& v : j[key]) {
        if (!v.is_number())
            throw validation_error(std::string("field '") + key + "' must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

static std::optional<double> get_opt_double(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number())
        throw validation_error(std::string("field '") + key + "' must be a number");
    return j[key].get<double>();
}

std::vector<double> default_eta_over_phi() { return {0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5}; }

std::vector<double> default_theta_grid() {
    std::vector<double> t(64);
    for (int i = 0; i < 64; ++i) t[i] = 2.0 * M_PI * i / 64.0;
    return t;
}

std::vector<double> default_beta_grid() {
    std::vector<double> b(200);
    for (int j = 0; j < 200; ++j) b[j] = 0.25 * (j + 1) / 200.0;
    return b;
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw validation_error("config root must be a JSON object");
    check_keys(j, {"task", "params", "grids", "modulation", "thresholds", "output_dir", "input",
                   "dump_matrices", "force", "threads"},
               "config");

    RunConfig c;
    if (!j.contains("task")) throw validation_error("missing required field 'task'");
    c.task = get_string(j, "task", "");
    if (std::find(kTasks.begin(), kTasks.end(), c.task) == kTasks.end()) {
        std::string msg = "unknown task '" + c.task + "'";
        const std::string hint = closest(c.task, kTasks);
        if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
        throw validation_error(msg);
    }

    if (j.contains("params")) {
        const json& p = j["params"];
        if (!p.is_object()) throw validation_error("field 'params' must be an object");
        check_keys(p, {"n_sites", "gamma0", "omega", "phi", "eta", "spacing"}, "params");
        c.params.n_sites = static_cast<int>(get_int(p, "n_sites", c.params.n_sites));
        c.params.gamma0 = get_double(p, "gamma0", c.params.gamma0);
        c.params.omega = get_double(p, "omega", c.params.omega);
        c.params.phi = get_double(p, "phi", c.params.phi);
        c.params.eta = get_double(p, "eta", c.params.eta);
        c.params.spacing = get_double(p, "spacing", c.params.spacing);
    }
    c.params.validate();

    c.grids.eta_over_phi = default_eta_over_phi();
    c.grids.theta = default_theta_grid();
    c.grids.beta = default_beta_grid();
    if (j.contains("grids")) {
        const json& g = j["grids"];
        if (!g.is_object()) throw validation_error("field 'grids' must be an object");
        check_keys(g, {"eta_over_phi", "theta", "beta"}, "grids");
        if (g.contains("eta_over_phi")) c.grids.eta_over_phi = get_double_array(g, "eta_over_phi");
        if (g.contains("theta")) c.grids.theta = get_double_array(g, "theta");
        if (g.contains("beta")) c.grids.beta = get_double_array(g, "beta");
        for (double b : c.grids.beta)
            if (!(b > 0.0 && b < 1.0))
                throw validation_error("grids.beta entries must lie in (0, 1)");
    }

    if (j.contains("modulation")) {
        const json& m = j["modulation"];
        if (!m.is_object()) throw validation_error("field 'modulation' must be an object");
        check_keys(m, {"source", "v_re", "v_im", "beta", "theta"}, "modulation");
        const std::string src = get_string(m, "source", "extracted");
        if (src == "analytic")
            c.modulation.source = ModSource::Analytic;
        else if (src == "extracted")
            c.modulation.source = ModSource::Extracted;
        else if (src == "explicit")
            c.modulation.source = ModSource::Explicit;
        else
            throw validation_error("modulation.source must be one of 'analytic', 'extracted', "
                                   "'explicit', got '" + src + "'");
        c.modulation.v_re = get_opt_double(m, "v_re");
        c.modulation.v_im = get_opt_double(m, "v_im");
        c.modulation.beta = get_opt_double(m, "beta");
        c.modulation.theta = get_opt_double(m, "theta");
        if (c.modulation.source == ModSource::Explicit &&
            (!c.modulation.v_re || !c.modulation.v_im || !c.modulation.beta ||
             !c.modulation.theta))
            throw validation_error(
                "explicit modulation requires v_re, v_im, beta and theta");
        if (c.modulation.beta && !(*c.modulation.beta > 0.0 && *c.modulation.beta < 1.0))
            throw validation_error("modulation.beta must lie in (0, 1)");
    }

    if (j.contains("thresholds")) {
        const json& t = j["thresholds"];
        if (!t.is_object()) throw validation_error("field 'thresholds' must be an object");
        check_keys(t,
                   {"gap_factor", "subradiant_count", "gamma_cut", "boundary_weight_min",
                    "boundary_depth_frac", "ipr_factor", "pairing_tol_factor", "residual_tol",
                    "nu_max", "q", "box_sizes"},
                   "thresholds");
        c.thresholds.gap_factor = get_double(t, "gap_factor", c.thresholds.gap_factor);
        c.thresholds.subradiant_count =
            static_cast<int>(get_int(t, "subradiant_count", c.thresholds.subradiant_count));
        c.thresholds.gamma_cut = get_double(t, "gamma_cut", c.thresholds.gamma_cut);
        c.thresholds.boundary_weight_min =
            get_double(t, "boundary_weight_min", c.thresholds.boundary_weight_min);
        c.thresholds.boundary_depth_frac =
            get_double(t, "boundary_depth_frac", c.thresholds.boundary_depth_frac);
        c.thresholds.ipr_factor = get_double(t, "ipr_factor", c.thresholds.ipr_factor);
        c.thresholds.pairing_tol_factor =
            get_double(t, "pairing_tol_factor", c.thresholds.pairing_tol_factor);
        c.thresholds.residual_tol = get_double(t, "residual_tol", c.thresholds.residual_tol);
        c.thresholds.nu_max = static_cast<int>(get_int(t, "nu_max", c.thresholds.nu_max));
        c.thresholds.q = get_double(t, "q", c.thresholds.q);
        if (t.contains("box_sizes")) {
            if (!t["box_sizes"].is_array())
                throw validation_error("thresholds.box_sizes must be an array of integers");
            for (const auto& v : t["box_sizes"]) {
                if (!v.is_number_integer() || v.get<long long>() < 1)
                    throw validation_error("thresholds.box_sizes must be positive integers");
                c.thresholds.box_sizes.push_back(static_cast<int>(v.get<long long>()));
            }
        }
        if (c.thresholds.gap_factor <= 1.0)
            throw validation_error("thresholds.gap_factor must be > 1");
        if (std::abs(c.thresholds.q - 1.0) < 1e-12)
            throw validation_error("thresholds.q = 1 is excluded");
    }

    c.output_dir = get_string(j, "output_dir", c.output_dir);
    c.input = get_string(j, "input", c.input);
    c.dump_matrices = get_bool(j, "dump_matrices", c.dump_matrices);
    c.force = get_bool(j, "force", c.force);
    c.threads = static_cast<int>(get_int(j, "threads", c.threads));
    if (c.threads < 1) throw validation_error("threads must be >= 1");
    if (c.task == "analyze" && c.input.empty())
        throw validation_error("the analyze task requires 'input' (a matrix dump path)");
    return c;
}

RunConfig load_config(const std::string& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("config '") + path + "': " + e.what());
    }
    return parse_config(j);
}

json RunConfig::echo() const {
    json j;
    j["task"] = task;
    j["params"] = {{"n_sites", params.n_sites}, {"gamma0", params.gamma0},
                   {"omega", params.omega},     {"phi", params.phi},
                   {"eta", params.eta},         {"spacing", params.spacing}};
    j["grids"] = {{"eta_over_phi", grids.eta_over_phi},
                  {"theta", grids.theta},
                  {"beta", grids.beta}};
    json m;
    m["source"] = modulation.source == ModSource::Analytic    ? "analytic"
                  : modulation.source == ModSource::Extracted ? "extracted"
                                                              : "explicit";
    if (modulation.v_re) m["v_re"] = *modulation.v_re;
    if (modulation.v_im) m["v_im"] = *modulation.v_im;
    if (modulation.beta) m["beta"] = *modulation.beta;
    if (modulation.theta) m["theta"] = *modulation.theta;
    j["modulation"] = m;
    json t;
    t["gap_factor"] = thresholds.gap_factor;
    t["subradiant_count"] = thresholds.subradiant_count;
    t["gamma_cut"] = thresholds.gamma_cut;
    t["boundary_weight_min"] = thresholds.boundary_weight_min;
    t["boundary_depth_frac"] = thresholds.boundary_depth_frac;
    t["ipr_factor"] = thresholds.ipr_factor;
    t["pairing_tol_factor"] = thresholds.pairing_tol_factor;
    t["residual_tol"] = thresholds.residual_tol;
    t["nu_max"] = thresholds.nu_max;
    t["q"] = thresholds.q;
    t["box_sizes"] = thresholds.box_sizes;
    j["thresholds"] = t;
    if (!input.empty()) j["input"] = input;
    if (dump_matrices) j["dump_matrices"] = true;
    return j;
}

} // namespace wqed
