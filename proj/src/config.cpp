#include "mikado/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mikado/errors.hpp"

namespace mikado {

namespace {

using json = nlohmann::json;

double as_number(const std::string& key, const json& v) {
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    return v.get<double>();
}

std::size_t as_count(const std::string& key, const json& v) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer()) throw ConfigError(key, "must be >= 0");
    throw ConfigError(key, "expected a non-negative integer");
}

std::string as_string(const std::string& key, const json& v) {
    if (!v.is_string()) throw ConfigError(key, "expected a string");
    return v.get<std::string>();
}

using Setter = std::function<void(RunConfig&, const std::string&, const json&)>;

#define NUM(field) {#field, [](RunConfig& c, const std::string& k, const json& v) { c.field = as_number(k, v); }}
#define COUNT(field) {#field, [](RunConfig& c, const std::string& k, const json& v) { c.field = as_count(k, v); }}
#define STR(field) {#field, [](RunConfig& c, const std::string& k, const json& v) { c.field = as_string(k, v); }}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        COUNT(rows), COUNT(cols), NUM(a_over_rpsf), NUM(hwhm_px), NUM(trunc_factor), NUM(p), NUM(mu),
        {"sigma", [](RunConfig& c, const std::string& k, const json& v) { c.sigma = as_number(k, v); }},
        NUM(background), NUM(read_noise_sd),
        {"shot_mode",
         [](RunConfig& c, const std::string& k, const json& v) {
             const std::string s = as_string(k, v);
             if (s == "gaussian") c.shot_mode = ShotMode::gaussian;
             else if (s == "poisson") c.shot_mode = ShotMode::poisson;
             else throw ConfigError(k, "expected \"gaussian\" or \"poisson\"");
         }},
        {"estimator",
         [](RunConfig& c, const std::string& k, const json& v) {
             try {
                 c.estimator = parse_estimator(as_string(k, v));
             } catch (const ParameterError& e) {
                 throw ConfigError(k, e.what());
             }
         }},
        COUNT(n_steps), NUM(t_final_over_mu),
        {"threshold_mode",
         [](RunConfig& c, const std::string& k, const json& v) {
             const std::string s = as_string(k, v);
             if (s == "schedule") c.threshold_mode = FinalThresholdMode::schedule;
             else if (s == "optimized") c.threshold_mode = FinalThresholdMode::optimized;
             else throw ConfigError(k, "expected \"schedule\" or \"optimized\"");
         }},
        NUM(ilut_drop_tol), COUNT(ilut_fill_limit), COUNT(ilut_max_retries), NUM(cg_rel_tol), COUNT(cg_max_iter),
        {"p_grid",
         [](RunConfig& c, const std::string& k, const json& v) {
             if (!v.is_array()) throw ConfigError(k, "expected an array of numbers");
             c.p_grid.clear();
             for (const auto& e : v) c.p_grid.push_back(as_number(k, e));
         }},
        NUM(clamp_eps),
        {"nsr_mode",
         [](RunConfig& c, const std::string& k, const json& v) {
             const std::string s = as_string(k, v);
             if (s == "model") c.nsr_mode = NsrMode::model;
             else if (s == "measured") c.nsr_mode = NsrMode::measured;
             else throw ConfigError(k, "expected \"model\" or \"measured\"");
         }},
        NUM(nsr), NUM(bin_radius_over_a),
        {"seed",
         [](RunConfig& c, const std::string& k, const json& v) {
             if (!v.is_number_unsigned()) throw ConfigError(k, "expected a non-negative integer");
             c.seed = v.get<std::uint64_t>();
         }},
        COUNT(n_workers), STR(image_out), STR(truth_out), STR(occupancy_out), STR(trace_out),
    };
    return table;
}

#undef NUM
#undef COUNT
#undef STR

void require(bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
}

}  // namespace

void validate_config(const RunConfig& c) {
    require(c.rows >= 1, "rows", "must be >= 1");
    require(c.cols >= 1, "cols", "must be >= 1");
    require(c.a_over_rpsf > 0.0, "a_over_rpsf", "must be positive");
    require(c.hwhm_px > 0.0, "hwhm_px", "must be positive");
    require(c.trunc_factor >= 3.0, "trunc_factor", "must be >= 3");
    require(c.p >= 0.0 && c.p <= 1.0, "p", "must lie in [0, 1]");
    require(c.mu > 0.0, "mu", "must be positive");
    require(!c.sigma || *c.sigma >= 0.0, "sigma", "must be >= 0");
    require(c.background >= 0.0, "background", "must be >= 0");
    require(c.read_noise_sd >= 0.0, "read_noise_sd", "must be >= 0");
    require(c.n_steps >= 2, "n_steps", "must be >= 2");
    require(c.t_final_over_mu > 0.0 && c.t_final_over_mu < 1.0, "t_final_over_mu", "must lie in (0, 1)");
    require(c.ilut_drop_tol >= 0.0, "ilut_drop_tol", "must be >= 0");
    require(c.ilut_fill_limit >= 1, "ilut_fill_limit", "must be >= 1");
    require(c.ilut_max_retries <= 64, "ilut_max_retries", "must be <= 64");
    require(c.cg_rel_tol > 0.0 && c.cg_rel_tol < 1.0, "cg_rel_tol", "must lie in (0, 1)");
    require(c.cg_max_iter >= 1, "cg_max_iter", "must be >= 1");
    require(!c.p_grid.empty(), "p_grid", "must not be empty");
    for (double q : c.p_grid) require(q > 0.0 && q < 1.0, "p_grid", "values must lie in (0, 1)");
    require(c.clamp_eps > 0.0 && c.clamp_eps < 0.5, "clamp_eps", "must lie in (0, 0.5)");
    require(c.nsr >= 0.0, "nsr", "must be >= 0");
    require(c.bin_radius_over_a > 0.0, "bin_radius_over_a", "must be positive");
}

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("<document>", "expected a JSON object");
    RunConfig cfg;
    const auto& table = setters();
    for (const auto& [key, value] : doc.items()) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(key, "unknown key");
        it->second(cfg, key, value);
    }
    validate_config(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string serialize_config(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["rows"] = c.rows;
    j["cols"] = c.cols;
    j["a_over_rpsf"] = c.a_over_rpsf;
    j["hwhm_px"] = c.hwhm_px;
    j["trunc_factor"] = c.trunc_factor;
    j["p"] = c.p;
    j["mu"] = c.mu;
    if (c.sigma) j["sigma"] = *c.sigma;
    j["background"] = c.background;
    j["read_noise_sd"] = c.read_noise_sd;
    j["shot_mode"] = c.shot_mode == ShotMode::gaussian ? "gaussian" : "poisson";
    j["estimator"] = std::string(estimator_name(c.estimator));
    j["n_steps"] = c.n_steps;
    j["t_final_over_mu"] = c.t_final_over_mu;
    j["threshold_mode"] = c.threshold_mode == FinalThresholdMode::schedule ? "schedule" : "optimized";
    j["ilut_drop_tol"] = c.ilut_drop_tol;
    j["ilut_fill_limit"] = c.ilut_fill_limit;
    j["ilut_max_retries"] = c.ilut_max_retries;
    j["cg_rel_tol"] = c.cg_rel_tol;
    j["cg_max_iter"] = c.cg_max_iter;
    j["p_grid"] = c.p_grid;
    j["clamp_eps"] = c.clamp_eps;
    j["nsr_mode"] = c.nsr_mode == NsrMode::model ? "model" : "measured";
    j["nsr"] = c.nsr;
    j["bin_radius_over_a"] = c.bin_radius_over_a;
    j["seed"] = c.seed;
    j["n_workers"] = c.n_workers;
    j["image_out"] = c.image_out;
    j["truth_out"] = c.truth_out;
    j["occupancy_out"] = c.occupancy_out;
    j["trace_out"] = c.trace_out;
    return j.dump(2) + "\n";
}

BenchParams to_bench_params(const RunConfig& c) {
    validate_config(c);
    BenchParams b;
    b.rows = c.rows;
    b.cols = c.cols;
    b.a_over_rpsf = c.a_over_rpsf;
    b.hwhm_px = c.hwhm_px;
    b.trunc_factor = c.trunc_factor;
    b.mu = c.mu;
    b.sigma_over_mu = c.sigma_value() / c.mu;
    b.p = c.p;
    b.background = c.background;
    b.read_noise_sd = c.read_noise_sd;
    b.shot_mode = c.shot_mode;
    b.n_steps = c.n_steps;
    b.t_final_over_mu = c.t_final_over_mu;
    b.final_mode = c.threshold_mode;
    b.solver.ilut.drop_tol = c.ilut_drop_tol;
    b.solver.ilut.fill_limit = c.ilut_fill_limit;
    b.solver.ilut.max_retries = static_cast<int>(c.ilut_max_retries);
    b.solver.cg.rel_tol = c.cg_rel_tol;
    b.solver.cg.max_iter = c.cg_max_iter;
    b.p_grid = c.p_grid;
    b.clamp_eps = c.clamp_eps;
    b.nsr_mode = c.nsr_mode;
    b.nsr = c.nsr;
    b.bin_radius_over_a = c.bin_radius_over_a;
    b.n_workers = c.n_workers;
    return b;
}

}  // namespace mikado
