#include "ergo/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace ergo {

using nlohmann::json;

namespace {

json tolerance_json(const Tolerance& t) {
    return json{{"rel", t.rel}, {"abs", t.abs}, {"max_terms", t.max_terms}, {"max_evals", t.max_evals}};
}

json bounds_json(const RateBounds& b) {
    json j;
    j["kappa_lower"] = b.kappa_lower;
    j["kappa_equals_lambda1"] = b.kappa_equals_lambda1;
    j["lambda1_lower"] = b.lambda1_lower;
    if (b.lambda1_upper) j["lambda1_upper"] = *b.lambda1_upper;
    if (b.M_H) {
        j["M_H"] = *b.M_H;
        j["H"] = b.H_description;
    }
    if (b.S) j["S"] = *b.S;
    if (b.delta) j["delta"] = *b.delta;
    json prov = json::array();
    for (const auto& p : b.provenance)
        prov.push_back({{"quantity", p.quantity}, {"value", p.value}, {"source", p.source}});
    j["provenance"] = prov;
    return j;
}

json verdicts_json(const std::vector<Verdict>& vs) {
    json arr = json::array();
    for (const auto& v : vs)
        arr.push_back({{"name", v.name},
                       {"pass", v.pass},
                       {"warning", v.warning},
                       {"margin", v.margin},
                       {"detail", v.detail}});
    return arr;
}

json hit_json(const HitEstimate& h) {
    json j{{"mean", h.mean}, {"std_error", h.std_error}, {"trials", h.trials}, {"censored", h.censored}};
    if (h.exp_moment) j["exp_moment"] = {{"beta", h.exp_moment->first}, {"mean", h.exp_moment->second}};
    return j;
}

void expect_keys(const json& obj, const std::set<std::string>& required,
                 const std::set<std::string>& optional, const std::string& where) {
    for (const auto& k : required)
        if (!obj.contains(k)) throw std::runtime_error("report: missing '" + k + "' in " + where);
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!required.count(it.key()) && !optional.count(it.key()))
            throw std::runtime_error("report: unknown field '" + it.key() + "' in " + where);
}

} // namespace

std::string params_digest(const std::string& params_json) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : params_json) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string report_to_json(const Report& r) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = r.command;
    json model{{"family", r.family}, {"params_digest", r.params_digest}};
    if (!r.model_echo_json.empty()) {
        model["params"] = json::parse(r.model_echo_json, nullptr, false);
        if (model["params"].is_discarded()) model["params"] = r.model_echo_json;
    }
    j["model"] = model;
    json prov{{"tool_version", kToolVersion}, {"tolerances", tolerance_json(r.tol)}};
    if (r.seed) prov["seed"] = *r.seed;
    j["provenance"] = prov;

    if (r.not_ergodic_reason) j["not_strongly_ergodic"] = *r.not_ergodic_reason;
    if (r.bounds) j["bounds"] = bounds_json(*r.bounds);
    if (r.verification) {
        const auto& v = *r.verification;
        json vj;
        vj["truncation"] = v.truncation;
        if (v.mesh_h) {
            vj["mesh_h"] = *v.mesh_h;
            vj["mesh_length"] = v.mesh_length.value_or(0.0);
        }
        vj["spectral_gap"] = v.gap;
        vj["gap_lower_bound_only"] = v.gap_lower_bound_only;
        vj["dirichlet_gap0"] = v.dirichlet_gap0;
        if (v.gap_refined) vj["gap_refined"] = *v.gap_refined;
        if (v.kappa_empirical) vj["kappa_empirical"] = *v.kappa_empirical;
        if (v.fit_r_squared) vj["fit_r_squared"] = *v.fit_r_squared;
        vj["fit_window"] = {v.fit_window.first, v.fit_window.second};
        vj["max_hitting_moments"] = v.max_hitting_moments;
        j["verification"] = vj;
    }
    if (r.montecarlo) {
        const auto& m = *r.montecarlo;
        json mj;
        mj["seed"] = m.seed;
        mj["trials"] = m.trials;
        mj["hit_target"] = m.hit_target;
        mj["hit"] = hit_json(m.hit);
        if (m.tail)
            mj["tail"] = {{"delta_hat", m.tail->delta_hat},
                          {"moment_bound", m.tail->moment_bound},
                          {"per_probe", m.tail->per_probe}};
        if (m.em)
            mj["em"] = {{"estimate", hit_json(m.em->estimate)},
                        {"coarse_mean", m.em->coarse_mean},
                        {"richardson_bias", m.em->richardson_bias},
                        {"max_drift_step", m.em->max_drift_step},
                        {"step_ok", m.em->step_ok}};
        j["montecarlo"] = mj;
    }
    j["verdicts"] = verdicts_json(r.verdicts);
    return j.dump(2);
}

void validate_report_json(const std::string& json_text) {
    json j = json::parse(json_text);
    expect_keys(j, {"schema_version", "command", "model", "provenance", "verdicts"},
                {"bounds", "verification", "montecarlo", "not_strongly_ergodic"}, "top level");
    if (j.at("schema_version").get<int>() != kReportSchemaVersion)
        throw std::runtime_error("report: unsupported schema_version");
    expect_keys(j.at("model"), {"family", "params_digest"}, {"params"}, "model");
    expect_keys(j.at("provenance"), {"tool_version", "tolerances"}, {"seed"}, "provenance");
    expect_keys(j.at("provenance").at("tolerances"), {"rel", "abs", "max_terms", "max_evals"}, {},
                "tolerances");
    if (j.contains("bounds"))
        expect_keys(j.at("bounds"), {"kappa_lower", "kappa_equals_lambda1", "lambda1_lower", "provenance"},
                    {"lambda1_upper", "M_H", "H", "S", "delta"}, "bounds");
    if (j.contains("verification"))
        expect_keys(j.at("verification"),
                    {"truncation", "spectral_gap", "gap_lower_bound_only", "dirichlet_gap0",
                     "fit_window", "max_hitting_moments"},
                    {"mesh_h", "mesh_length", "gap_refined", "kappa_empirical", "fit_r_squared"},
                    "verification");
    if (j.contains("montecarlo"))
        expect_keys(j.at("montecarlo"), {"seed", "trials", "hit_target", "hit"}, {"tail", "em"},
                    "montecarlo");
    for (const auto& v : j.at("verdicts"))
        expect_keys(v, {"name", "pass", "warning", "margin", "detail"}, {}, "verdict");
}

} // namespace ergo
