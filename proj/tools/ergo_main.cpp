// ergo: convergence-rate bounds for Markov process families, with oracle
// verification and Monte Carlo cross-checks.
//
//   ergo bounds   model.json [--tol-rel R] [--tol-abs A] [--out report.json]
//   ergo verify   model.json [--truncate N | --mesh H --length L] [--times GRID]
//   ergo simulate model.json [--trials T] [--seed S] [--hit SET] [--x0 X]
//
// Exit codes: 0 success, 1 error, 2 model not strongly ergodic.

#include <CLI11.hpp>

#include "ergo/chain_bounds.hpp"
#include "ergo/continuum_bounds.hpp"
#include "ergo/model.hpp"
#include "ergo/montecarlo.hpp"
#include "ergo/oracle.hpp"
#include "ergo/report.hpp"
#include "ergo/verify.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace ergo;

struct GlobalOpts {
    std::string model_path;
    double tol_rel = 1e-10;
    double tol_abs = 1e-14;
    std::string out_path;
    std::string format = "json";
};

Tolerance make_tol(const GlobalOpts& g, const ModelDocument& doc) {
    Tolerance t;
    t.rel = g.tol_rel;
    t.abs = g.tol_abs;
    return doc.numerics.apply(t);
}

std::vector<double> parse_times(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) return out;
    if (text.rfind("geom:", 0) == 0) {
        std::stringstream ss(text.substr(5));
        std::string a, b, n;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, n, ':');
        const double lo = std::stod(a), hi = std::stod(b);
        const int cnt = std::stoi(n);
        if (!(lo > 0.0) || !(hi > lo) || cnt < 2) throw CLI::ValidationError("--times", "bad geom grid");
        const double q = std::pow(hi / lo, 1.0 / (cnt - 1));
        double t = lo;
        for (int i = 0; i < cnt; ++i, t *= q) out.push_back(t);
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<long> parse_hit(const std::string& text) {
    std::vector<long> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const long lo = std::stol(text.substr(0, dots));
        const long hi = std::stol(text.substr(dots + 2));
        for (long i = lo; i <= hi; ++i) out.push_back(i);
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
    return out;
}

std::string params_echo(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const Report& rep, const GlobalOpts& g, const DecayCurve* curve) {
    const std::string json = report_to_json(rep);
    validate_report_json(json);
    std::string body = json;
    if (g.format == "csv") {
        if (curve && !curve->times.empty()) {
            body = curve->to_csv();
        } else {
            std::ostringstream os;
            os << "quantity,value\n";
            if (rep.bounds) {
                os << "kappa_lower," << rep.bounds->kappa_lower << "\n";
                os << "lambda1_lower," << rep.bounds->lambda1_lower << "\n";
                if (rep.bounds->lambda1_upper) os << "lambda1_upper," << *rep.bounds->lambda1_upper << "\n";
                if (rep.bounds->S) os << "S," << *rep.bounds->S << "\n";
                if (rep.bounds->delta) os << "delta," << *rep.bounds->delta << "\n";
            }
            body = os.str();
        }
    }
    if (g.out_path.empty()) {
        std::cout << body << "\n";
    } else {
        std::ofstream out(g.out_path);
        if (!out) throw std::runtime_error("cannot write " + g.out_path);
        out << body << "\n";
        if (curve && !curve->times.empty() && g.format == "json") {
            std::ofstream cs(g.out_path + ".curve.csv");
            cs << curve->to_csv();
        }
    }
}

Report base_report(const char* cmd, const ModelDocument& doc, const GlobalOpts& g,
                   const Tolerance& tol) {
    Report rep;
    rep.command = cmd;
    rep.family = doc.family;
    const std::string echo = params_echo(g.model_path);
    rep.model_echo_json = echo;
    rep.params_digest = params_digest(echo);
    rep.tol = tol;
    return rep;
}

int run_bounds(const GlobalOpts& g) {
    const ModelDocument doc = load_model(g.model_path);
    const Tolerance tol = make_tol(g, doc);
    Report rep = base_report("bounds", doc, g, tol);

    try {
        if (const auto* bd = std::get_if<BirthDeathSpec>(&doc.spec)) {
            rep.bounds = bd_rate_bounds(*bd, tol);
        } else if (const auto* sd = std::get_if<SingleDeathSpec>(&doc.spec)) {
            rep.bounds = sd_rate_bounds(*sd, tol);
        } else if (const auto* tr = std::get_if<TreeSpec>(&doc.spec)) {
            TreeBounds tb = tree_bounds(*tr, tol);
            for (const auto& [nn, sz] : tb.H_sizes)
                tb.bounds.provenance.push_back(
                    {"H_" + std::to_string(nn) + "_size", static_cast<double>(sz),
                     "finite set with path tails <= 1/" + std::to_string(nn)});
            rep.bounds = tb.bounds;
        } else if (const auto* df = std::get_if<DiffusionSpec>(&doc.spec)) {
            if (df->is_radial()) {
                RateBounds rb;
                rb.kappa_equals_lambda1 = false;  // kappa >= lambda1 in general
                const double p0 = df->radial->r0;
                for (int k = 0; k < 4; ++k) {
                    const double p = p0 + std::pow(2.0, k) - 1.0;
                    const double dbar = radial_entrance_bound(*df->radial, p, tol);
                    rb.provenance.push_back({"delta_bar_p", dbar, "p = " + std::to_string(p)});
                    if (k == 0) {
                        rb.M_H = dbar;
                        rb.H_description = "B_p, p = " + std::to_string(p);
                    }
                }
                rb.provenance.push_back({"kappa", 0.0, "kappa >= lambda1 (rho-entrance boundary)"});
                rep.bounds = rb;
            } else {
                rep.bounds = diff_rate_bounds(*df, tol);
            }
        } else if (const auto* st = std::get_if<StableSdeSpec>(&doc.spec)) {
            const double r = 2.0;
            StableDeltaResult d = stable_delta_r(*st, r, tol);
            if (!d.strongly_ergodic)
                throw BoundError("stable_sde: delta_r diverges (not strongly ergodic)", d.verdict);
            RateBounds rb;
            rb.kappa_equals_lambda1 = false;
            rb.M_H = d.M_r_bound;
            rb.H_description = "{|x| <= " + std::to_string(r) + "}";
            rb.provenance.push_back({"delta_r", d.delta_r, "r = " + std::to_string(r)});
            rb.provenance.push_back({"M_2r", d.M_2r, "decay monitor"});
            rb.provenance.push_back({"M_4r", d.M_4r, "decay monitor"});
            if (d.kappa_ge_lambda1)
                rb.provenance.push_back({"kappa", 0.0, "kappa >= lambda1 (alpha in (1,2))"});
            rep.bounds = rb;
        } else if (const auto* tc = std::get_if<TimeChangedStableSpec>(&doc.spec)) {
            TcRateResult t = tc_rate_bound(*tc, tol);
            if (!t.strongly_ergodic)
                throw BoundError("tc_stable: I diverges (not strongly ergodic)", t.verdict);
            RateBounds rb;
            rb.kappa_lower = t.kappa_lower;
            rb.M_H = t.omega * t.I;
            rb.H_description = "{0}";
            rb.provenance.push_back({"I", t.I, "int a(x)^{-1} |x|^{alpha-1} dx"});
            rb.provenance.push_back({"omega_alpha", t.omega, "-2/(cos(pi a/2) Gamma(a))"});
            rb.provenance.push_back({"kappa_lower", t.kappa_lower, "1/(omega_alpha I)"});
            if (t.lyapunov_diagnostic)
                rb.provenance.push_back({"lyapunov_exponent", t.lyapunov_exponent,
                                         "sampled growth diagnostic (non-rigorous)"});
            rep.bounds = rb;
        }
    } catch (const BoundError& e) {
        if (e.verdict() == SumVerdict::diverged) {
            rep.not_ergodic_reason = e.what();
            emit(rep, g, nullptr);
            return 2;
        }
        throw;
    }
    emit(rep, g, nullptr);
    return 0;
}

int run_verify(const GlobalOpts& g, int truncate, double mesh, double length,
               const std::string& times) {
    const ModelDocument doc = load_model(g.model_path);
    Tolerance tol = make_tol(g, doc);
    Report rep = base_report("verify", doc, g, tol);

    VerifyOptions opts;
    opts.truncation = doc.numerics.truncation.value_or(truncate);
    if (mesh > 0.0) opts.mesh_h = mesh;
    opts.mesh_length = length;
    opts.times = parse_times(times);
    opts.tol = tol;

    rep.verification = run_verification(doc, opts, rep.verdicts);
    const DecayCurve* curve = &rep.verification->curve;

    bool hard_fail = false;
    for (const auto& v : rep.verdicts)
        if (!v.pass && !v.warning) hard_fail = true;
    emit(rep, g, curve);
    return hard_fail ? 1 : 0;
}

int run_simulate(const GlobalOpts& g, long trials, const std::string& seed_text,
                 const std::string& hit, long x0, int cap, double horizon, double beta) {
    const ModelDocument doc = load_model(g.model_path);
    const Tolerance tol = make_tol(g, doc);
    Report rep = base_report("simulate", doc, g, tol);

    RngConfig rng;
    if (!seed_text.empty()) {
        rng.seed = std::stoull(seed_text);
    } else if (const char* env = std::getenv("ERGO_SEED")) {
        rng.seed = std::stoull(env);
    }
    rep.seed = rng.seed;

    ChainDynamics dyn(doc.spec, cap);
    const std::vector<long> H = parse_hit(hit);
    MonteCarloSection mc;
    mc.seed = rng.seed;
    mc.trials = trials;
    mc.hit_target = hit;
    std::optional<double> beta_opt;
    if (beta > 0.0) beta_opt = beta;
    mc.hit = mc_hitting(dyn, x0, H, trials, beta_opt, horizon, rng);

    // oracle comparison on the same truncation
    GeneratorMatrix Q = truncate_generator(doc.spec, static_cast<int>(dyn.states()));
    std::vector<int> Hi(H.begin(), H.end());
    std::vector<double> u = hitting_moments(Q, Hi, 1);
    const double exact = u[static_cast<std::size_t>(x0)];
    const double slack = 3.0 * mc.hit.std_error + 1e-9;
    rep.verdicts.push_back(Verdict{"mc_mean_vs_linear_solve",
                                   std::abs(mc.hit.mean - exact) <= slack, false,
                                   slack - std::abs(mc.hit.mean - exact),
                                   "mean vs E_x tau from the restricted solve"});
    const double frac = static_cast<double>(mc.hit.censored) / static_cast<double>(trials);
    rep.verdicts.push_back(Verdict{"censoring_below_1pct", frac < 0.01, true, 0.01 - frac,
                                   "censored fraction " + std::to_string(frac)});
    if (beta_opt) {
        const double M = *std::max_element(u.begin(), u.end());
        if (*beta_opt < 1.0 / M) {
            const double cap_b = 1.0 / (1.0 - *beta_opt * M);
            rep.verdicts.push_back(Verdict{"exp_moment_bound",
                                           mc.hit.exp_moment->second <= cap_b * (1.0 + 0.05), false,
                                           cap_b - mc.hit.exp_moment->second,
                                           "empirical E e^{beta tau} vs 1/(1-beta M)"});
        }
    }
    rep.montecarlo = mc;
    emit(rep, g, nullptr);
    for (const auto& v : rep.verdicts)
        if (!v.pass && !v.warning) return 1;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convergence-rate bounds in strong/exponential ergodicity for Markov models"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--tol-rel", g.tol_rel, "relative tolerance")->capture_default_str();
    app.add_option("--tol-abs", g.tol_abs, "absolute tolerance")->capture_default_str();
    app.add_option("--out", g.out_path, "write the report to this path");
    app.add_option("--format", g.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

    auto* cb = app.add_subcommand("bounds", "closed-form rate bounds");
    cb->add_option("model", g.model_path, "model document")->required();

    auto* cv = app.add_subcommand("verify", "oracle verification");
    cv->add_option("model", g.model_path, "model document")->required();
    int truncate = 64;
    double mesh = 0.0, length = 4.0;
    std::string times;
    cv->add_option("--truncate", truncate, "chain truncation size")->capture_default_str();
    cv->add_option("--mesh", mesh, "diffusion mesh width h");
    cv->add_option("--length", length, "diffusion domain length L")->capture_default_str();
    cv->add_option("--times", times, "TV time grid: t1,t2,... or geom:a:b:n");

    auto* cs = app.add_subcommand("simulate", "Monte Carlo hitting estimates");
    cs->add_option("model", g.model_path, "model document")->required();
    long trials = 100000;
    std::string seed_text, hit = "0";
    long x0 = 1;
    int cap = 64;
    double horizon = 1e4, beta = 0.0;
    cs->add_option("--trials", trials)->capture_default_str();
    cs->add_option("--seed", seed_text, "RNG seed (also env ERGO_SEED)");
    cs->add_option("--hit", hit, "target set: \"0\", \"0,2\", or \"0..3\"")->capture_default_str();
    cs->add_option("--x0", x0, "starting state")->capture_default_str();
    cs->add_option("--truncate", cap, "simulation truncation")->capture_default_str();
    cs->add_option("--horizon", horizon, "censoring horizon")->capture_default_str();
    cs->add_option("--beta", beta, "report empirical E e^{beta tau}");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cb->parsed()) return run_bounds(g);
        if (cv->parsed()) return run_verify(g, truncate, mesh, length, times);
        if (cs->parsed()) return run_simulate(g, trials, seed_text, hit, x0, cap, horizon, beta);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
