#include "ergo/verify.hpp"

#include "ergo/chain_bounds.hpp"
#include "ergo/continuum_bounds.hpp"
#include "ergo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ergo {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

void push(std::vector<Verdict>& out, const std::string& name, bool pass, double margin,
          const std::string& detail, bool warning = false) {
    out.push_back(Verdict{name, pass, warning, margin, detail});
}

// auto time grid: geometric until the TV curve underflows
std::vector<double> auto_times(const GeneratorMatrix& Q) {
    const double scale = std::max(1e-12, spectral_gap(Q).value);
    std::vector<double> ts;
    for (double u = 0.05; u <= 30.0; u *= 1.18) ts.push_back(u / scale);
    return ts;
}

void chain_checks(const GeneratorMatrix& Q, const VerificationSection& v,
                  std::vector<Verdict>& out) {
    const int n = Q.size();
    // moment recursion: E tau^k <= k! M^k for H = {0}
    std::vector<int> H{0};
    double M = 0.0;
    std::vector<double> u1 = hitting_moments(Q, H, 1);
    for (double x : u1) M = std::max(M, x);
    bool ok = true;
    double worst = 1e300;
    for (int k = 1; k <= 4; ++k) {
        std::vector<double> uk = hitting_moments(Q, H, k);
        double mx = 0.0;
        for (double x : uk) mx = std::max(mx, x);
        double bound = std::tgamma(k + 1.0) * std::pow(M, k);
        ok = ok && mx <= bound * (1.0 + 1e-9);
        worst = std::min(worst, bound - mx);
    }
    push(out, "moment_factorial_bound", ok, worst, "E tau^k vs k! M^k, k <= 4, H = {0}");

    // exponential tail: P_x(tau > t) <= e^{-beta t}/(1 - beta M)
    ok = true;
    worst = 1e300;
    for (double frac : {0.5, 0.9}) {
        const double beta = frac / M;
        for (double t : {0.5 * M, M, 2.0 * M, 4.0 * M}) {
            std::vector<double> tail = hitting_tail(Q, H, t);
            const double cap = std::exp(-beta * t) / (1.0 - beta * M);
            for (int x = 0; x < n; ++x) {
                const double m = cap - tail[static_cast<std::size_t>(x)];
                worst = std::min(worst, m);
                ok = ok && m >= -1e-9;
            }
        }
    }
    push(out, "exponential_tail_bound", ok, worst, "uniformized tails vs e^{-bt}/(1-bM)");

    // geometric tail: delta(k t0) <= delta(t0)^k
    const double t0 = std::max(0.25 * M, 1e-3);
    std::vector<double> base = hitting_tail(Q, H, t0);
    double d0 = *std::max_element(base.begin(), base.end());
    ok = true;
    worst = 1e300;
    for (int k = 2; k <= 5; ++k) {
        std::vector<double> tk = hitting_tail(Q, H, k * t0);
        const double dk = *std::max_element(tk.begin(), tk.end());
        const double m = std::pow(d0, k) - dk;
        worst = std::min(worst, m);
        ok = ok && m >= -1e-9;
    }
    push(out, "geometric_tail_power", ok, worst, "delta(k t0) vs delta(t0)^k, k <= 5");

    // main lemma at mid-decay times
    {
        const double tmid = v.curve.times[v.curve.times.size() / 2];
        MainLemmaReport rep = check_main_lemma(Q, H, tmid);
        push(out, "main_lemma_inequality", rep.holds, rep.rhs + rep.allowance - rep.lhs,
             "f(x,t) vs tail + convolution at t = " + fmt(tmid));
        push(out, "main_lemma_grid", rep.grid_adequate, 0.1 * rep.rhs - rep.allowance,
             "allowance below 10% of RHS", true);
    }

    // submultiplicativity in the operator normalization (factor 2)
    {
        bool sub_ok = true;
        double sub_worst = 1e300;
        const auto& ts = v.curve.times;
        for (std::size_t i = 0; i < ts.size(); ++i)
            for (std::size_t j = i; j < ts.size(); ++j) {
                const double tsum = ts[i] + ts[j];
                // find exact grid alignment
                const auto it = std::lower_bound(ts.begin(), ts.end(), tsum - 1e-12);
                if (it == ts.end() || std::abs(*it - tsum) > 1e-9) continue;
                const std::size_t k = static_cast<std::size_t>(it - ts.begin());
                const double lhs = 2.0 * v.curve.tv[k];
                const double rhs = (2.0 * v.curve.tv[i]) * (2.0 * v.curve.tv[j]);
                if (lhs > 1e-11) {
                    sub_worst = std::min(sub_worst, rhs - lhs);
                    sub_ok = sub_ok && lhs <= rhs * (1.0 + 1e-9) + 1e-12;
                }
            }
        push(out, "tv_submultiplicative", sub_ok, sub_worst,
             "||P_{t+s}-pi|| <= ||P_t-pi|| ||P_s-pi|| (operator normalization)");
    }
}

} // namespace

VerificationSection run_verification(const ModelDocument& doc, const VerifyOptions& opts,
                                     std::vector<Verdict>& verdicts) {
    VerificationSection v;
    const Tolerance tol = opts.tol;

    GeneratorMatrix Q = [&]() {
        if (const auto* df = std::get_if<DiffusionSpec>(&doc.spec)) {
            const double h = opts.mesh_h.value_or(1e-3);
            v.mesh_h = h;
            v.mesh_length = opts.mesh_length;
            return discretize_diffusion(*df, h, opts.mesh_length);
        }
        return truncate_generator(doc.spec, opts.truncation);
    }();
    v.truncation = Q.size();

    const GapResult gap = spectral_gap(Q);
    v.gap = gap.value;
    v.gap_lower_bound_only = gap.lower_bound_only;
    v.dirichlet_gap0 = dirichlet_gap(Q, 0);

    // refinement diagnostic: double the truncation / halve the mesh
    {
        GeneratorMatrix Q2 = [&]() {
            if (const auto* df = std::get_if<DiffusionSpec>(&doc.spec))
                return discretize_diffusion(*df, opts.mesh_h.value_or(1e-3) / 2.0, opts.mesh_length);
            return truncate_generator(doc.spec, 2 * opts.truncation);
        }();
        const bool diffusion = std::holds_alternative<DiffusionSpec>(doc.spec);
        const double refined = diffusion ? dirichlet_gap(Q2, 0) : spectral_gap(Q2).value;
        const double base = diffusion ? v.dirichlet_gap0 : v.gap;
        v.gap_refined = refined;
        const double thr = diffusion ? 1e-3 : 1e-6;
        push(verdicts, "truncation_cauchy", std::abs(refined - base) < thr,
             thr - std::abs(refined - base),
             "gap at refinement vs base: " + fmt(base) + " / " + fmt(refined), true);
    }

    // TV decay and empirical kappa only at sizes where the dense curve is
    // affordable
    const bool small = Q.size() <= 256;
    if (small) {
        std::vector<double> times = opts.times.empty() ? auto_times(Q) : opts.times;
        v.curve = tv_decay(Q, times);
        // late window: tv in [1e-10, 1e-3]
        double lo = times.front(), hi = times.back();
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (v.curve.tv[k] > 1e-3) lo = times[k];
            if (v.curve.tv[k] > 1e-10) hi = times[k];
        }
        try {
            const double ke = kappa_empirical(v.curve, lo, hi);
            v.kappa_empirical = ke;
            v.fit_window = {lo, hi};
            std::vector<std::pair<double, double>> pts;
            for (std::size_t k = 0; k < times.size(); ++k)
                if (times[k] >= lo && times[k] <= hi && v.curve.tv[k] > 1e-12)
                    pts.emplace_back(times[k], v.curve.tv[k]);
            v.fit_r_squared = fit_exp_rate(pts).r_squared;

            if (Q.reversible(1e-10))
                push(verdicts, "kappa_matches_gap", std::abs(ke - v.gap) <= 0.01 * v.gap,
                     0.01 * v.gap - std::abs(ke - v.gap),
                     "kappa_empirical " + fmt(ke) + " vs gap " + fmt(v.gap));
        } catch (const std::exception& e) {
            push(verdicts, "kappa_empirical", false, 0.0, e.what(), true);
        }

        std::vector<int> H{0};
        for (int k = 1; k <= 4; ++k) {
            std::vector<double> uk = hitting_moments(Q, H, k);
            v.max_hitting_moments.push_back(*std::max_element(uk.begin(), uk.end()));
        }
        chain_checks(Q, v, verdicts);

        // Theorem 1.2 combination against the empirical rate, H_n = {0..n}
        if (v.kappa_empirical && Q.reversible(1e-10)) {
            bool ok = true;
            double worst = 1e300;
            for (int nn = 0; nn < std::min(Q.size() - 1, 8); ++nn) {
                std::vector<int> Hn;
                for (int i = 0; i <= nn; ++i) Hn.push_back(i);
                std::vector<double> u = hitting_moments(Q, Hn, 1);
                const double M = *std::max_element(u.begin(), u.end());
                const CombinedBound cb = combine_bounds(v.gap, M);
                const double m = *v.kappa_empirical * 1.01 - cb.kappa_lower;
                worst = std::min(worst, m);
                ok = ok && m >= 0.0;
            }
            push(verdicts, "theorem_combination", ok, worst,
                 "min{lambda1, 1/M_H} <= kappa_empirical + 1% over prefix sets");
        }

        if (Q.reversible(1e-10)) {
            const Mc1Result mc1 = mc1_bound(Q);
            push(verdicts, "mc1_below_gap", mc1.bound <= v.gap + 1e-8, v.gap + 1e-8 - mc1.bound,
                 "sup_x (sup_i E_i tau_x)^{-1} = " + fmt(mc1.bound) + " vs gap " + fmt(v.gap));
        }
    }

    // family-specific sandwiches
    if (const auto* bd = std::get_if<BirthDeathSpec>(&doc.spec)) {
        try {
            EntranceVerdict ev = bd_entrance_boundary(*bd, tol);
            if (ev.is_entrance) {
                const DeltaResult dl = bd_delta(*bd, tol);
                const double lam0 = v.dirichlet_gap0;
                const double lo_m = lam0 - dl.lambda1_lower;
                const double hi_m = dl.lambda1_upper - lam0;
                push(verdicts, "delta_sandwich_dirichlet",
                     lo_m >= -1e-6 && hi_m >= -1e-6, std::min(lo_m, hi_m),
                     "(4d)^{-1} " + fmt(dl.lambda1_lower) + " <= lambda^0 " + fmt(lam0) +
                         " <= d^{-1} " + fmt(dl.lambda1_upper));
                const SProfile prof = bd_S_profile(*bd, tol);
                const double hit = 1.0 / prof.profile_extremum;
                push(verdicts, "ordering_chain",
                     1.0 / prof.S <= hit * (1.0 + 1e-12) && hit <= lam0 * (1.0 + 1e-6),
                     lam0 - hit, "1/S <= sup_i max{S_i,Sbar_i}^{-1} <= lambda^0");
                // hitting equivalence vs linear solves
                bool ok = true;
                double worst = 1e300;
                for (long nn = 0; nn < std::min<long>(6, Q.size() / 2); ++nn) {
                    std::vector<int> Hn;
                    for (int i = 0; i <= nn; ++i) Hn.push_back(i);
                    std::vector<double> u = hitting_moments(Q, Hn, 1);
                    const double M_or = *std::max_element(u.begin(), u.end());
                    const double M_series = bd_hitting_moment(*bd, nn, tol).moment1;
                    const double tol_c = 1e-6 + 1e-4 * M_series;
                    const double m = tol_c - std::abs(M_or - M_series);
                    worst = std::min(worst, m);
                    ok = ok && m >= 0.0;
                }
                push(verdicts, "hitting_equivalence", ok, worst,
                     "bd_hitting_moment vs oracle linear solves");
            }
        } catch (const BoundError& e) {
            push(verdicts, "bd_bounds", false, 0.0, e.what(), true);
        }
    }
    if (const auto* df = std::get_if<DiffusionSpec>(&doc.spec)) {
        if (!df->is_radial()) {
            try {
                DiffEntranceVerdict ev = diff_entrance(*df, tol);
                if (ev.is_entrance) {
                    const DiffDelta dl = diff_delta(*df, tol);
                    const double lam0 = v.dirichlet_gap0;
                    const double lo_m = lam0 - dl.lambda1_lower;
                    const double hi_m = dl.lambda1_upper - lam0;
                    push(verdicts, "delta_sandwich_dirichlet",
                         lo_m >= -1e-4 && hi_m >= -1e-4, std::min(lo_m, hi_m),
                         "(4d)^{-1} " + fmt(dl.lambda1_lower) + " <= lambda^0 " + fmt(lam0) +
                             " <= d^{-1} " + fmt(dl.lambda1_upper));
                }
            } catch (const BoundError& e) {
                push(verdicts, "diff_bounds", false, 0.0, e.what(), true);
            }
        }
    }

    return v;
}

} // namespace ergo
