#include "ergo/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

namespace ergo {

void Tolerance::validate() const {
    if (!(rel > 0.0) && !(abs > 0.0))
        throw std::invalid_argument("Tolerance: rel and abs must not both be zero");
    if (rel < 0.0 || abs < 0.0 || !std::isfinite(rel) || !std::isfinite(abs))
        throw std::invalid_argument("Tolerance: rel/abs must be finite and non-negative");
    if (max_terms <= 0 || max_evals <= 0)
        throw std::invalid_argument("Tolerance: caps must be positive");
}

double Tolerance::target(double scale) const {
    return std::max(abs, rel * std::abs(scale));
}

Tolerance Tolerance::tightened(double factor) const {
    Tolerance t = *this;
    t.rel /= factor;
    t.abs /= factor;
    return t;
}

const char* to_string(SumVerdict v) {
    switch (v) {
        case SumVerdict::converged: return "converged";
        case SumVerdict::diverged: return "diverged";
        case SumVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

constexpr int kRatioWindow = 16;

// Ring of (index, |term|) snapshots used for the "non-decreasing across the
// last decade of indices" divergence rule.
struct DecadeTracker {
    std::deque<std::pair<long, double>> snaps;

    void record(long k, double mag) {
        snaps.emplace_back(k, mag);
        // keep enough history to look back a factor of 10
        while (snaps.size() > 4 && snaps.front().first * 10 < k) snaps.pop_front();
    }
    // true when the current magnitude has not decayed since ~k/10
    bool non_decaying(long k, double mag) const {
        for (const auto& [idx, m] : snaps) {
            if (idx * 10 <= k || idx + 1 == k) {
                if (idx < k && mag >= m * (1.0 - 1e-9)) return true;
            }
        }
        // no snapshot old enough yet
        return false;
    }
    double oldest_within_decade(long k) const {
        for (const auto& [idx, m] : snaps)
            if (idx * 8 >= k) return m;
        return snaps.empty() ? 0.0 : snaps.front().second;
    }
};

} // namespace

SeriesResult sum_series(const std::function<double(long)>& term, const Tolerance& tol) {
    tol.validate();

    SeriesResult res;
    double sum = 0.0;
    double ratios[kRatioWindow];
    int nratio = 0, rpos = 0;
    long nonneg_streak = 0;
    long zero_streak = 0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    DecadeTracker decade;

    for (long k = 0; k < tol.max_terms; ++k) {
        const double t = term(k);
        if (!std::isfinite(t))
            throw std::domain_error("sum_series: non-finite term at index " + std::to_string(k));
        sum += t;
        res.terms = k + 1;

        if (t >= 0.0) ++nonneg_streak; else nonneg_streak = 0;
        if (t == 0.0) ++zero_streak; else zero_streak = 0;

        const double mag = std::abs(t);
        if (k >= 1 && std::isfinite(prev) && prev != 0.0) {
            ratios[rpos] = mag / std::abs(prev);
            rpos = (rpos + 1) % kRatioWindow;
            if (nratio < kRatioWindow) ++nratio;
        }
        prev = t;
        if ((k & (k + 1)) == 0 || k % 64 == 0) decade.record(k, mag);

        // an all-zero window means the summand has underflowed for good
        if (zero_streak >= kRatioWindow && k >= kRatioWindow) {
            res.value = sum;
            res.error_estimate = 0.0;
            res.converged = true;
            res.verdict = SumVerdict::converged;
            return res;
        }

        if (nratio == kRatioWindow && nonneg_streak >= kRatioWindow) {
            double rhat = 0.0;
            for (int i = 0; i < kRatioWindow; ++i) rhat = std::max(rhat, ratios[i]);
            if (rhat < 1.0) {
                const double tail = mag * rhat / (1.0 - rhat);
                if (tail <= tol.target(sum)) {
                    res.value = sum;
                    res.error_estimate = tail;
                    res.converged = true;
                    res.verdict = SumVerdict::converged;
                    return res;
                }
            }
        }

        if (std::abs(sum) > kBlowUpThreshold && k >= 32 && decade.non_decaying(k, mag)) {
            res.value = sum;
            res.error_estimate = std::numeric_limits<double>::infinity();
            res.verdict = SumVerdict::diverged;
            return res;
        }
    }

    // caps exhausted: persistent non-decay counts as divergence, otherwise
    // the run is inconclusive and the caller must widen the caps
    res.value = sum;
    res.error_estimate = std::numeric_limits<double>::infinity();
    double rmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nratio; ++i) rmin = std::min(rmin, ratios[i]);
    const bool flat = nratio == kRatioWindow && rmin >= 1.0 - 1e-9 && nonneg_streak >= kRatioWindow;
    res.verdict = flat ? SumVerdict::diverged : SumVerdict::inconclusive;
    return res;
}

namespace {

// Gauss(7)-Kronrod(15) nodes and weights on [-1,1] (abscissa, K15 weight,
// G7 weight; zero G7 weight marks Kronrod-only nodes).
constexpr double kGK[8][3] = {
    {0.000000000000000000000000000000000e+00, 2.094821410847278280129991748917143e-01,
     4.179591836734693877551020408163265e-01},
    {2.077849550078984676006894037732449e-01, 2.044329400752988924141619992346491e-01, 0.0},
    {4.058451513773971669066064120769615e-01, 1.903505780647854099132564024210137e-01,
     3.818300505051189449503697754889751e-01},
    {5.860872354676911302941448382587296e-01, 1.690047266392679028265834265985503e-01, 0.0},
    {7.415311855993944398638647732807884e-01, 1.406532597155259187451895905102379e-01,
     2.797053914892766679014677714237796e-01},
    {8.648644233597690727897127886409262e-01, 1.047900103222501838398763225415180e-01, 0.0},
    {9.491079123427585245261896840478513e-01, 6.309209262997855329070066318920429e-02,
     1.294849661688696932706114326790820e-01},
    {9.914553711208126392068546975263285e-01, 2.293532201052922496373200805896959e-02, 0.0}};

struct Panel {
    double a, b;
    double value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b, long& evals) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double k15 = 0.0, g7 = 0.0;
    for (int i = 0; i < 8; ++i) {
        double acc;
        if (i == 0) {
            acc = f(mid);
            ++evals;
        } else {
            const double dx = half * kGK[i][0];
            acc = f(mid - dx) + f(mid + dx);
            evals += 2;
        }
        if (!std::isfinite(acc))
            throw std::domain_error("integrate: non-finite integrand value near x = " +
                                    std::to_string(mid));
        k15 += kGK[i][1] * acc;
        g7 += kGK[i][2] * acc;
    }
    k15 *= half;
    g7 *= half;
    const double diff = std::abs(k15 - g7);
    // quadpack-style error sharpening
    const double err = diff * std::min(1.0, std::pow(200.0 * diff / std::max(1e-300, std::abs(k15)), 1.5)) +
                       1e-300;
    return Panel{a, b, k15, std::max(err, diff * 1e-6)};
}

QuadratureResult integrate_finite(const std::function<double(double)>& f, double a, double b,
                                  const Tolerance& tol) {
    QuadratureResult res;
    long evals = 0;
    std::priority_queue<Panel> heap;
    Panel first = gk15(f, a, b, evals);
    double total = first.value;
    double toterr = first.error;
    heap.push(first);

    while (toterr > tol.target(total) && evals + 30 <= tol.max_evals) {
        Panel worst = heap.top();
        if (worst.error <= 1e-300) break;
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {  // interval exhausted by rounding
            total -= 0.0;
            heap.push(Panel{worst.a, worst.b, worst.value, 0.0});
            toterr -= worst.error;
            continue;
        }
        Panel l = gk15(f, worst.a, mid, evals);
        Panel r = gk15(f, mid, worst.b, evals);
        total += l.value + r.value - worst.value;
        toterr += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }

    res.value = total;
    res.error_estimate = std::max(toterr, 0.0);
    res.evals = evals;
    res.converged = toterr <= tol.target(total);
    return res;
}

} // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const Tolerance& tol) {
    tol.validate();
    if (std::isnan(a) || std::isnan(b)) throw std::invalid_argument("integrate: NaN bound");
    if (std::isinf(b)) {
        // x = a + t/(1-t), dx = dt/(1-t)^2
        auto g = [&f, a](double t) {
            const double u = 1.0 - t;
            const double x = a + t / u;
            const double fx = f(x);
            // graceful underflow for super-exponentially decaying tails
            if (fx == 0.0) return 0.0;
            return fx / (u * u);
        };
        return integrate_finite(g, 0.0, 1.0, tol);
    }
    if (a == b) return QuadratureResult{0.0, 0.0, true, 0};
    if (a > b) {
        QuadratureResult r = integrate(f, b, a, tol);
        r.value = -r.value;
        return r;
    }
    return integrate_finite(f, a, b, tol);
}

SeriesResult integrate_tail_verdict(const std::function<double(double)>& f, double a,
                                    const Tolerance& tol) {
    tol.validate();
    // block k covers [a + w(2^k - 1), a + w(2^{k+1} - 1)], w = 1
    Tolerance block_tol = tol;
    block_tol.rel = std::max(tol.rel, 1e-9);
    block_tol.max_evals = std::max<long>(4000, tol.max_evals / 64);
    auto block = [&](long k) -> double {
        const double lo = a + (std::pow(2.0, static_cast<double>(k)) - 1.0);
        const double hi = a + (std::pow(2.0, static_cast<double>(k + 1)) - 1.0);
        try {
            QuadratureResult q = integrate(f, lo, hi, block_tol);
            if (!std::isfinite(q.value)) return std::numeric_limits<double>::infinity();
            return q.value;
        } catch (const std::domain_error&) {
            // overflowing integrand inside a tail block: divergence evidence
            return std::numeric_limits<double>::infinity();
        }
    };

    SeriesResult res;
    double sum = 0.0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    int growing = 0;
    const long max_blocks = 200;
    double ratio_max = 0.0;
    int nratio = 0;

    for (long k = 0; k < max_blocks; ++k) {
        const double v = block(k);
        res.terms = k + 1;
        if (std::isinf(v) || v > kBlowUpThreshold) {
            res.value = std::numeric_limits<double>::infinity();
            res.verdict = SumVerdict::diverged;
            return res;
        }
        sum += v;
        if (std::isfinite(prev) && prev > 0.0 && v >= 0.0) {
            const double r = v / prev;
            ratio_max = (nratio == 0) ? r : std::max(ratio_max * 0.7 + 0.3 * r, r);
            ++nratio;
            growing = (r >= 1.0 - 1e-12) ? growing + 1 : 0;
        }
        prev = v;

        if (sum > kBlowUpThreshold && growing >= 2) {
            res.value = sum;
            res.verdict = SumVerdict::diverged;
            return res;
        }
        if (growing >= 8) {
            res.value = sum;
            res.verdict = SumVerdict::diverged;
            return res;
        }
        if (nratio >= 3 && ratio_max < 1.0 && v >= 0.0) {
            const double tail = std::abs(v) * ratio_max / (1.0 - ratio_max);
            if (tail <= tol.target(sum)) {
                res.value = sum;
                res.error_estimate = tail;
                res.converged = true;
                res.verdict = SumVerdict::converged;
                return res;
            }
        }
        if (v == 0.0 && k >= 2) {
            res.value = sum;
            res.error_estimate = 0.0;
            res.converged = true;
            res.verdict = SumVerdict::converged;
            return res;
        }
    }
    res.value = sum;
    res.verdict = SumVerdict::inconclusive;
    return res;
}

double gamma_fn(double x) {
    if (std::isnan(x)) throw std::domain_error("gamma_fn: NaN argument");
    if (x <= 0.0 && x == std::floor(x))
        throw std::domain_error("gamma_fn: pole at non-positive integer " + std::to_string(x));
    if (x > 171.62) throw std::range_error("gamma_fn: overflow for x = " + std::to_string(x));
    return std::tgamma(x);
}

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: requires x > 0");
    return std::lgamma(x);
}

ExpFitResult fit_exp_rate(const std::vector<std::pair<double, double>>& curve) {
    if (curve.size() < 5)
        throw std::invalid_argument("fit_exp_rate: need at least 5 points");
    double tprev = -std::numeric_limits<double>::infinity();
    for (const auto& [t, v] : curve) {
        if (!(t > tprev)) throw std::invalid_argument("fit_exp_rate: times must be strictly increasing");
        if (!(v > 0.0)) throw std::invalid_argument("fit_exp_rate: values must be positive");
        tprev = t;
    }
    const double n = static_cast<double>(curve.size());
    double st = 0, sy = 0;
    for (const auto& [t, v] : curve) {
        st += t;
        sy += std::log(v);
    }
    const double tbar = st / n, ybar = sy / n;
    double stt = 0, sty = 0, syy = 0;
    for (const auto& [t, v] : curve) {
        const double dt = t - tbar, dy = std::log(v) - ybar;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if (stt <= 0.0) throw std::invalid_argument("fit_exp_rate: degenerate time window");
    const double slope = sty / stt;
    ExpFitResult r;
    r.rate = -slope;
    r.log_prefactor = ybar - slope * tbar;
    r.r_squared = (syy > 0.0) ? (sty * sty) / (stt * syy) : 1.0;
    return r;
}

} // namespace ergo
