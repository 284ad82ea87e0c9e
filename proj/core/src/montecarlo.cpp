#include "ergo/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace ergo {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, int stream) {
    std::uint64_t s = seed ^ (0xc0ffee123456789ull + static_cast<std::uint64_t>(stream));
    const std::uint64_t a = splitmix64(s), b = splitmix64(s);
    std::seed_seq seq{static_cast<unsigned>(a), static_cast<unsigned>(a >> 32),
                      static_cast<unsigned>(b), static_cast<unsigned>(b >> 32)};
    return std::mt19937_64(seq);
}

// Welford-style accumulator that merges across streams deterministically.
struct Accumulator {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const Accumulator& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double d = o.mean - mean;
        const long total = n + o.n;
        mean += d * static_cast<double>(o.n) / static_cast<double>(total);
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) /
                         static_cast<double>(total);
        n = total;
    }
    double std_error() const {
        if (n < 2) return 0.0;
        return std::sqrt(m2 / (static_cast<double>(n) - 1.0) / static_cast<double>(n));
    }
};

} // namespace

ChainDynamics::ChainDynamics(const ModelSpec& spec, long cap) : cap_(cap) {
    if (cap < 2) throw std::invalid_argument("ChainDynamics: cap must be >= 2");
    if (const auto* bd = std::get_if<BirthDeathSpec>(&spec)) {
        moves_.resize(static_cast<std::size_t>(cap));
        for (long i = 0; i < cap; ++i) {
            if (i < cap - 1) moves_[static_cast<std::size_t>(i)].push_back({i + 1, bd->b(i)});
            if (i > 0) moves_[static_cast<std::size_t>(i)].push_back({i - 1, bd->a(i)});
        }
    } else if (const auto* sd = std::get_if<SingleDeathSpec>(&spec)) {
        moves_.resize(static_cast<std::size_t>(cap));
        for (long i = 0; i < cap; ++i)
            for (long j = std::max<long>(0, i - 1); j < cap; ++j) {
                if (j == i) continue;
                const double r = sd->rate(i, j);
                if (r > 0.0) moves_[static_cast<std::size_t>(i)].push_back({j, r});
            }
    } else if (const auto* tr = std::get_if<TreeSpec>(&spec)) {
        if (!tr->rays.empty())
            throw std::invalid_argument("ChainDynamics: trees with ray extensions are not simulable");
        cap_ = tr->size();
        moves_.resize(static_cast<std::size_t>(cap_));
        for (long i = 1; i < cap_; ++i) {
            const long p = tr->parent[static_cast<std::size_t>(i)];
            moves_[static_cast<std::size_t>(p)].push_back({i, tr->up[static_cast<std::size_t>(i)]});
            moves_[static_cast<std::size_t>(i)].push_back({p, tr->down[static_cast<std::size_t>(i)]});
        }
    } else {
        throw std::invalid_argument("ChainDynamics: family is not an exactly simulable chain");
    }
    total_.resize(moves_.size(), 0.0);
    for (std::size_t i = 0; i < moves_.size(); ++i) {
        double s = 0.0;
        for (const Move& m : moves_[i]) s += m.rate;
        if (!std::isfinite(s))
            throw std::domain_error("ChainDynamics: rate overflow at state " + std::to_string(i));
        total_[i] = s;
    }
}

const std::vector<ChainDynamics::Move>& ChainDynamics::moves(long state) const {
    return moves_[static_cast<std::size_t>(state)];
}

double ChainDynamics::total_rate(long state) const {
    return total_[static_cast<std::size_t>(state)];
}

CtmcPath simulate_ctmc(const ChainDynamics& dyn, long x0, double horizon, std::mt19937_64& rng) {
    if (x0 < 0 || x0 >= dyn.states()) throw std::invalid_argument("simulate_ctmc: x0 out of range");
    CtmcPath path;
    path.times.push_back(0.0);
    path.states.push_back(x0);
    double t = 0.0;
    long x = x0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (true) {
        const double rate = dyn.total_rate(x);
        if (rate <= 0.0) break;  // absorbing under the truncation
        const double u = std::max(unif(rng), 1e-300);
        t += -std::log(u) / rate;
        if (t > horizon) break;
        double pick = unif(rng) * rate;
        const auto& mv = dyn.moves(x);
        long next = mv.back().to;
        for (const auto& m : mv) {
            pick -= m.rate;
            if (pick <= 0.0) {
                next = m.to;
                break;
            }
        }
        x = next;
        path.times.push_back(t);
        path.states.push_back(x);
    }
    return path;
}

namespace {

// first passage into H along one trajectory; horizon-censored draws return
// the horizon with censored = true
std::pair<double, bool> hit_time(const ChainDynamics& dyn, long x0,
                                 const std::unordered_set<long>& H, double horizon,
                                 std::mt19937_64& rng) {
    if (H.count(x0)) return {0.0, false};
    double t = 0.0;
    long x = x0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (true) {
        const double rate = dyn.total_rate(x);
        if (rate <= 0.0) return {horizon, true};
        const double u = std::max(unif(rng), 1e-300);
        t += -std::log(u) / rate;
        if (t > horizon) return {horizon, true};
        double pick = unif(rng) * rate;
        const auto& mv = dyn.moves(x);
        long next = mv.back().to;
        for (const auto& m : mv) {
            pick -= m.rate;
            if (pick <= 0.0) {
                next = m.to;
                break;
            }
        }
        x = next;
        if (H.count(x)) return {t, false};
    }
}

} // namespace

HitEstimate mc_hitting(const ChainDynamics& dyn, long x0, const std::vector<long>& H, long trials,
                       std::optional<double> beta, double horizon, const RngConfig& cfg) {
    if (trials < 1) throw std::invalid_argument("mc_hitting: trials must be >= 1");
    std::unordered_set<long> targets(H.begin(), H.end());
    if (targets.empty()) throw std::invalid_argument("mc_hitting: empty target set");

    const int streams = std::max(1, cfg.streams);
    Accumulator tau_acc, exp_acc;
    long censored = 0;
    for (int s = 0; s < streams; ++s) {
        std::mt19937_64 rng = make_engine(cfg.seed, s);
        const long lo = trials * s / streams, hi = trials * (s + 1) / streams;
        Accumulator tau_s, exp_s;
        for (long k = lo; k < hi; ++k) {
            auto [tau, cens] = hit_time(dyn, x0, targets, horizon, rng);
            if (cens) ++censored;
            tau_s.add(tau);
            if (beta) exp_s.add(std::exp(*beta * tau));
        }
        tau_acc.merge(tau_s);
        if (beta) exp_acc.merge(exp_s);
    }
    if (censored == trials)
        throw std::runtime_error("mc_hitting: every trajectory was censored at the horizon");

    HitEstimate out;
    out.mean = tau_acc.mean;
    out.std_error = tau_acc.std_error();
    out.trials = trials;
    out.censored = censored;
    if (beta) out.exp_moment = std::make_pair(*beta, exp_acc.mean);
    return out;
}

TailEstimate mc_tail(const ChainDynamics& dyn, const std::vector<long>& probes,
                     const std::vector<long>& H, double t0, long trials, const RngConfig& cfg) {
    if (!(t0 > 0.0)) throw std::invalid_argument("mc_tail: t0 must be positive");
    std::unordered_set<long> targets(H.begin(), H.end());
    TailEstimate out;
    int probe_idx = 0;
    for (long x0 : probes) {
        long exceed = 0;
        const int streams = std::max(1, cfg.streams);
        for (int s = 0; s < streams; ++s) {
            std::mt19937_64 rng = make_engine(cfg.seed + 1000 + static_cast<std::uint64_t>(probe_idx), s);
            const long lo = trials * s / streams, hi = trials * (s + 1) / streams;
            for (long k = lo; k < hi; ++k) {
                auto [tau, cens] = hit_time(dyn, x0, targets, t0, rng);
                if (cens || tau > t0) ++exceed;
            }
        }
        out.per_probe.push_back(static_cast<double>(exceed) / static_cast<double>(trials));
        ++probe_idx;
    }
    out.delta_hat = *std::max_element(out.per_probe.begin(), out.per_probe.end());
    if (out.delta_hat >= 1.0)
        throw std::runtime_error("mc_tail: no hits observed from some probe state");
    out.moment_bound = t0 / (1.0 - out.delta_hat);
    return out;
}

namespace {

struct EmRun {
    Accumulator acc;
    long censored = 0;
    double max_drift_step = 0.0;
};

EmRun em_run(const DiffusionSpec& spec, double x0, double r, double dt, long trials, double horizon,
             const RngConfig& cfg, std::uint64_t salt) {
    EmRun run;
    const int streams = std::max(1, cfg.streams);
    const long max_steps = static_cast<long>(horizon / dt) + 1;
    for (int s = 0; s < streams; ++s) {
        std::mt19937_64 rng = make_engine(cfg.seed + salt, s);
        std::normal_distribution<double> normal(0.0, 1.0);
        const long lo = trials * s / streams, hi = trials * (s + 1) / streams;
        Accumulator acc_s;
        for (long k = lo; k < hi; ++k) {
            double x = x0;
            double tau = horizon;
            bool hit = false;
            for (long step = 1; step <= max_steps; ++step) {
                const double b = spec.b(x);
                const double a = spec.a(x);
                const double drift_frac = std::abs(b) * dt / std::max(1.0, std::abs(x));
                run.max_drift_step = std::max(run.max_drift_step, drift_frac);
                x += b * dt + std::sqrt(2.0 * a * dt) * normal(rng);
                if (x < 0.0) x = -x;  // reflecting boundary
                if (x <= r) {
                    tau = static_cast<double>(step) * dt;
                    hit = true;
                    break;
                }
            }
            if (!hit) ++run.censored;
            acc_s.add(tau);
        }
        run.acc.merge(acc_s);
    }
    return run;
}

} // namespace

EmHitEstimate em_diffusion_hitting(const DiffusionSpec& spec, double x0, double r, double dt,
                                   long trials, double horizon, const RngConfig& cfg) {
    if (spec.is_radial())
        throw std::invalid_argument("em_diffusion_hitting: radial comparison data is not simulable");
    if (!(x0 > r)) throw std::invalid_argument("em_diffusion_hitting: need x0 > r");
    if (!(dt > 0.0) || !(horizon > dt))
        throw std::invalid_argument("em_diffusion_hitting: need 0 < dt < horizon");

    const EmRun fine = em_run(spec, x0, r, dt, trials, horizon, cfg, 0);
    const EmRun coarse = em_run(spec, x0, r, 2.0 * dt, trials, horizon, cfg, 7777);

    EmHitEstimate out;
    out.estimate.mean = fine.acc.mean;
    out.estimate.std_error = fine.acc.std_error();
    out.estimate.trials = trials;
    out.estimate.censored = fine.censored;
    out.coarse_mean = coarse.acc.mean;
    out.richardson_bias = std::abs(fine.acc.mean - coarse.acc.mean);
    out.max_drift_step = fine.max_drift_step;
    out.step_ok = fine.max_drift_step < 0.1;
    return out;
}

} // namespace ergo
