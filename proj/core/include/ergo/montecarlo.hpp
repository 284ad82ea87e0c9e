#pragma once

#include "ergo/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace ergo {

/// Same (seed, streams, trial count) => bit-identical estimates within one
/// build of the library.
struct RngConfig {
    std::uint64_t seed = 0x0e60u;
    int streams = 8;
};

struct HitEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long trials = 0;
    long censored = 0;  // trajectories cut at the horizon, counted, never dropped
    std::optional<std::pair<double, double>> exp_moment;  // (beta, mean of e^{beta tau})
};

/// Jump rates of a chain-family model truncated reflectively at `cap`
/// states (outgoing rates beyond cap-1 dropped). Trees use their explicit
/// node set; ray extensions are not simulable.
class ChainDynamics {
public:
    ChainDynamics(const ModelSpec& spec, long cap);

    struct Move {
        long to;
        double rate;
    };
    const std::vector<Move>& moves(long state) const;
    double total_rate(long state) const;
    long states() const { return cap_; }

private:
    long cap_ = 0;
    std::vector<std::vector<Move>> moves_;
    std::vector<double> total_;
};

struct CtmcPath {
    std::vector<double> times;   // jump times, times[0] = 0
    std::vector<long> states;    // states[k] entered at times[k]
};

/// Exact jump-chain simulation up to the horizon.
CtmcPath simulate_ctmc(const ChainDynamics& dyn, long x0, double horizon, std::mt19937_64& rng);

/// Hitting-time statistics for tau_H from x0 over `trials` trajectories.
/// Censored trajectories contribute the horizon as a lower bound to the
/// mean and are flagged; beta, when given, adds the empirical exponential
/// moment for comparison against 1/(1 - beta M).
HitEstimate mc_hitting(const ChainDynamics& dyn, long x0, const std::vector<long>& H, long trials,
                       std::optional<double> beta, double horizon, const RngConfig& rng);

struct TailEstimate {
    double delta_hat = 0.0;    // max over probe states of empirical P(tau_H > t0)
    double moment_bound = 0.0; // t0 / (1 - delta_hat)
    std::vector<double> per_probe;
};

/// Tail probability delta_B(t0) approximated over a finite probe set of
/// starting states (the sup over all states is not certifiable by
/// simulation; for stochastically monotone chains the top probe dominates).
TailEstimate mc_tail(const ChainDynamics& dyn, const std::vector<long>& probes,
                     const std::vector<long>& H, double t0, long trials, const RngConfig& rng);

struct EmHitEstimate {
    HitEstimate estimate;        // at step dt
    double coarse_mean = 0.0;    // at step 2*dt
    double richardson_bias = 0.0;  // |mean(dt) - mean(2dt)|, O(sqrt(dt)) bias proxy
    double max_drift_step = 0.0;   // max |b(x)| dt / max(1,|x|) seen
    bool step_ok = true;           // drift step stayed under 0.1 of the x-scale
};

/// Euler-Maruyama first passage below level r for the diffusion
/// a(x) f'' + b(x) f' (dX = b dt + sqrt(2a) dW), reflected at 0.
EmHitEstimate em_diffusion_hitting(const DiffusionSpec& spec, double x0, double r, double dt,
                                   long trials, double horizon, const RngConfig& rng);

} // namespace ergo
