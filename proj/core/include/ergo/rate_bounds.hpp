#pragma once

#include "ergo/numerics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ergo {

/// Raised when a bound computation hits a divergence/inconclusive verdict
/// that the caller did not ask for as a verdict-typed result.
class BoundError : public std::runtime_error {
public:
    BoundError(const std::string& msg, SumVerdict verdict)
        : std::runtime_error(msg), verdict_(verdict) {}
    SumVerdict verdict() const { return verdict_; }

private:
    SumVerdict verdict_;
};

struct BoundRecord {
    std::string quantity;   // e.g. "kappa_lower"
    double value = 0.0;
    std::string source;     // which estimate produced it
};

/// Computed convergence-rate bounds with provenance. The lambda1 interval,
/// when present, brackets the Dirichlet-at-base eigenvalue lambda^0 (the
/// Hardy constant); kappa_lower is always a valid lower bound for the
/// strong-ergodicity rate since kappa = lambda1 >= lambda^0 for these
/// families.
struct RateBounds {
    double kappa_lower = 0.0;
    bool kappa_equals_lambda1 = false;
    double lambda1_lower = 0.0;
    std::optional<double> lambda1_upper;
    std::optional<double> M_H;
    std::string H_description;
    std::optional<double> S;
    std::optional<double> delta;
    std::vector<BoundRecord> provenance;

    void check_invariants() const;
};

/// Moments / exponential moments / tail data for a hitting time tau_H.
struct HittingSummary {
    std::string target;
    double moment1 = 0.0;                                // sup_x E_x tau_H
    SumVerdict verdict = SumVerdict::converged;          // diverged => moment1 = inf
    std::optional<std::pair<double, double>> exp_moment; // (beta, bound on E e^{beta tau})
    std::optional<std::pair<double, double>> tail;       // (t0, delta_B(t0))

    void check_invariants() const;
};

enum class CombineCase { R1, R2 };

struct CombinedBound {
    double kappa_lower = 0.0;
    CombineCase which = CombineCase::R1;
};

/// kappa >= min{lambda, 1/M_H}; ties classify as R1 (the stronger
/// conclusion kappa = lambda holds at the boundary).
CombinedBound combine_bounds(double lambda, double M_H);

struct ExpMomentBound {
    double beta = 0.0;
    double bound = 0.0;   // E e^{beta tau} <= bound = 1/(1 - beta M)
    double tail_at(double t) const;
};

/// From sup_x E_x tau <= M and 0 < beta < 1/M: E e^{beta tau} <= 1/(1-beta M)
/// and P(tau > t) <= e^{-beta t}/(1-beta M).
ExpMomentBound moment_to_exp(double moment1, double beta);

/// E_x tau_B <= t0 / (1 - delta) from a tail probability delta at time t0.
double tail_to_moment(double t0, double delta);

} // namespace ergo
