#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergo {

/// Threshold above which a growing partial sum is declared divergent.
inline constexpr double kBlowUpThreshold = 1e12;

struct Tolerance {
    double rel = 1e-10;
    double abs = 1e-14;
    long max_terms = 10'000'000;
    long max_evals = 1'000'000;

    void validate() const;
    double target(double scale) const;
    Tolerance tightened(double factor) const;
};

enum class SumVerdict { converged, diverged, inconclusive };

const char* to_string(SumVerdict v);

struct SeriesResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
    SumVerdict verdict = SumVerdict::inconclusive;
    long terms = 0;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
    long evals = 0;
};

/// Sums term(0) + term(1) + ... until a geometric tail majorant estimated
/// from observed term ratios meets the tolerance contract. Series whose
/// terms persistently fail to decay (or whose partial sums pass
/// kBlowUpThreshold with non-decreasing terms across the last decade of
/// indices) come back with verdict = diverged; exhausted caps without a
/// tail certificate give inconclusive.
SeriesResult sum_series(const std::function<double(long)>& term, const Tolerance& tol = {});

/// Adaptive Gauss-Kronrod (G7,K15) on [a,b]; b may be +infinity, in which
/// case the substitution x = a + t/(1-t) maps the problem onto [0,1).
/// Throws std::domain_error on non-finite integrand values.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const Tolerance& tol = {});

/// Improper integral over [a, infinity) evaluated as a series of dyadic
/// blocks so that sum_series' convergence/divergence verdicts apply.
/// Non-finite block values count as divergence evidence.
SeriesResult integrate_tail_verdict(const std::function<double(double)>& f, double a,
                                    const Tolerance& tol = {});

/// Gamma function; poles at non-positive integers throw std::domain_error,
/// arguments past the double overflow point throw std::range_error.
double gamma_fn(double x);

/// log Gamma for x > 0.
double log_gamma(double x);

struct ExpFitResult {
    double rate = 0.0;       // decay rate, i.e. minus the slope of log v vs t
    double r_squared = 0.0;
    double log_prefactor = 0.0;
};

/// Least-squares fit of log v against t over the given points.
/// Requires >= 5 points, strictly increasing times, v > 0.
ExpFitResult fit_exp_rate(const std::vector<std::pair<double, double>>& curve);

} // namespace ergo
