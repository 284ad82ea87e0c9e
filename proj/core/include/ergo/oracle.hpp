#pragma once

#include "ergo/model.hpp"
#include "ergo/numerics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ergo {

/// Finite surrogate generator with its stationary vector. Birth-death
/// chains and diffusion meshes are stored as tridiagonal rate arrays, so
/// large meshes never materialize an N x N matrix; everything else is
/// dense row-major.
class GeneratorMatrix {
public:
    enum class Boundary { reflecting };

    static GeneratorMatrix from_dense(std::vector<double> q, int n,
                                      std::optional<std::vector<double>> pi = std::nullopt);
    /// up[i] = q_{i,i+1} (up[n-1] ignored), down[i] = q_{i,i-1} (down[0] ignored)
    static GeneratorMatrix from_tridiagonal(std::vector<double> up, std::vector<double> down);

    int size() const { return n_; }
    bool is_tridiagonal() const { return tridiagonal_; }
    double q(int i, int j) const;
    double exit_rate(int i) const { return -q(i, i); }
    double max_exit_rate() const;
    const std::vector<double>& pi() const { return pi_; }
    bool reversible(double tol = 1e-10) const;
    Boundary boundary() const { return Boundary::reflecting; }

    const std::vector<double>& tri_up() const { return up_; }
    const std::vector<double>& tri_down() const { return down_; }

private:
    GeneratorMatrix() = default;
    void validate() const;

    int n_ = 0;
    bool tridiagonal_ = false;
    std::vector<double> dense_;      // n*n when dense
    std::vector<double> up_, down_;  // when tridiagonal
    std::vector<double> pi_;
};

/// Time-indexed total-variation distances (half-L1 convention, range [0,1]).
struct DecayCurve {
    std::vector<double> times;
    std::vector<double> tv;                      // sup over starting states
    std::vector<std::vector<double>> per_state;  // per_state[k][x] at times[k]

    void check_invariants() const;
    std::string to_csv() const;
};

/// Reflecting truncation of a chain-family model: states 0..N-1, outgoing
/// rates beyond N-1 dropped (birth at N-1 removed).
GeneratorMatrix truncate_generator(const ModelSpec& spec, int N);

/// Finite-difference discretization of a(x) f'' + b(x) f' on [0, L] with
/// zero-flux (ghost point) stencils at both ends. Central coefficients
/// where positive, exponential-fitting (Scharfetter-Gummel) where advection
/// would break positivity.
GeneratorMatrix discretize_diffusion(const DiffusionSpec& spec, double h, double L);

/// Smallest nonzero eigenvalue of the pi-symmetrization of -Q. Reversible
/// input gives the exact L2 spectral gap; non-reversible input is bounded
/// through the additive symmetrization and flagged as a lower bound only.
struct GapResult {
    double value = 0.0;
    bool lower_bound_only = false;
};
GapResult spectral_gap(const GeneratorMatrix& Q);

/// Smallest eigenvalue of -Q with row/column x removed (the process killed
/// at x); lower-bounds the spectral gap.
double dirichlet_gap(const GeneratorMatrix& Q, int x);

/// E_x[tau_H^order] for every state (0 on H), via Q_{H^c} u_n = -n u_{n-1}.
std::vector<double> hitting_moments(const GeneratorMatrix& Q, const std::vector<int>& H, int order);

/// Transition row of e^{tQ} by uniformization; Poisson weights truncated
/// when the neglected tail is below `poisson_tail`.
std::vector<double> transition_row(const GeneratorMatrix& Q, int x, double t,
                                   double poisson_tail = 1e-14);

/// Survival probabilities P_x[tau_H > t] for all x (absorbing variant of Q).
std::vector<double> hitting_tail(const GeneratorMatrix& Q, const std::vector<int>& H, double t,
                                 double poisson_tail = 1e-14);

DecayCurve tv_decay(const GeneratorMatrix& Q, const std::vector<double>& times,
                    double poisson_tail = 1e-14);

/// fit_exp_rate on the sup curve restricted to [t_lo, t_hi].
double kappa_empirical(const DecayCurve& curve, double t_lo, double t_hi);

struct MainLemmaReport {
    double t = 0.0;
    int worst_state = -1;
    double lhs = 0.0;        // f(x,t)
    double rhs = 0.0;        // P_x[tau_H > t] + convolution term
    double allowance = 0.0;  // trapezoidal discretization slack
    bool holds = false;      // lhs <= rhs + allowance for every x not in H
    bool grid_adequate = false;  // allowance < 10% of rhs at the worst state
};

/// Checks f(x,t) <= P_x[tau_H > t] + int_0^t sup_{y in H} f(y, t-s) dF_{x,H}(s)
/// on a uniform grid of `grid_steps` sub-intervals of [0, t].
MainLemmaReport check_main_lemma(const GeneratorMatrix& Q, const std::vector<int>& H, double t,
                                 int grid_steps = 256);

} // namespace ergo
