#pragma once

#include "ergo/model.hpp"
#include "ergo/numerics.hpp"
#include "ergo/rate_bounds.hpp"

#include <map>
#include <vector>

namespace ergo {

// ---------------------------------------------------------------------------
// Birth-death chains
// ---------------------------------------------------------------------------

/// mu_0 = 1, mu_n = b_0...b_{n-1} / (a_1...a_n), computed in log space.
double bd_mu(const BirthDeathSpec& spec, long n);
double bd_log_mu(const BirthDeathSpec& spec, long n);

struct EntranceVerdict {
    bool is_entrance = false;
    bool conclusive = true;
    SumVerdict first_condition = SumVerdict::inconclusive;   // must diverge
    SumVerdict second_condition = SumVerdict::inconclusive;  // S, must converge
    double S = std::numeric_limits<double>::infinity();
};

/// Feller entrance-boundary test: sum_i mu_i sum_{j>=i} 1/(mu_j b_j) = inf
/// together with S = sum_i 1/(mu_i b_i) sum_{j>i} mu_j < inf.
EntranceVerdict bd_entrance_boundary(const BirthDeathSpec& spec, const Tolerance& tol = {});

struct SProfile {
    double S = 0.0;                   // = S_0
    double profile_extremum = 0.0;    // min_i max{S_i, Sbar_i}; bound = 1/extremum
    long arg = 0;
    std::vector<double> S_i;          // scanned prefix
    std::vector<double> Sbar_i;
};

/// S_i = sum_{k>=i} (mu_k b_k)^{-1} sum_{j>k} mu_j (decreasing in i) and
/// Sbar_i = sum_{k<i} (mu_k b_k)^{-1} sum_{j<=k} mu_j (increasing); the
/// best hitting-based rate bound is sup_i (max{S_i, Sbar_i})^{-1}, attained
/// at the crossing, so the extremum reported is the min of the max.
SProfile bd_S_profile(const BirthDeathSpec& spec, const Tolerance& tol = {});

struct DeltaResult {
    double delta = 0.0;
    long arg = 0;
    double lambda1_lower = 0.0;   // (4 delta)^{-1}
    double lambda1_upper = 0.0;   // delta^{-1}
};

/// delta = sup_n (sum_{i>=n} mu_i)(sum_{i<n} 1/(mu_i b_i)); the attached
/// interval [(4 delta)^{-1}, delta^{-1}] brackets the Dirichlet-at-0
/// eigenvalue, a lower bound for the chain's kappa = lambda1.
DeltaResult bd_delta(const BirthDeathSpec& spec, const Tolerance& tol = {});

/// M_{H_n} for H_n = {0..n}: equals S_n, non-increasing in n, -> 0.
HittingSummary bd_hitting_moment(const BirthDeathSpec& spec, long n, const Tolerance& tol = {});

/// Full bound record for a strongly ergodic birth-death chain.
RateBounds bd_rate_bounds(const BirthDeathSpec& spec, const Tolerance& tol = {});

// ---------------------------------------------------------------------------
// Single death chains
// ---------------------------------------------------------------------------

/// Memo table for the G_n^{(i)} recursion.
class SdGTable {
public:
    explicit SdGTable(const SingleDeathSpec& spec) : spec_(&spec) {}
    /// G_n^{(n)} = 1; G_n^{(i)} = q_{n,n-1}^{-1} sum_{k=n+1}^{i} q_n^{(k)} G_k^{(i)}.
    double G(long n, long i);
    /// q_n^{(k)} = sum_{j >= k} q_{nj}, k > n.
    double q_tail(long n, long k) const;

private:
    const SingleDeathSpec* spec_;
    std::map<std::pair<long, long>, double> memo_;
};

double sd_G(const SingleDeathSpec& spec, long n, long i, SdGTable& memo);

struct SdSResult {
    double S = std::numeric_limits<double>::infinity();
    SumVerdict verdict = SumVerdict::inconclusive;
    /// sup_{i>n} E_i tau_{H_n} <= remainder(n); remainder(0) = S
    std::vector<double> remainders;
};

/// S = sum_{k>=1} sum_{l>=k} G_k^{(l)} / q_{l,l-1}; finite iff strongly
/// ergodic, in which case kappa = lambda (R1).
SdSResult sd_S(const SingleDeathSpec& spec, const Tolerance& tol = {});

RateBounds sd_rate_bounds(const SingleDeathSpec& spec, const Tolerance& tol = {});

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

/// Node weights and subtree sums for a TreeSpec, rays included.
class TreeWeights {
public:
    TreeWeights(const TreeSpec& spec, const Tolerance& tol);
    double mu(int node) const;
    /// sum of mu over the subtree rooted at `node` (ray tails included)
    double subtree_weight(int node) const;
    /// m_j = (mu_j q_{jj*})^{-1} sum_{l in T_j} mu_l, j != root
    double m(int node) const;
    const TreeSpec& spec() const { return *spec_; }

private:
    const TreeSpec* spec_;
    std::vector<double> mu_;
    std::vector<double> subtree_;
    friend struct TreeScan;
};

double tree_m(const TreeSpec& spec, int node, const Tolerance& tol = {});

struct TreeBounds {
    RateBounds bounds;
    double S = 0.0;
    /// H_n construction sizes for n = 1,2,4,8,...: |H_n| such that
    /// every path's m-sum beyond H_n is <= 1/n
    std::vector<std::pair<long, long>> H_sizes;
};

/// S = sup over root-to-leaf (and ray) paths of the cumulative m-sums;
/// kappa = lambda1 >= 1/S.
TreeBounds tree_bounds(const TreeSpec& spec, const Tolerance& tol = {});

// ---------------------------------------------------------------------------
// Finite reversible chains (Theorem-style hitting bound)
// ---------------------------------------------------------------------------

class GeneratorMatrix;

struct Mc1Result {
    double bound = 0.0;       // sup_x (sup_i E_i tau_x)^{-1}
    int best_state = -1;
    std::vector<double> M_x;  // sup_{i != x} E_i tau_x per state
};

/// kappa >= sup_x (sup_{i != x} E_i tau_x)^{-1} on finite reversible chains;
/// the per-x hitting moments come from linear solves on Q with row/col x
/// removed. Throws on non-reversible input.
Mc1Result mc1_bound(const GeneratorMatrix& Q);

} // namespace ergo
