#include "ergo/chain_bounds.hpp"

#include "ergo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ergo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stopping rule for supremum scans over an infinite index (documented in
// the per-operation contracts): the running max must sit unchanged for
// kSupWindow consecutive indices while the current term has fallen below
// rel * max.
constexpr long kSupWindow = 64;

// Birth-death series engine. Every quantity is kept in ratio form relative
// to a local mu, so factorial-type growth or decay of the weights never
// overflows:
//   rho_k   = mu_k / mu_{k-1} = b_{k-1} / a_k
//   T_k     = sum_{j>k} mu_j / mu_k            (tail mass over mu_k)
//   U_k     = sum_{j<=k} mu_j / mu_k           (head mass over mu_k)
//   V_k     = mu_k * sum_{i<k} 1/(mu_i b_i)    (head resistance times mu_k)
class BdEngine {
public:
    BdEngine(const BirthDeathSpec& spec, const Tolerance& tol) : spec_(spec), tol_(tol) {}

    double b(long i) {
        ensure_rates(i);
        return b_[static_cast<std::size_t>(i)];
    }
    double a(long i) {
        ensure_rates(i);
        return a_[static_cast<std::size_t>(i)];
    }
    double rho(long k) {  // mu_k / mu_{k-1}, k >= 1
        return b(k - 1) / a(k);
    }

    // T_k with a forward lookahead and a geometric closing estimate; +inf
    // when the tail fails to contract.
    double T(long k) {
        if (k < static_cast<long>(T_.size())) return T_[static_cast<std::size_t>(k)];
        for (long j = static_cast<long>(T_.size()); j <= k; ++j)
            T_.push_back(tail_ratio_sum(j));
        return T_[static_cast<std::size_t>(k)];
    }

    double U(long k) {
        if (U_.empty()) U_.push_back(1.0);
        while (static_cast<long>(U_.size()) <= k) {
            const long j = static_cast<long>(U_.size());
            U_.push_back(1.0 + U_.back() / rho(j));
        }
        return U_[static_cast<std::size_t>(k)];
    }

    double V(long n) {
        if (V_.empty()) V_.push_back(0.0);
        while (static_cast<long>(V_.size()) <= n) {
            const long j = static_cast<long>(V_.size());  // computing V_j from V_{j-1}
            V_.push_back(rho(j) * (V_.back() + 1.0 / b(j - 1)));
        }
        return V_[static_cast<std::size_t>(n)];
    }

    double log_mu(long n) {
        if (logmu_.empty()) logmu_.push_back(0.0);
        while (static_cast<long>(logmu_.size()) <= n) {
            const long j = static_cast<long>(logmu_.size());
            logmu_.push_back(logmu_.back() + std::log(b(j - 1)) - std::log(a(j)));
        }
        return logmu_[static_cast<std::size_t>(n)];
    }
    double mu(long n) { return std::exp(log_mu(n)); }

    const Tolerance& tol() const { return tol_; }

private:
    const BirthDeathSpec& spec_;
    Tolerance tol_;
    std::vector<double> b_, a_, logmu_, T_, U_, V_;

    void ensure_rates(long i) {
        while (static_cast<long>(b_.size()) <= i) {
            const long j = static_cast<long>(b_.size());
            const double bv = spec_.b(j);
            const double av = j >= 1 ? spec_.a(j) : kInf;  // a_0 never used
            if (!std::isfinite(bv) || !(bv > 0.0))
                throw BoundError("birth rate not positive/finite at i=" + std::to_string(j),
                                 SumVerdict::inconclusive);
            if (j >= 1 && (!std::isfinite(av) || !(av > 0.0)))
                throw BoundError("death rate not positive/finite at i=" + std::to_string(j),
                                 SumVerdict::inconclusive);
            b_.push_back(bv);
            a_.push_back(av);
        }
    }

    double tail_ratio_sum(long k) {
        // sum over j > k of prod_{l=k+1}^{j} rho_l
        double prod = 1.0, sum = 0.0, last_ratio = 0.0;
        const int lookahead = 512;
        for (int s = 1; s <= lookahead; ++s) {
            last_ratio = rho(k + s);
            prod *= last_ratio;
            sum += prod;
            if (prod < 1e-18 * (sum + 1.0)) return sum;
            if (sum > kBlowUpThreshold) return kInf;
        }
        if (last_ratio < 0.9999) return sum + prod * last_ratio / (1.0 - last_ratio);
        return kInf;  // tail fails to contract within the lookahead
    }
};

SeriesResult sum_or_throw(const std::function<double(long)>& term, const Tolerance& tol,
                          const char* what) {
    SeriesResult r = sum_series(term, tol);
    if (r.verdict == SumVerdict::inconclusive)
        throw BoundError(std::string(what) + ": series inconclusive before caps were reached",
                         SumVerdict::inconclusive);
    return r;
}

} // namespace

double bd_log_mu(const BirthDeathSpec& spec, long n) {
    if (n < 0) throw std::invalid_argument("bd_mu: n must be >= 0");
    BdEngine e(spec, {});
    return e.log_mu(n);
}

double bd_mu(const BirthDeathSpec& spec, long n) {
    const double lm = bd_log_mu(spec, n);
    const double v = std::exp(lm);
    if (lm > 700.0)
        throw BoundError("bd_mu: overflow, log mu = " + std::to_string(lm), SumVerdict::diverged);
    return v;
}

EntranceVerdict bd_entrance_boundary(const BirthDeathSpec& spec, const Tolerance& tol) {
    BdEngine e(spec, tol);
    EntranceVerdict out;

    // first condition: sum_i mu_i sum_{j>=i} 1/(mu_j b_j) must diverge.
    // If the inner series (at i = 0) already diverges the whole double sum
    // does; otherwise sum the outer terms mu_i * TailInv_i.
    SeriesResult inner0;
    bool inner_diverged = false;
    try {
        inner0 = sum_series([&](long j) { return std::exp(-e.log_mu(j)) / e.b(j); }, tol);
    } catch (const std::domain_error&) {
        inner_diverged = true;  // terms overflowed; a non-negative series doing so diverges
    }
    if (inner_diverged || inner0.verdict == SumVerdict::diverged) {
        out.first_condition = SumVerdict::diverged;
    } else if (inner0.verdict == SumVerdict::inconclusive) {
        out.first_condition = SumVerdict::inconclusive;
    } else {
        // inner converged: TailInv_i by backward sweep over the certified range
        const long K = inner0.terms;
        std::vector<double> tail_inv(static_cast<std::size_t>(K) + 1);
        tail_inv[static_cast<std::size_t>(K)] = inner0.error_estimate;
        for (long j = K - 1; j >= 0; --j)
            tail_inv[static_cast<std::size_t>(j)] =
                tail_inv[static_cast<std::size_t>(j + 1)] + std::exp(-e.log_mu(j)) / e.b(j);
        SeriesResult outer = sum_series(
            [&](long i) {
                const double ti = i <= K ? tail_inv[static_cast<std::size_t>(i)]
                                         : tail_inv[static_cast<std::size_t>(K)];
                return e.mu(i) * ti;
            },
            tol);
        out.first_condition = outer.verdict;
    }

    // second condition: S = sum_k (1/(mu_k b_k)) sum_{j>k} mu_j finite.
    if (!std::isfinite(e.T(0))) {
        out.second_condition = SumVerdict::diverged;
    } else {
        SeriesResult s = sum_series([&](long k) { return e.T(k) / e.b(k); }, tol);
        out.second_condition = s.verdict;
        if (s.verdict == SumVerdict::converged) out.S = s.value;
    }

    out.conclusive = out.first_condition != SumVerdict::inconclusive &&
                     out.second_condition != SumVerdict::inconclusive;
    out.is_entrance = out.first_condition == SumVerdict::diverged &&
                      out.second_condition == SumVerdict::converged;
    return out;
}

namespace {

double bd_S_tail(BdEngine& e, long from, const Tolerance& tol, const char* what) {
    if (!std::isfinite(e.T(from)))
        throw BoundError(std::string(what) + ": mu tail diverges", SumVerdict::diverged);
    SeriesResult r =
        sum_or_throw([&](long k) { return e.T(from + k) / e.b(from + k); }, tol, what);
    if (r.verdict == SumVerdict::diverged)
        throw BoundError(std::string(what) + ": hitting series diverges", SumVerdict::diverged);
    return r.value;
}

} // namespace

SProfile bd_S_profile(const BirthDeathSpec& spec, const Tolerance& tol) {
    BdEngine e(spec, tol);
    SProfile out;
    out.S = bd_S_tail(e, 0, tol, "bd_S_profile");

    // S_i decreases from S to 0, Sbar_i increases from 0; the bound
    // sup_i (max{S_i, Sbar_i})^{-1} is realized at the crossing.
    double sbar = 0.0;  // Sbar_0
    double best = out.S;
    long best_i = 0;
    out.S_i.push_back(out.S);
    out.Sbar_i.push_back(0.0);
    double s_i = out.S;
    for (long i = 1; i <= 4096; ++i) {
        sbar += e.U(i - 1) / e.b(i - 1);  // Sbar_i = sum_{k<i} U_k / b_k
        s_i = bd_S_tail(e, i, tol, "bd_S_profile");
        out.S_i.push_back(s_i);
        out.Sbar_i.push_back(sbar);
        const double m = std::max(s_i, sbar);
        if (m < best) {
            best = m;
            best_i = i;
        }
        if (sbar >= s_i) break;  // past the crossing the max only grows
    }
    if (out.Sbar_i.back() < out.S_i.back())
        throw BoundError("bd_S_profile: no crossing located within the scan cap",
                         SumVerdict::inconclusive);
    out.profile_extremum = best;
    out.arg = best_i;
    return out;
}

DeltaResult bd_delta(const BirthDeathSpec& spec, const Tolerance& tol) {
    BdEngine e(spec, tol);
    if (!std::isfinite(e.T(0)))
        throw BoundError("bd_delta: mu tail diverges (not strongly ergodic)", SumVerdict::diverged);

    DeltaResult out;
    double best = 0.0;
    long best_n = 0, stable = 0;
    for (long n = 1; n < tol.max_terms; ++n) {
        const double d = (1.0 + e.T(n)) * e.V(n);
        if (!std::isfinite(d) || d > kBlowUpThreshold)
            throw BoundError("bd_delta: delta scan diverges", SumVerdict::diverged);
        if (d > best) {
            best = d;
            best_n = n;
            stable = 0;
        } else {
            ++stable;
        }
        if (stable >= kSupWindow && d <= tol.rel * best) break;
        if (n + 1 == tol.max_terms)
            throw BoundError("bd_delta: supremum scan hit the term cap", SumVerdict::inconclusive);
    }
    out.delta = best;
    out.arg = best_n;
    out.lambda1_lower = 1.0 / (4.0 * best);
    out.lambda1_upper = 1.0 / best;
    return out;
}

HittingSummary bd_hitting_moment(const BirthDeathSpec& spec, long n, const Tolerance& tol) {
    if (n < 0) throw std::invalid_argument("bd_hitting_moment: n must be >= 0");
    BdEngine e(spec, tol);
    HittingSummary out;
    out.target = "H_" + std::to_string(n) + " = {0.." + std::to_string(n) + "}";
    if (!std::isfinite(e.T(n))) {
        out.moment1 = kInf;
        out.verdict = SumVerdict::diverged;
        return out;
    }
    out.moment1 = bd_S_tail(e, n, tol, "bd_hitting_moment");
    out.verdict = SumVerdict::converged;
    return out;
}

RateBounds bd_rate_bounds(const BirthDeathSpec& spec, const Tolerance& tol) {
    EntranceVerdict ev = bd_entrance_boundary(spec, tol);
    if (!ev.conclusive)
        throw BoundError("bd_rate_bounds: entrance-boundary test inconclusive",
                         SumVerdict::inconclusive);
    if (!ev.is_entrance)
        throw BoundError("bd_rate_bounds: no entrance boundary (not strongly ergodic)",
                         SumVerdict::diverged);

    SProfile prof = bd_S_profile(spec, tol);
    DeltaResult dl = bd_delta(spec, tol);

    RateBounds rb;
    rb.S = prof.S;
    rb.delta = dl.delta;
    rb.lambda1_lower = dl.lambda1_lower;
    rb.lambda1_upper = dl.lambda1_upper;
    const double hit_bound = 1.0 / prof.profile_extremum;
    rb.kappa_lower = std::max(dl.lambda1_lower, hit_bound);
    rb.provenance.push_back({"lambda1_lower", dl.lambda1_lower, "(4 delta)^{-1}"});
    rb.provenance.push_back({"lambda1_upper", dl.lambda1_upper, "delta^{-1}"});
    rb.provenance.push_back(
        {"kappa_lower", hit_bound, "sup_i (max{S_i, Sbar_i})^{-1} at i=" + std::to_string(prof.arg)});

    // R1 witness: the first n with S_n <= delta gives 1/M_{H_n} >= delta^{-1},
    // an upper bound for the Dirichlet-at-0 eigenvalue. kappa = lambda1 is
    // certified only with a witness; without one the record falls back to
    // the min-combination.
    BdEngine e(spec, tol);
    for (long n = 0; n <= 4096; ++n) {
        const double sn = bd_S_tail(e, n, tol, "bd_rate_bounds");
        if (sn <= dl.delta) {
            rb.kappa_equals_lambda1 = true;
            rb.M_H = sn;
            rb.H_description = "H_" + std::to_string(n) + " = {0.." + std::to_string(n) + "}";
            rb.provenance.push_back({"M_H", sn, "R1 witness n=" + std::to_string(n)});
            break;
        }
    }
    if (!rb.kappa_equals_lambda1) {
        const CombinedBound cb = combine_bounds(dl.lambda1_lower, prof.S);
        rb.kappa_lower = std::max(rb.kappa_lower, cb.kappa_lower);
        rb.M_H = prof.S;
        rb.H_description = "H_0 = {0}";
        rb.provenance.push_back({"kappa_lower", cb.kappa_lower, "min{lambda1_lower, 1/M_H}"});
    }
    rb.check_invariants();
    return rb;
}

// ---------------------------------------------------------------------------
// Single death
// ---------------------------------------------------------------------------

double SdGTable::q_tail(long n, long k) const {
    double s = 0.0;
    for (long j = k; j <= n + spec_->max_jump; ++j) s += spec_->rate(n, j);
    return s;
}

double SdGTable::G(long n, long i) {
    if (n == i) return 1.0;
    if (n > i || n < 1) throw std::invalid_argument("sd_G: need 1 <= n <= i");
    auto it = memo_.find({n, i});
    if (it != memo_.end()) return it->second;
    const double qd = spec_->rate(n, n - 1);
    if (!(qd > 0.0))
        throw BoundError("sd_G: q_{n,n-1} vanishes at n=" + std::to_string(n), SumVerdict::diverged);
    double s = 0.0;
    const long kmax = std::min(i, n + spec_->max_jump);
    for (long k = n + 1; k <= kmax; ++k) {
        const double qt = q_tail(n, k);
        if (qt != 0.0) s += qt * G(k, i);
    }
    const double v = s / qd;
    memo_.emplace(std::make_pair(n, i), v);
    return v;
}

double sd_G(const SingleDeathSpec& spec, long n, long i, SdGTable& memo) {
    (void)spec;
    return memo.G(n, i);
}

SdSResult sd_S(const SingleDeathSpec& spec, const Tolerance& tol) {
    SdGTable memo(spec);
    SdSResult out;
    // S = sum_{l>=1} (1/q_{l,l-1}) sum_{k=1}^{l} G_k^{(l)}
    auto col_term = [&](long n0, long l) {
        double col = 0.0;
        for (long k = n0 + 1; k <= l; ++k) col += memo.G(k, l);
        return col / spec.rate(l, l - 1);
    };
    SeriesResult s = sum_series([&](long j) { return col_term(0, j + 1); }, tol);
    out.verdict = s.verdict;
    if (s.verdict != SumVerdict::converged) return out;
    out.S = s.value;

    out.remainders.push_back(s.value);
    for (long n = 1; n <= 8; ++n) {
        SeriesResult r = sum_series([&](long j) { return col_term(n, n + 1 + j); }, tol);
        if (r.verdict != SumVerdict::converged) break;
        out.remainders.push_back(r.value);
    }
    return out;
}

RateBounds sd_rate_bounds(const SingleDeathSpec& spec, const Tolerance& tol) {
    SdSResult s = sd_S(spec, tol);
    if (s.verdict == SumVerdict::diverged)
        throw BoundError("sd_rate_bounds: S diverges (not strongly ergodic)", SumVerdict::diverged);
    if (s.verdict != SumVerdict::converged)
        throw BoundError("sd_rate_bounds: S inconclusive", SumVerdict::inconclusive);
    RateBounds rb;
    rb.S = s.S;
    rb.kappa_equals_lambda1 = true;
    rb.M_H = s.S;
    rb.H_description = "H_0 = {0}";
    rb.provenance.push_back({"S", s.S, "single-death double series"});
    rb.provenance.push_back({"kappa", 0.0, "kappa = lambda (R1): sup_{i>n} E_i tau_{H_n} -> 0"});
    for (std::size_t n = 0; n < s.remainders.size(); ++n)
        rb.provenance.push_back({"remainder_" + std::to_string(n), s.remainders[n],
                                 "sup_{i>n} E_i tau_{H_n} bound"});
    rb.check_invariants();
    return rb;
}

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

namespace {

// T_k along a ray: sum_{j>k} prod_{l=k+1..j} up(l)/down(l), with a
// geometric closing estimate past the lookahead
double ray_tail(const TreeSpec::Ray& ray, long k, const Tolerance&) {
    double prod = 1.0, sum = 0.0, r = 0.0;
    for (int s = 1; s <= 512; ++s) {
        const long l = k + s;
        r = ray.up(static_cast<double>(l)) / ray.down(static_cast<double>(l));
        prod *= r;
        sum += prod;
        if (prod < 1e-18 * (sum + 1.0)) return sum;
        if (sum > kBlowUpThreshold)
            throw BoundError("tree: ray subtree weight diverges", SumVerdict::diverged);
    }
    if (r < 0.9999) return sum + prod * r / (1.0 - r);
    throw BoundError("tree: ray subtree weight fails to contract", SumVerdict::inconclusive);
}

} // namespace

TreeWeights::TreeWeights(const TreeSpec& spec, const Tolerance& tol) : spec_(&spec) {
    const long n = spec.size();
    mu_.assign(static_cast<std::size_t>(n), 0.0);
    mu_[0] = 1.0;
    for (long i = 1; i < n; ++i)
        mu_[static_cast<std::size_t>(i)] = mu_[static_cast<std::size_t>(spec.parent[static_cast<std::size_t>(i)])] *
                                           spec.up[static_cast<std::size_t>(i)] /
                                           spec.down[static_cast<std::size_t>(i)];

    subtree_.assign(static_cast<std::size_t>(n), 0.0);
    for (long i = n - 1; i >= 0; --i) {
        double s = mu_[static_cast<std::size_t>(i)];
        for (long j = i + 1; j < n; ++j)
            if (spec.parent[static_cast<std::size_t>(j)] == i) s += subtree_[static_cast<std::size_t>(j)];
        subtree_[static_cast<std::size_t>(i)] = s;
    }
    // ray tails add to the attach node and all its ancestors
    for (const auto& ray : spec.rays) {
        const double w = mu_[static_cast<std::size_t>(ray.attach)] *
                         (ray.up(1.0) / ray.down(1.0)) * (1.0 + ray_tail(ray, 1, tol));
        for (int v = ray.attach; v != -1; v = spec_->parent[static_cast<std::size_t>(v)])
            subtree_[static_cast<std::size_t>(v)] += w;
    }
}

double TreeWeights::mu(int node) const { return mu_[static_cast<std::size_t>(node)]; }
double TreeWeights::subtree_weight(int node) const { return subtree_[static_cast<std::size_t>(node)]; }

double TreeWeights::m(int node) const {
    if (node == 0) throw std::invalid_argument("tree_m: undefined at the root");
    return subtree_[static_cast<std::size_t>(node)] /
           (mu_[static_cast<std::size_t>(node)] * spec_->down[static_cast<std::size_t>(node)]);
}

double tree_m(const TreeSpec& spec, int node, const Tolerance& tol) {
    TreeWeights w(spec, tol);
    return w.m(node);
}

TreeBounds tree_bounds(const TreeSpec& spec, const Tolerance& tol) {
    TreeWeights w(spec, tol);
    const long n = spec.size();
    auto ch = spec.children();

    // cumulative m-sums along root paths
    std::vector<double> cum(static_cast<std::size_t>(n), 0.0);
    double S = 0.0;
    for (long i = 1; i < n; ++i) {
        cum[static_cast<std::size_t>(i)] =
            cum[static_cast<std::size_t>(spec.parent[static_cast<std::size_t>(i)])] + w.m(static_cast<int>(i));
        S = std::max(S, cum[static_cast<std::size_t>(i)]);
    }

    // rays: m along the ray in ratio form, m_ray(k) = (1 + T_ray(k)) / down(k)
    struct RayScan {
        std::vector<double> partial;  // cumulative m-sums at depths 1..K
        double total = 0.0;           // limit of the cumulative sum
    };
    std::vector<RayScan> ray_scans;
    for (const auto& ray : spec.rays) {
        RayScan rs;
        double c = cum[static_cast<std::size_t>(ray.attach)];
        SeriesResult tot = sum_series(
            [&](long j) {
                const long k = j + 1;
                return (1.0 + ray_tail(ray, k, tol)) / ray.down(static_cast<double>(k));
            },
            tol);
        if (tot.verdict != SumVerdict::converged)
            throw BoundError("tree_bounds: m-sum diverges along a ray", tot.verdict);
        for (long k = 1; k <= std::min<long>(tot.terms, 4096); ++k) {
            c += (1.0 + ray_tail(ray, k, tol)) / ray.down(static_cast<double>(k));
            rs.partial.push_back(c);
        }
        rs.total = cum[static_cast<std::size_t>(ray.attach)] + tot.value;
        S = std::max(S, rs.total);
        ray_scans.push_back(std::move(rs));
    }

    TreeBounds out;
    out.S = S;
    out.bounds.S = S;
    out.bounds.kappa_equals_lambda1 = true;
    out.bounds.lambda1_lower = 1.0 / S;
    out.bounds.kappa_lower = 1.0 / S;
    out.bounds.provenance.push_back({"kappa_lower", 1.0 / S, "1/S over tree paths"});

    // H_n: per path, the shallowest node beyond which the remaining m-sum
    // is <= 1/n; the union of those path prefixes
    for (long nn = 1; nn <= 64; nn *= 2) {
        const double eps = 1.0 / static_cast<double>(nn);
        std::vector<char> keep(static_cast<std::size_t>(n), 0);
        keep[0] = 1;
        for (long i = 1; i < n; ++i) {
            if (!ch[static_cast<std::size_t>(i)].empty()) continue;  // leaves carry the path info
            // remaining sum past node v on the path to leaf i is cum[i]-cum[v]
            for (int v = static_cast<int>(i); v != -1; v = spec.parent[static_cast<std::size_t>(v)]) {
                if (cum[static_cast<std::size_t>(i)] - cum[static_cast<std::size_t>(v)] <= eps) {
                    for (int u = v; u != -1; u = spec.parent[static_cast<std::size_t>(u)])
                        keep[static_cast<std::size_t>(u)] = 1;
                    break;
                }
            }
        }
        long size = 0;
        for (char k : keep) size += k;
        // ray contributions: depth along the ray needed to leave tail <= eps
        for (std::size_t r = 0; r < ray_scans.size(); ++r) {
            const auto& rs = ray_scans[r];
            long depth = 0;
            while (depth < static_cast<long>(rs.partial.size()) &&
                   rs.total - rs.partial[static_cast<std::size_t>(depth)] > eps)
                ++depth;
            size += depth + 1;
        }
        out.H_sizes.emplace_back(nn, size);
    }
    out.bounds.check_invariants();
    return out;
}

// ---------------------------------------------------------------------------
// Theorem-style hitting bound on finite reversible chains
// ---------------------------------------------------------------------------

Mc1Result mc1_bound(const GeneratorMatrix& Q) {
    if (!Q.reversible(1e-10))
        throw std::invalid_argument("mc1_bound: generator is not reversible w.r.t. its stationary vector");
    const int n = Q.size();
    if (n < 2) throw std::invalid_argument("mc1_bound: need at least 2 states");

    Mc1Result out;
    out.M_x.resize(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        std::vector<int> H{x};
        std::vector<double> u = hitting_moments(Q, H, 1);
        double mx = 0.0;
        for (int i = 0; i < n; ++i)
            if (i != x) mx = std::max(mx, u[static_cast<std::size_t>(i)]);
        out.M_x[static_cast<std::size_t>(x)] = mx;
        const double bound = 1.0 / mx;
        if (bound > out.bound) {
            out.bound = bound;
            out.best_state = x;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared bound types
// ---------------------------------------------------------------------------

void RateBounds::check_invariants() const {
    if (lambda1_upper && lambda1_lower > *lambda1_upper * (1.0 + 1e-12))
        throw std::logic_error("RateBounds: lambda1_lower exceeds lambda1_upper");
    if (kappa_lower < 0.0) throw std::logic_error("RateBounds: negative kappa_lower");
}

void HittingSummary::check_invariants() const {
    if (verdict == SumVerdict::converged && !(moment1 >= 0.0))
        throw std::logic_error("HittingSummary: negative moment");
    if (exp_moment && !(exp_moment->first * moment1 < 1.0))
        throw std::logic_error("HittingSummary: beta * moment1 must be < 1");
}

CombinedBound combine_bounds(double lambda, double M_H) {
    if (!(lambda > 0.0) || !(M_H > 0.0))
        throw std::invalid_argument("combine_bounds: lambda and M_H must be positive");
    CombinedBound out;
    const double inv = 1.0 / M_H;
    if (lambda <= inv) {
        out.kappa_lower = lambda;
        out.which = CombineCase::R1;  // ties classify as R1
    } else {
        out.kappa_lower = inv;
        out.which = CombineCase::R2;
    }
    return out;
}

double ExpMomentBound::tail_at(double t) const { return bound * std::exp(-beta * t); }

ExpMomentBound moment_to_exp(double moment1, double beta) {
    if (!(moment1 > 0.0)) throw std::invalid_argument("moment_to_exp: moment must be positive");
    if (!(beta > 0.0) || !(beta < 1.0 / moment1))
        throw std::invalid_argument("moment_to_exp: need 0 < beta < 1/moment");
    return ExpMomentBound{beta, 1.0 / (1.0 - beta * moment1)};
}

double tail_to_moment(double t0, double delta) {
    if (!(t0 > 0.0)) throw std::invalid_argument("tail_to_moment: t0 must be positive");
    if (!(delta >= 0.0) || !(delta < 1.0))
        throw std::invalid_argument("tail_to_moment: delta must lie in [0,1)");
    return t0 / (1.0 - delta);
}

} // namespace ergo
