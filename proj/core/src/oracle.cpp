#include "ergo/oracle.hpp"

#include "ergo/chain_bounds.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ergo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("oracle: " + msg); }

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigenvalues by Sturm bisection. Counts eigenvalues
// of (diag, off) below x via the standard shifted LDL^T recurrence.
// ---------------------------------------------------------------------------

int sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double x) {
    const std::size_t n = diag.size();
    int count = 0;
    double d = diag[0] - x;
    if (d < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        const double e = off[i - 1];
        double denom = d;
        if (std::abs(denom) < 1e-300) denom = denom < 0.0 ? -1e-300 : 1e-300;
        d = (diag[i] - x) - e * e / denom;
        if (d < 0.0) ++count;
    }
    return count;
}

// k-th smallest eigenvalue (0-based) of the symmetric tridiagonal matrix
double sturm_eigenvalue(const std::vector<double>& diag, const std::vector<double>& off, int k) {
    // Gershgorin bounds
    double lo = kInf, hi = -kInf;
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(off[i - 1]);
        if (i + 1 < n) r += std::abs(off[i]);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    lo -= 1e-12;
    hi += 1e-12;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(diag, off, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// pi-symmetrization of -Q restricted to `keep` (dense path)
Eigen::MatrixXd symmetrized_dense(const GeneratorMatrix& Q, const std::vector<int>& keep) {
    const int m = static_cast<int>(keep.size());
    Eigen::MatrixXd S(m, m);
    const auto& pi = Q.pi();
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            const int i = keep[static_cast<std::size_t>(r)];
            const int j = keep[static_cast<std::size_t>(c)];
            S(r, c) = -Q.q(i, j) * std::sqrt(pi[static_cast<std::size_t>(i)] /
                                             pi[static_cast<std::size_t>(j)]);
        }
    // enforce exact symmetry against roundoff
    S = 0.5 * (S + S.transpose()).eval();
    return S;
}

void symmetrized_tridiagonal(const GeneratorMatrix& Q, int drop_state,
                             std::vector<double>& diag, std::vector<double>& off) {
    const int n = Q.size();
    const auto& up = Q.tri_up();
    const auto& down = Q.tri_down();
    diag.clear();
    off.clear();
    // dropping a state splits a tridiagonal chain; only the prefix/suffix
    // cases are needed (drop_state < 0 keeps everything)
    int lo = 0, hi = n;
    if (drop_state == 0) lo = 1;
    else if (drop_state == n - 1) hi = n - 1;
    else if (drop_state >= 0) fail("tridiagonal dirichlet gap supports boundary states only");
    for (int i = lo; i < hi; ++i) {
        double d = 0.0;
        if (i > 0) d += down[static_cast<std::size_t>(i)];
        if (i < n - 1) d += up[static_cast<std::size_t>(i)];
        diag.push_back(d);
        if (i + 1 < hi)
            off.push_back(-std::sqrt(up[static_cast<std::size_t>(i)] *
                                     down[static_cast<std::size_t>(i + 1)]));
    }
}

// Poisson(lambda) weights w_m for m = 0..m_max with neglected tail < tail_tol
std::vector<double> poisson_weights(double lambda, double tail_tol) {
    std::vector<double> w;
    if (lambda <= 0.0) {
        w.push_back(1.0);
        return w;
    }
    const double loglam = std::log(lambda);
    // extend until the cumulative mass reaches 1 - tail_tol
    double cum = 0.0;
    const long hard_cap = 64 + static_cast<long>(lambda + 12.0 * std::sqrt(lambda) + 40.0) * 2;
    for (long m = 0; m <= hard_cap; ++m) {
        const double lw = -lambda + static_cast<double>(m) * loglam - std::lgamma(static_cast<double>(m) + 1.0);
        const double wm = std::exp(lw);
        w.push_back(wm);
        cum += wm;
        if (cum >= 1.0 - tail_tol && m > lambda) break;
    }
    return w;
}

std::vector<double> row_times_kernel(const GeneratorMatrix& Q, const std::vector<double>& v,
                                     double inv_lambda, const std::vector<char>& absorbed) {
    const int n = Q.size();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    if (Q.is_tridiagonal()) {
        const auto& up = Q.tri_up();
        const auto& down = Q.tri_down();
        for (int i = 0; i < n; ++i) {
            const double vi = v[static_cast<std::size_t>(i)];
            if (vi == 0.0) continue;
            if (!absorbed.empty() && absorbed[static_cast<std::size_t>(i)]) {
                out[static_cast<std::size_t>(i)] += vi;  // kernel row = e_i
                continue;
            }
            double stay = 1.0;
            if (i < n - 1) {
                const double p = up[static_cast<std::size_t>(i)] * inv_lambda;
                out[static_cast<std::size_t>(i + 1)] += vi * p;
                stay -= p;
            }
            if (i > 0) {
                const double p = down[static_cast<std::size_t>(i)] * inv_lambda;
                out[static_cast<std::size_t>(i - 1)] += vi * p;
                stay -= p;
            }
            out[static_cast<std::size_t>(i)] += vi * stay;
        }
        return out;
    }
    for (int i = 0; i < n; ++i) {
        const double vi = v[static_cast<std::size_t>(i)];
        if (vi == 0.0) continue;
        if (!absorbed.empty() && absorbed[static_cast<std::size_t>(i)]) {
            out[static_cast<std::size_t>(i)] += vi;
            continue;
        }
        for (int j = 0; j < n; ++j) {
            const double kij = (i == j) ? 1.0 + Q.q(i, i) * inv_lambda : Q.q(i, j) * inv_lambda;
            if (kij != 0.0) out[static_cast<std::size_t>(j)] += vi * kij;
        }
    }
    return out;
}

// row x of e^{tQ}, optionally with the states in `absorbed` made absorbing
std::vector<double> uniformized_row(const GeneratorMatrix& Q, int x, double t, double tail_tol,
                                    const std::vector<char>& absorbed) {
    const int n = Q.size();
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    v[static_cast<std::size_t>(x)] = 1.0;
    if (t == 0.0) return v;
    const double lam = Q.max_exit_rate() * (1.0 + 1e-12) + 1e-300;
    const double lt = lam * t;
    if (!std::isfinite(lt) || lt > 5e6)
        throw std::range_error("oracle: uniformization rate * time too large, rescale times");
    const std::vector<double> w = poisson_weights(lt, tail_tol);
    const double inv_lambda = 1.0 / lam;
    for (std::size_t m = 0; m < w.size(); ++m) {
        if (m > 0) v = row_times_kernel(Q, v, inv_lambda, absorbed);
        if (w[m] > 0.0)
            for (int j = 0; j < n; ++j) acc[static_cast<std::size_t>(j)] += w[m] * v[static_cast<std::size_t>(j)];
    }
    return acc;
}

double half_l1_to_pi(const std::vector<double>& row, const std::vector<double>& pi) {
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += std::abs(row[j] - pi[j]);
    return 0.5 * s;
}

} // namespace

// ---------------------------------------------------------------------------
// GeneratorMatrix
// ---------------------------------------------------------------------------

double GeneratorMatrix::q(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_) fail("index out of range");
    if (!tridiagonal_) return dense_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
                                     static_cast<std::size_t>(j)];
    if (j == i + 1) return up_[static_cast<std::size_t>(i)];
    if (j == i - 1) return down_[static_cast<std::size_t>(i)];
    if (j == i) {
        double d = 0.0;
        if (i < n_ - 1) d += up_[static_cast<std::size_t>(i)];
        if (i > 0) d += down_[static_cast<std::size_t>(i)];
        return -d;
    }
    return 0.0;
}

double GeneratorMatrix::max_exit_rate() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i) m = std::max(m, exit_rate(i));
    return m;
}

bool GeneratorMatrix::reversible(double tol) const {
    if (tridiagonal_) return true;  // detailed balance holds by construction of pi
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) {
            const double f = pi_[static_cast<std::size_t>(i)] * q(i, j);
            const double b = pi_[static_cast<std::size_t>(j)] * q(j, i);
            if (std::abs(f - b) > tol * std::max(1.0, std::max(std::abs(f), std::abs(b))))
                return false;
        }
    return true;
}

void GeneratorMatrix::validate() const {
    for (int i = 0; i < n_; ++i) {
        double row = 0.0;
        for (int j = 0; j < n_; ++j) {
            const double v = q(i, j);
            if (!std::isfinite(v)) fail("non-finite entry");
            if (i != j && v < 0.0) fail("negative off-diagonal");
            row += v;
        }
        if (std::abs(row) > 1e-12 * std::max(1.0, exit_rate(i)))
            fail("row sum " + std::to_string(row) + " at state " + std::to_string(i));
    }
    double spi = 0.0;
    for (double p : pi_) {
        if (!(p > 0.0)) fail("stationary vector must be strictly positive");
        spi += p;
    }
    if (std::abs(spi - 1.0) > 1e-10) fail("stationary vector does not sum to 1");
    // pi Q = 0
    for (int j = 0; j < n_; ++j) {
        double s = 0.0;
        for (int i = 0; i < n_; ++i) s += pi_[static_cast<std::size_t>(i)] * q(i, j);
        if (std::abs(s) > 1e-10 * max_exit_rate()) fail("pi Q != 0 at column " + std::to_string(j));
    }
}

GeneratorMatrix GeneratorMatrix::from_tridiagonal(std::vector<double> up, std::vector<double> down) {
    GeneratorMatrix g;
    g.n_ = static_cast<int>(up.size());
    if (g.n_ < 2) fail("need at least 2 states");
    if (down.size() != up.size()) fail("up/down size mismatch");
    g.tridiagonal_ = true;
    g.up_ = std::move(up);
    g.down_ = std::move(down);
    g.up_[static_cast<std::size_t>(g.n_ - 1)] = 0.0;
    g.down_[0] = 0.0;
    for (int i = 0; i < g.n_; ++i) {
        if (i < g.n_ - 1 && !(g.up_[static_cast<std::size_t>(i)] > 0.0)) fail("up rates must be > 0");
        if (i > 0 && !(g.down_[static_cast<std::size_t>(i)] > 0.0)) fail("down rates must be > 0");
    }
    // detailed balance: log pi_{i+1} = log pi_i + log(up_i / down_{i+1})
    std::vector<double> logpi(static_cast<std::size_t>(g.n_), 0.0);
    for (int i = 1; i < g.n_; ++i)
        logpi[static_cast<std::size_t>(i)] = logpi[static_cast<std::size_t>(i - 1)] +
                                             std::log(g.up_[static_cast<std::size_t>(i - 1)]) -
                                             std::log(g.down_[static_cast<std::size_t>(i)]);
    const double mx = *std::max_element(logpi.begin(), logpi.end());
    double z = 0.0;
    g.pi_.resize(static_cast<std::size_t>(g.n_));
    for (int i = 0; i < g.n_; ++i) {
        g.pi_[static_cast<std::size_t>(i)] = std::exp(logpi[static_cast<std::size_t>(i)] - mx);
        z += g.pi_[static_cast<std::size_t>(i)];
    }
    for (double& p : g.pi_) p /= z;
    for (double& p : g.pi_)
        if (!(p > 0.0)) p = std::numeric_limits<double>::min();  // underflowed far tail
    return g;
}

GeneratorMatrix GeneratorMatrix::from_dense(std::vector<double> q, int n,
                                            std::optional<std::vector<double>> pi) {
    GeneratorMatrix g;
    if (n < 2) fail("need at least 2 states");
    if (q.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) fail("bad dense size");
    g.n_ = n;
    g.dense_ = std::move(q);
    if (pi) {
        g.pi_ = std::move(*pi);
        if (static_cast<int>(g.pi_.size()) != n) fail("pi size mismatch");
    } else {
        // null-space solve: pi Q = 0, sum pi = 1
        Eigen::MatrixXd A(n + 1, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) A(j, i) = g.dense_[static_cast<std::size_t>(i) * n + j];
        for (int i = 0; i < n; ++i) A(n, i) = 1.0;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
        rhs(n) = 1.0;
        Eigen::VectorXd p = A.colPivHouseholderQr().solve(rhs);
        g.pi_.assign(p.data(), p.data() + n);
    }
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// Construction from model specs
// ---------------------------------------------------------------------------

GeneratorMatrix truncate_generator(const ModelSpec& spec, int N) {
    if (N < 2) fail("truncation must keep at least 2 states");
    if (const auto* bd = std::get_if<BirthDeathSpec>(&spec)) {
        std::vector<double> up(static_cast<std::size_t>(N)), down(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) {
            up[static_cast<std::size_t>(i)] = i < N - 1 ? bd->b(i) : 0.0;
            down[static_cast<std::size_t>(i)] = i > 0 ? bd->a(i) : 0.0;
        }
        return GeneratorMatrix::from_tridiagonal(std::move(up), std::move(down));
    }
    if (const auto* sd = std::get_if<SingleDeathSpec>(&spec)) {
        std::vector<double> q(static_cast<std::size_t>(N) * static_cast<std::size_t>(N), 0.0);
        for (int i = 0; i < N; ++i) {
            double out = 0.0;
            for (int j = 0; j < N; ++j) {
                if (j == i) continue;
                const double v = sd->rate(i, j);
                q[static_cast<std::size_t>(i) * N + static_cast<std::size_t>(j)] = v;
                out += v;
            }
            q[static_cast<std::size_t>(i) * N + static_cast<std::size_t>(i)] = -out;
        }
        return GeneratorMatrix::from_dense(std::move(q), N);
    }
    if (const auto* tr = std::get_if<TreeSpec>(&spec)) {
        const int n = static_cast<int>(tr->size());
        (void)N;  // trees are truncated at their explicit node set
        std::vector<double> q(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
        for (int i = 1; i < n; ++i) {
            const int p = tr->parent[static_cast<std::size_t>(i)];
            q[static_cast<std::size_t>(p) * n + static_cast<std::size_t>(i)] =
                tr->up[static_cast<std::size_t>(i)];
            q[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(p)] =
                tr->down[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < n; ++i) {
            double out = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) out += q[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
            q[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(i)] = -out;
        }
        return GeneratorMatrix::from_dense(std::move(q), n);
    }
    if (const auto* df = std::get_if<DiffusionSpec>(&spec)) {
        // default mesh when called through the generic chain path
        return discretize_diffusion(*df, 1.0 / N, 8.0);
    }
    fail("family does not support truncation");
}

GeneratorMatrix discretize_diffusion(const DiffusionSpec& spec, double h, double L) {
    if (spec.is_radial()) fail("radial comparison data cannot be discretized directly");
    if (!(h > 0.0) || !(L > h)) fail("mesh requires 0 < h < L");
    const int N = static_cast<int>(std::lround(L / h)) + 1;
    if (N < 8) fail("mesh too coarse");
    std::vector<double> up(static_cast<std::size_t>(N), 0.0), down(static_cast<std::size_t>(N), 0.0);
    for (int i = 0; i < N; ++i) {
        const double x = static_cast<double>(i) * h;
        const double a = spec.a(x);
        const double b = spec.b(x);
        if (!(a > 0.0)) fail("a(x) <= 0 on the mesh at x = " + std::to_string(x));
        if (i == 0) {
            up[0] = 2.0 * a / (h * h);  // zero-flux ghost point
            continue;
        }
        if (i == N - 1) {
            down[static_cast<std::size_t>(i)] = 2.0 * a / (h * h);
            continue;
        }
        const double peclet = b * h / a;
        double qu, qd;
        if (std::abs(peclet) < 1.8) {
            qu = a / (h * h) + b / (2.0 * h);
            qd = a / (h * h) - b / (2.0 * h);
        } else {
            // exponential fitting keeps the rates positive
            const double e = std::expm1(peclet);
            qu = (b / h) * (1.0 / -std::expm1(-peclet));
            qd = (b / h) * (1.0 / e);
        }
        if (!(qu > 0.0) || !(qd > 0.0))
            fail("discretization produced a non-positive rate at x = " + std::to_string(x) +
                 "; refine the mesh");
        up[static_cast<std::size_t>(i)] = qu;
        down[static_cast<std::size_t>(i)] = qd;
    }
    return GeneratorMatrix::from_tridiagonal(std::move(up), std::move(down));
}

// ---------------------------------------------------------------------------
// Eigenvalues
// ---------------------------------------------------------------------------

GapResult spectral_gap(const GeneratorMatrix& Q) {
    GapResult out;
    if (Q.is_tridiagonal()) {
        std::vector<double> diag, off;
        symmetrized_tridiagonal(Q, -1, diag, off);
        out.value = sturm_eigenvalue(diag, off, 1);
        return out;
    }
    const int n = Q.size();
    std::vector<int> keep(static_cast<std::size_t>(n));
    std::iota(keep.begin(), keep.end(), 0);
    if (Q.reversible(1e-10)) {
        Eigen::MatrixXd S = symmetrized_dense(Q, keep);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
        out.value = es.eigenvalues()(1);
        return out;
    }
    // additive symmetrization (Q + Q*)/2; a lower bound for the decay rate
    Eigen::MatrixXd S = symmetrized_dense(Q, keep);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()),
                                                      Eigen::EigenvaluesOnly);
    out.value = es.eigenvalues()(1);
    out.lower_bound_only = true;
    return out;
}

double dirichlet_gap(const GeneratorMatrix& Q, int x) {
    const int n = Q.size();
    if (x < 0 || x >= n) fail("dirichlet_gap: state out of range");
    if (Q.is_tridiagonal() && (x == 0 || x == n - 1)) {
        std::vector<double> diag, off;
        symmetrized_tridiagonal(Q, x, diag, off);
        return sturm_eigenvalue(diag, off, 0);
    }
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (i != x) keep.push_back(i);
    Eigen::MatrixXd S = symmetrized_dense(Q, keep);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// Hitting moments
// ---------------------------------------------------------------------------

std::vector<double> hitting_moments(const GeneratorMatrix& Q, const std::vector<int>& H, int order) {
    const int n = Q.size();
    if (H.empty()) fail("hitting_moments: H must be non-empty");
    if (order < 1) fail("hitting_moments: order must be >= 1");
    std::vector<char> inH(static_cast<std::size_t>(n), 0);
    for (int h : H) {
        if (h < 0 || h >= n) fail("hitting_moments: state out of range");
        inH[static_cast<std::size_t>(h)] = 1;
    }
    std::vector<int> comp;
    for (int i = 0; i < n; ++i)
        if (!inH[static_cast<std::size_t>(i)]) comp.push_back(i);
    const int m = static_cast<int>(comp.size());
    if (m == 0) return std::vector<double>(static_cast<std::size_t>(n), 0.0);

    Eigen::MatrixXd A(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
            A(r, c) = Q.q(comp[static_cast<std::size_t>(r)], comp[static_cast<std::size_t>(c)]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);

    std::vector<double> prev(static_cast<std::size_t>(n), 1.0);  // u_0 = 1 off H
    std::vector<double> out;
    for (int k = 1; k <= order; ++k) {
        Eigen::VectorXd rhs(m);
        for (int r = 0; r < m; ++r)
            rhs(r) = -static_cast<double>(k) * prev[static_cast<std::size_t>(comp[static_cast<std::size_t>(r)])];
        Eigen::VectorXd u = lu.solve(rhs);
        if (!u.allFinite()) fail("hitting_moments: singular restricted block (is H reachable?)");
        out.assign(static_cast<std::size_t>(n), 0.0);
        for (int r = 0; r < m; ++r) out[static_cast<std::size_t>(comp[static_cast<std::size_t>(r)])] = u(r);
        prev = out;
    }
    return out;
}

// ---------------------------------------------------------------------------
// TV decay and the main-lemma check
// ---------------------------------------------------------------------------

std::vector<double> transition_row(const GeneratorMatrix& Q, int x, double t, double poisson_tail) {
    if (x < 0 || x >= Q.size()) fail("transition_row: state out of range");
    if (t < 0.0) fail("transition_row: negative time");
    return uniformized_row(Q, x, t, poisson_tail, {});
}

std::vector<double> hitting_tail(const GeneratorMatrix& Q, const std::vector<int>& H, double t,
                                 double poisson_tail) {
    const int n = Q.size();
    std::vector<char> absorbed(static_cast<std::size_t>(n), 0);
    for (int h : H) absorbed[static_cast<std::size_t>(h)] = 1;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int x = 0; x < n; ++x) {
        if (absorbed[static_cast<std::size_t>(x)]) continue;
        std::vector<double> row = uniformized_row(Q, x, t, poisson_tail, absorbed);
        double surv = 0.0;
        for (int j = 0; j < n; ++j)
            if (!absorbed[static_cast<std::size_t>(j)]) surv += row[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(x)] = std::min(1.0, surv);
    }
    return out;
}

DecayCurve tv_decay(const GeneratorMatrix& Q, const std::vector<double>& times, double poisson_tail) {
    if (times.empty()) fail("tv_decay: empty time grid");
    double prev = -1.0;
    for (double t : times) {
        if (t < 0.0 || t <= prev) fail("tv_decay: times must be increasing and >= 0");
        prev = t;
    }
    DecayCurve curve;
    curve.times = times;
    const int n = Q.size();
    for (double t : times) {
        std::vector<double> per(static_cast<std::size_t>(n), 0.0);
        double sup = 0.0;
        for (int x = 0; x < n; ++x) {
            std::vector<double> row = uniformized_row(Q, x, t, poisson_tail, {});
            const double tv = half_l1_to_pi(row, Q.pi());
            per[static_cast<std::size_t>(x)] = tv;
            sup = std::max(sup, tv);
        }
        curve.per_state.push_back(std::move(per));
        curve.tv.push_back(sup);
    }
    curve.check_invariants();
    return curve;
}

void DecayCurve::check_invariants() const {
    for (std::size_t k = 0; k < tv.size(); ++k) {
        if (tv[k] < -1e-15 || tv[k] > 1.0 + 1e-12)
            throw std::logic_error("DecayCurve: TV outside [0,1]");
        if (k > 0 && tv[k] > tv[k - 1] + 1e-12)
            throw std::logic_error("DecayCurve: TV must be non-increasing");
    }
}

std::string DecayCurve::to_csv() const {
    std::ostringstream os;
    os.precision(15);
    os << "t,tv_sup";
    const std::size_t n = per_state.empty() ? 0 : per_state.front().size();
    for (std::size_t x = 0; x < n; ++x) os << ",tv_x" << x;
    os << "\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        os << times[k] << "," << tv[k];
        if (!per_state.empty())
            for (double v : per_state[k]) os << "," << v;
        os << "\n";
    }
    return os.str();
}

double kappa_empirical(const DecayCurve& curve, double t_lo, double t_hi) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
        const double t = curve.times[k];
        if (t < t_lo || t > t_hi) continue;
        if (curve.tv[k] <= 1e-12) continue;  // underflowed part of the curve
        pts.emplace_back(t, curve.tv[k]);
    }
    if (pts.size() < 5)
        throw std::invalid_argument("kappa_empirical: window keeps fewer than 5 usable points");
    return fit_exp_rate(pts).rate;
}

MainLemmaReport check_main_lemma(const GeneratorMatrix& Q, const std::vector<int>& H, double t,
                                 int grid_steps) {
    const int n = Q.size();
    if (grid_steps < 8) fail("check_main_lemma: grid too coarse");
    std::vector<char> inH(static_cast<std::size_t>(n), 0);
    for (int h : H) inH[static_cast<std::size_t>(h)] = 1;

    const double dt = t / grid_steps;
    std::vector<double> grid(static_cast<std::size_t>(grid_steps) + 1);
    for (int k = 0; k <= grid_steps; ++k) grid[static_cast<std::size_t>(k)] = dt * k;

    // g(u) = sup_{y in H} f(y, u) on the grid
    std::vector<double> g(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double sup = 0.0;
        for (int y : H) {
            std::vector<double> row = uniformized_row(Q, y, grid[k], 1e-14, {});
            sup = std::max(sup, half_l1_to_pi(row, Q.pi()));
        }
        g[k] = sup;
    }
    // F_x on the grid (absorbed-chain complement mass)
    std::vector<std::vector<double>> tail(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) tail[k] = hitting_tail(Q, H, grid[k]);

    MainLemmaReport rep;
    rep.t = t;
    rep.holds = true;
    double worst_margin = kInf;
    for (int x = 0; x < n; ++x) {
        if (inH[static_cast<std::size_t>(x)]) continue;
        std::vector<double> row = uniformized_row(Q, x, t, 1e-14, {});
        const double lhs = half_l1_to_pi(row, Q.pi());

        // trapezoidal convolution of g(t-s) against dF_x(s); g is
        // non-increasing so the per-cell error is bounded by dF * |dg| / 2
        double conv = 0.0, allowance = 0.0;
        for (int k = 0; k < grid_steps; ++k) {
            const double dF = tail[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] -
                              tail[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(x)];
            const double ga = g[static_cast<std::size_t>(grid_steps - k)];
            const double gb = g[static_cast<std::size_t>(grid_steps - k - 1)];
            conv += dF * 0.5 * (ga + gb);
            allowance += dF * 0.5 * std::abs(gb - ga);
        }
        const double rhs = tail.back()[static_cast<std::size_t>(x)] + conv;
        const double margin = rhs + allowance - lhs;
        if (margin < worst_margin) {
            worst_margin = margin;
            rep.worst_state = x;
            rep.lhs = lhs;
            rep.rhs = rhs;
            rep.allowance = allowance;
        }
        if (margin < 0.0) rep.holds = false;
    }
    rep.grid_adequate = rep.allowance < 0.1 * rep.rhs;
    return rep;
}

} // namespace ergo
