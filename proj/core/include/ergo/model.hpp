#pragma once

#include "ergo/expr.hpp"
#include "ergo/numerics.hpp"

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ergo {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Birth-death chain on {0,1,2,...}: up rate b_i > 0 (i >= 0),
/// down rate a_i > 0 (i >= 1). Free variable "i".
struct BirthDeathSpec {
    RateFunction birth;
    RateFunction death;

    double b(long i) const { return birth(static_cast<double>(i)); }
    double a(long i) const { return death(static_cast<double>(i)); }
};

/// Downwardly skip-free chain: q_{i,i-1} > 0, q_{i,i-j} = 0 for j >= 2,
/// upward jumps bounded by max_jump. Explicit rows 0..n_explicit-1; rows
/// beyond come from the tail RateFunctions when present.
struct SingleDeathSpec {
    long n_explicit = 0;
    // rows[i][j] = q_{ij}, j < n_explicit + max_jump
    std::vector<std::vector<double>> rows;
    int max_jump = 1;
    std::optional<RateFunction> tail_down;   // q_{i,i-1} for i >= n_explicit
    std::vector<RateFunction> tail_up;       // q_{i,i+k}, k = 1..max_jump

    bool has_tail() const { return tail_down.has_value(); }
    /// q_{ij}; zero outside the support
    double rate(long i, long j) const;
    double death_rate(long i) const { return i >= 1 ? rate(i, i - 1) : 0.0; }
};

/// Rooted tree with positive rates along each edge; node 0 is the root.
/// Optional self-similar rays extend leaves to infinity (rates as
/// functions of the depth k = 1, 2, ... past the attach node).
struct TreeSpec {
    std::vector<int> parent;      // parent[0] = -1
    std::vector<double> up;       // q_{i* i}, up[0] unused
    std::vector<double> down;     // q_{i i*}, down[0] unused

    struct Ray {
        int attach = -1;
        RateFunction up;
        RateFunction down;
    };
    std::vector<Ray> rays;

    long size() const { return static_cast<long>(parent.size()); }
    std::vector<std::vector<int>> children() const;
    std::vector<int> depth() const;
};

/// One-dimensional diffusion a(x) f'' + b(x) f' on [0, inf) with a
/// reflecting boundary at 0, or the radial comparison data on [r0, D).
struct DiffusionSpec {
    RateFunction a;
    RateFunction b;

    struct Radial {
        RateFunction beta_bar;   // variable "r"
        double r0 = 0.0;
        double D = std::numeric_limits<double>::infinity();
    };
    std::optional<Radial> radial;

    bool is_radial() const { return radial.has_value(); }
};

/// SDE dX = dZ + b(X)dt driven by a symmetric alpha-stable process;
/// drift enters through its radial envelope -<x,b(x)>/|x|^2 as a
/// function of r.
struct StableSdeSpec {
    double alpha = 1.5;
    int dim = 1;
    RateFunction drift_radial;
};

/// Time-changed one-dimensional symmetric alpha-stable process with
/// speed a(x) > 0; stationary measure a(x)^{-1} dx.
struct TimeChangedStableSpec {
    double alpha = 1.5;
    RateFunction a;
};

using ModelSpec = std::variant<BirthDeathSpec, SingleDeathSpec, TreeSpec, DiffusionSpec,
                               StableSdeSpec, TimeChangedStableSpec>;

struct NumericsOverrides {
    std::optional<double> rel;
    std::optional<double> abs;
    std::optional<long> max_terms;
    std::optional<long> max_evals;
    std::optional<long> truncation;

    Tolerance apply(Tolerance base = {}) const;
};

struct ModelDocument {
    std::string family;
    ModelSpec spec;
    NumericsOverrides numerics;
};

/// Loads and validates a JSON model document (see docs/README for the
/// layout: top-level "family", "params", optional "numerics").
ModelDocument load_model(const std::string& path);
ModelDocument load_model_text(const std::string& json_text);

const char* family_name(const ModelSpec& spec);

void validate(const BirthDeathSpec& s);
void validate(const SingleDeathSpec& s);
void validate(const TreeSpec& s);
void validate(const DiffusionSpec& s);
void validate(const StableSdeSpec& s);
void validate(const TimeChangedStableSpec& s);
void validate(const ModelSpec& s);

} // namespace ergo
