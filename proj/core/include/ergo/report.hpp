#pragma once

#include "ergo/model.hpp"
#include "ergo/montecarlo.hpp"
#include "ergo/oracle.hpp"
#include "ergo/rate_bounds.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ergo {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct Verdict {
    std::string name;      // which invariant this checks
    bool pass = false;
    bool warning = false;  // diagnostic-only failures do not change the exit code
    double margin = 0.0;   // slack in the inequality (negative = violated)
    std::string detail;
};

struct VerificationSection {
    int truncation = 0;
    std::optional<double> mesh_h;
    std::optional<double> mesh_length;
    double gap = 0.0;
    bool gap_lower_bound_only = false;
    double dirichlet_gap0 = 0.0;
    std::optional<double> gap_refined;   // at 2N (or h/2) for the Cauchy diagnostic
    std::optional<double> kappa_empirical;
    std::optional<double> fit_r_squared;
    std::pair<double, double> fit_window{0.0, 0.0};
    std::vector<double> max_hitting_moments;  // order 1..k for the base target set
    DecayCurve curve;
};

struct MonteCarloSection {
    std::uint64_t seed = 0;
    long trials = 0;
    std::string hit_target;
    HitEstimate hit;
    std::optional<TailEstimate> tail;
    std::optional<EmHitEstimate> em;
};

struct Report {
    std::string command;  // bounds | verify | simulate
    std::string family;
    std::string params_digest;
    std::string model_echo_json;  // raw params object as given
    Tolerance tol;
    std::optional<std::uint64_t> seed;
    std::optional<RateBounds> bounds;
    std::optional<std::string> not_ergodic_reason;  // set => exit code 2
    std::optional<VerificationSection> verification;
    std::optional<MonteCarloSection> montecarlo;
    std::vector<Verdict> verdicts;
};

std::string report_to_json(const Report& report);

/// FNV-1a digest of the canonical params text, hex-encoded.
std::string params_digest(const std::string& params_json);

/// Validates a serialized report against the published schema; unknown
/// top-level or section fields are rejected. Throws std::runtime_error.
void validate_report_json(const std::string& json_text);

} // namespace ergo
