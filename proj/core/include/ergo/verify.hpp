#pragma once

#include "ergo/model.hpp"
#include "ergo/report.hpp"

#include <optional>
#include <vector>

namespace ergo {

struct VerifyOptions {
    int truncation = 64;
    std::optional<double> mesh_h;   // diffusions
    double mesh_length = 4.0;
    std::vector<double> times;      // TV decay grid; empty = auto
    Tolerance tol;
};

/// Runs the oracle suite against a model and evaluates every cross-module
/// invariant that applies to its family, one Verdict per check.
VerificationSection run_verification(const ModelDocument& doc, const VerifyOptions& opts,
                                     std::vector<Verdict>& verdicts);

} // namespace ergo
