// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include "kronnet/config.hpp"
#include "kronnet/training.hpp"

#include <string>
#include <vector>

namespace kronnet::exp {

/// Non-finite loss or similar numeric breakdown; the CLI maps it to exit 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunSummaryRow {
    std::string scheme;
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    double final_metric = 0.0;
    long iters_to_threshold = -1;
    double wall_ms = 0.0;
    double normalized_time = 0.0; // per-scheme mean wall over the fixed scheme's
    bool early_stop = false;
};

struct ExperimentResult {
    cfg::Config resolved;
    std::string outdir;
    std::vector<RunSummaryRow> rows;

    const RunSummaryRow& row(const std::string& scheme, std::uint64_t seed) const;
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Trains every scheme x seed of the named experiment, writes per-run
/// CSVs, summary.csv and manifest.txt under the output directory.
ExperimentResult run_experiment(const std::string& name, const Overrides& overrides = {},
                                const std::string& seeds_csv = "",
                                const std::string& outdir = "");

/// The resolved config with overrides applied (what --print-config shows).
cfg::Config resolve_experiment(const std::string& name, const Overrides& overrides = {},
                               const std::string& seeds_csv = "",
                               const std::string& outdir = "");

struct TheoryRow {
    std::string seed; // seed number or an aggregate label
    std::string quantity;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

struct TheoryResult {
    std::string check;
    std::vector<TheoryRow> rows;
    bool ok = false;
};

std::vector<std::string> known_theory_checks();

/// check in {early-dominance, matrices-fd, dldt-identity, lambda0,
/// cond-k, appendix-b}; writes seed,quantity,lhs,rhs,pass rows to out_csv
/// when non-empty.
TheoryResult run_theory(const std::string& check, int seeds, const std::string& out_csv = "",
                        const Overrides& overrides = {});

} // namespace kronnet::exp
