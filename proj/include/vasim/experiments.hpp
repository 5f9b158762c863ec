#pragma once

#include <string>
#include <vector>

#include "vasim/acoustics.hpp"
#include "vasim/core.hpp"

namespace vasim::experiments {

/// One verified claim: what was expected, what the simulation produced.
struct CheckResult {
    int criterion = 0;      // which acceptance criterion this check belongs to
    std::string name;
    bool pass = false;
    std::string expected;
    std::string observed;

    Json to_json() const;
};

struct ExperimentResult {
    std::string experiment;
    std::vector<CheckResult> checks;

    bool pass() const;
    Json to_json() const;
};

/// The six reproduction experiments. Each drives full pipelines — never the
/// lookup tables alone — and reports exact expected-versus-observed rows.
ExperimentResult arbitration(const acoustics::Tables& tables);      // criteria 1 and 6
ExperimentResult break_chain();                                     // criterion 2
ExperimentResult persistence(const acoustics::Tables& tables);      // criteria 3 and 7
ExperimentResult fvv_dominance(const acoustics::Tables& tables);    // criterion 4
ExperimentResult impact_rates(const acoustics::Tables& tables);     // criterion 5
ExperimentResult defense_compare(const acoustics::Tables& tables);  // criteria 8 and 9

const std::vector<std::string>& experiment_names();
ExperimentResult run_experiment(const std::string& name, const acoustics::Tables& tables);
std::vector<ExperimentResult> run_all(const acoustics::Tables& tables);

} // namespace vasim::experiments
