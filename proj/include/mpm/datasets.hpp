#pragma once
#include "mpm/bayes_linear.hpp"
#include "mpm/model_space.hpp"

#include <string>
#include <vector>

namespace mpm::datasets {

/// Hald cement data: columns (c, x1, x2, x3, x4) with the intercept first, n = 13.
Dataset hald();

/// 2x2 factorial with three replicates: columns (mu, A, B, AB) coded +1 at the first listed level of each factor.
Dataset anova();

/// The nested Hald sequence {c,x4} < {c,x1,x4} < {c,x1,x3,x4} < full, with c and x4 common.
ModelClass hald_nested_class();
/// Every Hald model containing the intercept.
ModelClass hald_all_class();

/// All eight models containing mu.
ModelClass anova_all_class();
/// Interactions allowed only with both main effects.
ModelClass anova_graphical_class();
/// {1011, 1101, 1110, 1111}.
ModelClass anova_unusual_class();

/// Published values a demo checks against.
struct ExpectedTable {
    std::string title;
    std::vector<std::string> models;  // bitstrings
    std::vector<double> probs;        // posterior probabilities
    std::vector<double> risks;        // expected losses (relative for the nested Hald table)
    std::vector<double> alt_probs;    // second prior column, when present
    std::vector<double> alt_risks;
    std::vector<double> inclusion;    // for the non-common variables, when stated
    double prob_tolerance;
    double risk_tolerance;
};

ExpectedTable expected_hald_nested();
ExpectedTable expected_hald_all();
ExpectedTable expected_anova(int scenario);

} // namespace mpm::datasets
