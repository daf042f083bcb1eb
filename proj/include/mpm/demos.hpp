#pragma once
#include "mpm/predictive_risk.hpp"
#include "mpm/run_config.hpp"

#include <string>
#include <vector>

namespace mpm {

struct DemoCheck {
    std::string what;
    bool ok = false;
    std::string detail;
};

/// One built-in table recomputed from its data together with the comparison against stored values.
struct DemoOutcome {
    std::string name;
    std::string title;
    std::vector<std::string> names;
    std::vector<std::string> labels; // one per report, e.g. the model prior
    std::vector<RiskReport> reports;
    std::vector<DemoCheck> checks;

    bool passed() const;
};

inline constexpr const char *kDemoNames[] = {"hald-nested", "hald-all", "anova-s1", "anova-s2", "anova-s3"};

/// Throws ConfigError for an unknown name.
DemoOutcome run_demo(const std::string &name, std::uint64_t seed = 0);

std::string format_demo(const DemoOutcome &outcome, OutputFormat format);

} // namespace mpm
