#pragma once
#include "mpm/posterior_probs.hpp"
#include "mpm/predictive_risk.hpp"
#include "mpm/run_config.hpp"
#include "mpm/shibata_bench.hpp"

#include <string>
#include <vector>

namespace mpm {

/// 12 significant digits, the precision shared by every output format.
std::string num12(double v);

/// "{c, x1, x4}" style label for a model.
std::string model_label(const ModelIndex &l, const std::vector<std::string> &names);

std::string format_posterior(const ModelPosterior &post, const std::vector<std::string> &names, OutputFormat format);
std::string format_report(const RiskReport &report, const std::vector<std::string> &names, OutputFormat format);
std::string format_bench(const BenchResult &result, OutputFormat format);

/// Writes to a sibling temporary file and renames it over `path`, so readers never see partial output.
void write_atomic(const std::string &path, const std::string &content);

} // namespace mpm
