#pragma once
#include "mpm/bayes_linear.hpp"
#include "mpm/model_space.hpp"
#include "mpm/predictive_risk.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mpm {

enum class OutputFormat { Table, Records };

/// Everything `analyze` and `risk` need, as parsed from command-line strings.
struct RunConfig {
    std::string input;
    std::string response;
    std::vector<std::string> common;
    bool intercept = false;
    std::string class_spec = "all";
    std::string prior_spec = "reference";
    std::string sigma_spec = "unknown";
    std::string model_prior_spec = "uniform";
    std::string q_spec = "gram";
    std::string posterior_spec; // empty: aibf for the reference prior, bayes otherwise
    OutputFormat format = OutputFormat::Table;
    std::uint64_t seed = 0;
    std::optional<std::string> out;
};

/// all | nested[:v1,v2,...] | graphical:v=a+b;w=a | explicit:bits,bits,... | explicit:@path
ModelClass parse_class(const std::string &spec, const Dataset &data, const Variables &common);

/// reference | g:C | gn:C | indnormal[:LAMBDA] | eb-g[:full]
PriorFamily parse_prior(const std::string &spec, std::size_t k);

/// known:V | unknown
SigmaSpec parse_sigma(const std::string &spec);

/// uniform | jeffreys | bernoulli:P[,P...] | file:PATH (lines "bits weight")
ModelPriorSpec parse_model_prior(const std::string &spec, std::size_t k, const Variables &common);

/// gram[:GAMMA] | identity | diag:q1,q2,... | file:PATH (whitespace-separated k x k matrix)
QSpec parse_q(const std::string &spec, std::size_t k);

/// bayes | bic | aibf
PosteriorMethod parse_posterior(const std::string &spec, const PriorFamily &family);

OutputFormat parse_format(const std::string &spec);

/// Seed from the flag if given, else from MPM_SEED, else 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t> &flag);

std::vector<std::string> split_list(const std::string &s, char sep = ',');

} // namespace mpm
