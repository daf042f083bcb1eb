#pragma once
#include "mpm/bayes_linear.hpp"
#include "mpm/model_space.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mpm {

enum class PosteriorSource { FullBayes, BIC, AIBF, External };

std::string to_string(PosteriorSource s);

/// Posterior model probabilities over an enumerated class, in enumeration order.
struct ModelPosterior {
    std::vector<ModelIndex> models;
    std::vector<double> probs;
    PosteriorSource source = PosteriorSource::External;

    /// Builds a posterior from a table; probabilities must sum to 1 within `tol`.
    static ModelPosterior from_table(std::vector<ModelIndex> models, std::vector<double> probs,
                                     PosteriorSource source = PosteriorSource::External, double tol = 1e-5);

    std::size_t size() const { return models.size(); }
    std::size_t k() const { return models.empty() ? 0 : models.front().size(); }
    /// Probability of `l`, 0 if absent.
    double prob(const ModelIndex &l) const;
    /// Highest-probability model; ties go to the smaller model, then the lexicographically smaller one.
    std::size_t argmax() const;
};

/// log P(M_l) for each model of the class under the given model prior (unnormalized is fine).
std::vector<double> log_model_prior(const ModelPriorSpec &spec, const ModelClass &cls,
                                    const std::vector<ModelIndex> &models);

/// p_l proportional to P(M_l) m_l(y), normalized by log-sum-exp. Throws MixedConstants when the marginals
/// were computed under different configurations.
ModelPosterior model_posteriors(const std::vector<ModelIndex> &models, const std::vector<LogMarginal> &log_marginals,
                                const std::vector<double> &log_prior, PosteriorSource source = PosteriorSource::FullBayes);

/// Enumerates the class and evaluates every model's marginal under `prior`.
ModelPosterior bayes_posteriors(const Dataset &data, const ModelClass &cls, const PriorSpec &prior);

/// p_l proportional to P(M_l) exp(BIC_l), with BIC_l the profiled Gaussian log-likelihood minus (k_l/2) log n.
ModelPosterior bic_posteriors(const Dataset &data, const ModelClass &cls, const ModelPriorSpec &model_prior,
                              const SigmaSpec &sigma = UnknownSigma{});

struct AibfOptions {
    std::size_t max_training_samples = 20000;
    std::uint64_t seed = 0;
};

struct AibfDiagnostics {
    std::size_t training_size = 0;
    std::size_t candidate_samples = 0;
    std::size_t used_samples = 0;
    bool subsampled = false;
};

/// Encompassing arithmetic intrinsic Bayes factor against the full (union) model, which must be in the class.
ModelPosterior aibf_posteriors(const Dataset &data, const ModelClass &cls, const ModelPriorSpec &model_prior,
                               const AibfOptions &options = {}, AibfDiagnostics *diagnostics = nullptr);

/// p_i = sum of p_l over models containing i.
InclusionProbs inclusion_probabilities(const ModelPosterior &post);

/// Probability that every variable of `vars` is in the model.
double joint_inclusion(const ModelPosterior &post, const Variables &vars);

/// Fraction of visited models containing each variable.
InclusionProbs inclusion_from_visits(const std::vector<ModelIndex> &visit_log);

struct ProductFormCheck {
    bool holds;
    double max_deviation;
};

/// Compares p_l with the product of independent inclusion probabilities over an all-subsets class.
ProductFormCheck product_form_check(const ModelPosterior &post, const InclusionProbs &p, const ModelClass &cls);

} // namespace mpm
