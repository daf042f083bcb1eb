#pragma once
#include "mpm/bayes_linear.hpp"
#include "mpm/posterior_probs.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mpm {

struct ExplicitQ {
    Eigen::MatrixXd matrix;
};
/// gamma * X'X.
struct GramScaled {
    double gamma = 1.0;
};
struct DiagonalQ {
    Eigen::VectorXd q;
};
struct IdentityQ {};

/// Expected outer product of a future covariate vector, the weight matrix of the predictive loss.
struct QSpec {
    std::variant<ExplicitQ, GramScaled, DiagonalQ, IdentityQ> form = GramScaled{};

    /// Materializes Q for the dataset and checks that it is symmetric positive definite.
    Eigen::MatrixXd matrix(const Dataset &data) const;
    Eigen::MatrixXd matrix(std::size_t k) const; // not available for GramScaled
    std::string describe() const;
};

/// Throws NotPositiveDefinite unless Q is symmetric with smallest eigenvalue > 1e-12 times the largest.
void check_positive_definite(const Eigen::MatrixXd &Q);

/// beta_bar = sum_l p_l H_l beta_tilde_l; `means` aligned with post.models.
Eigen::VectorXd model_average_beta(const ModelPosterior &post, const std::vector<PosteriorMean> &means);

/// (H_l beta_tilde_l - beta_bar)' Q (H_l beta_tilde_l - beta_bar).
double risk(const ModelIndex &l, const PosteriorMean &mean, const Eigen::VectorXd &beta_bar, const Eigen::MatrixXd &Q);

/// Hypotheses of the closed-form risk expressions, established numerically by selection_report.
struct RiskConditions {
    bool coordinatewise_means = false; // beta_tilde_l = H_l' beta_tilde for every model
    bool q_diagonal = false;
    bool scaled_gram_loss = false;     // Q = gamma X'X
    bool proportional_means = false;   // posterior means b times the projected least squares fit
    bool flat_common_prior = false;
    bool nested = false;
    bool semi_orthogonal = false;      // X_2' Q_(1) X_2 diagonal
};

/// sum_i beta_tilde_i^2 q_i (l_i - p_i)^2; requires coordinatewise means and diagonal Q.
double risk_diagonal(const Eigen::VectorXd &beta_tilde, const Eigen::VectorXd &q, const InclusionProbs &p,
                     const ModelIndex &l, const RiskConditions &conditions);

/// gamma b^2 w'(P_l - 2 sum p_l* P_{l.l*}) w with w = Q_(1) y: the risk up to a model-free constant.
/// Requires the scaled-Gram loss, proportional means, a flat common prior and nested or semi-orthogonal models.
std::vector<double> risk_nuisance(const NuisanceProjection &proj, const ModelPosterior &post, double gamma, double b,
                                  const RiskConditions &conditions);

enum class PosteriorMethod { Bayes, BIC, AIBF, External };
enum class RiskPath { Diagonal, Nuisance, General };

std::string to_string(RiskPath p);

struct SelectionOptions {
    PosteriorMethod method = PosteriorMethod::Bayes;
    AibfOptions aibf;
    std::optional<ModelPosterior> external; // used with PosteriorMethod::External
    /// Posterior means come from this prior when set, otherwise from the selection prior.
    std::optional<PriorFamily> mean_family;
};

struct ReportFlags {
    RiskConditions conditions;
    bool graphical = false;
    bool common_present = false;
    bool near_collinear = false;
    bool null_model_predicts_zero = false;
    bool product_form = false;
    double eq17_deviation = 0.0;
};

struct RiskReport {
    std::vector<ModelIndex> models;
    std::vector<double> probs;
    PosteriorSource source = PosteriorSource::External;
    std::vector<PosteriorMean> means;
    InclusionProbs inclusion;
    Eigen::VectorXd beta_bar;
    std::vector<double> risks;         // along `path`
    std::vector<double> general_risks; // quadratic form, always absolute
    RiskPath path = RiskPath::General;
    std::size_t optimal = 0;
    std::size_t maxprob = 0;
    std::optional<std::size_t> median; // absent when the median model is not in the class
    ModelIndex median_model;
    ReportFlags flags;
    std::vector<std::string> guarantees; // optimality results whose hypotheses hold
    std::vector<std::string> notes;
    std::string prior_description;
    std::string q_description;
    std::optional<EmpiricalBayesResult> eb_fit;

    bool risks_are_relative() const { return path == RiskPath::Nuisance; }
};

/// Index minimizing `risks`; ties within 1e-12 relative go to the smaller model, then lexicographic order.
std::size_t argmin_risk(const std::vector<ModelIndex> &models, const std::vector<double> &risks);

/// Posterior, inclusion probabilities, model average, per-model risks and the optimal, median and
/// highest-probability models.
RiskReport selection_report(const Dataset &data, const ModelClass &cls, const PriorSpec &prior, const QSpec &q,
                            const SelectionOptions &options = {});

inline constexpr const char *kNoGuarantee = "no theorem applies";
inline constexpr const char *kCollinearWarning = "covariates are nearly perfectly correlated";

} // namespace mpm
