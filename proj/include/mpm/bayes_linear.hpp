#pragma once
#include "mpm/model_space.hpp"

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mpm {

/// Design matrix, response and column labels of a normal linear model y = X beta + eps.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names;
    std::string response = "y";

    Dataset() = default;
    /// Validates shapes, n > k and full column rank (relative tolerance 1e-10).
    Dataset(Eigen::MatrixXd X, Eigen::VectorXd y, std::vector<std::string> names = {},
            std::string response = "y");

    std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t k() const { return static_cast<std::size_t>(X.cols()); }
    /// Index of the column called `name`; throws ConfigError if absent.
    std::size_t column(const std::string &name) const;
};

/// Columns of X selected by a model, in original order.
Eigen::MatrixXd columns(const Eigen::MatrixXd &X, const ModelIndex &l);
Eigen::MatrixXd columns(const Eigen::MatrixXd &X, const Variables &positions);

// ---------------------------------------------------------------------------------------------
// prior specification

/// pi(beta, sigma) = 1/sigma on every coefficient.
struct Reference {};

/// beta_i ~ N(mean_i, sigma^2 lambda_i) for non-common i, flat on common coefficients.
struct IndependentNormal {
    Eigen::VectorXd mean;   // length k
    Eigen::VectorXd lambda; // length k, positive
    static IndependentNormal standard(std::size_t k, double lambda = 1.0);
};

/// beta_l ~ N(0, c sigma^2 (X_l'X_l)^{-1}) on every included coefficient.
struct GType {
    double c;
};

/// Flat on the common block, N(0, c sigma^2 (X_N'Q X_N)^{-1}) on the rest, Q the common-block residual projector.
struct GTypeNuisance {
    double c;
};

enum class EbObjective { FullModel, ModelAveraged };

/// A g-type prior whose scale is chosen by maximizing a marginal likelihood.
struct EmpiricalBayesG {
    bool nuisance = true;
    EbObjective objective = EbObjective::ModelAveraged;
};

struct KnownSigma {
    double sigma2;
};
struct UnknownSigma {};

struct UniformPrior {};
/// P(order j) proportional to 1/j, split equally among models of that order; order = #non-common + 1.
struct JeffreysOrder {};
/// Independent inclusion with probability p0[i]; forced to 1 for common variables.
struct ProductBernoulli {
    std::vector<double> p0;
};
struct ExplicitPrior {
    std::map<ModelIndex, double> weights;
};

using PriorFamily = std::variant<Reference, IndependentNormal, GType, GTypeNuisance, EmpiricalBayesG>;
using SigmaSpec = std::variant<KnownSigma, UnknownSigma>;
using ModelPriorSpec = std::variant<UniformPrior, JeffreysOrder, ProductBernoulli, ExplicitPrior>;

struct PriorSpec {
    PriorFamily family = Reference{};
    SigmaSpec sigma = UnknownSigma{};
    ModelPriorSpec model_prior = UniformPrior{};

    /// Throws ConfigError when a parameter is out of range.
    void validate(std::size_t k) const;
    std::string describe() const;
};

// ---------------------------------------------------------------------------------------------
// least squares and projections

struct LeastSquares {
    Eigen::VectorXd beta; // length k_l
    double rss = 0.0;
};

/// Least squares on the model's columns by column-pivoted QR. The null model gives an empty beta and rss = y'y.
LeastSquares least_squares(const Dataset &data, const ModelIndex &l);
LeastSquares least_squares(const Eigen::MatrixXd &Xl, const Eigen::VectorXd &y);

/// Residual projector of the common block and the per-model projectors built from it.
class NuisanceProjection {
  public:
    NuisanceProjection(const Dataset &data, Variables common);

    /// Q = I - X1 (X1'X1)^{-1} X1'.
    const Eigen::MatrixXd &Q() const { return q_; }
    /// P_l = Q X_N (X_N'Q X_N)^{-1} X_N'Q for the non-common columns X_N of l (zero for common-only l).
    Eigen::MatrixXd projector(const ModelIndex &l) const;
    /// w = Q y.
    Eigen::VectorXd w() const { return q_ * y_; }
    const Variables &common() const { return common_; }

  private:
    Eigen::MatrixXd q_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    Variables common_;
};

NuisanceProjection nuisance_projection(const Dataset &data, const Variables &common);

// ---------------------------------------------------------------------------------------------
// posterior means and marginals

struct PosteriorMean {
    Eigen::VectorXd beta_tilde;    // length k_l
    std::optional<double> shrink_b; // set when beta_tilde is b times the (projected) least squares estimate
};

/// Posterior mean of beta_l. EmpiricalBayesG must be resolved first (see resolve_empirical_bayes).
PosteriorMean posterior_mean(const Dataset &data, const ModelIndex &l, const PriorSpec &prior,
                             const Variables &common);

/// log m_l(y) up to an additive constant; `config` identifies the constant so mixtures can be detected.
struct LogMarginal {
    double value;
    std::string config;
};

/// Closed-form marginal with flat prior on the common block. Throws ImproperMarginal when some model
/// would need a flat prior on a non-common coefficient (the Reference family on a non-trivial class).
LogMarginal log_marginal(const Dataset &data, const ModelIndex &l, const PriorSpec &prior,
                         const Variables &common);

/// log of (1/2) Gamma((n-k)/2) pi^{-(n-k)/2} |X'X|^{-1/2} RSS^{-(n-k)/2}, the marginal under pi = 1/sigma.
/// Only ratios of these are meaningful. Throws RankDeficient if X lacks rank or RSS = 0 with n > k.
double reference_log_marginal(const Eigen::MatrixXd &Xl, const Eigen::VectorXd &y);

/// Maximizes f over [lo, hi] by golden-section search to the given tolerance.
double golden_section_max(const std::function<double(double)> &f, double lo, double hi, double tol = 1e-6);

struct EmpiricalBayesResult {
    double c;
    bool boundary; // optimum sits at the edge of the search interval; no interior maximum
    double objective;
};

/// Chooses c for a GType/GTypeNuisance/IndependentNormal (lambda scaled by c) or EmpiricalBayesG prior by
/// golden-section search on log c over [-10, 10].
EmpiricalBayesResult empirical_bayes_c(const Dataset &data, const ModelClass &cls, const PriorSpec &prior,
                                       EbObjective objective = EbObjective::ModelAveraged);

/// Replaces an EmpiricalBayesG family with the fitted g-type family; other priors are returned unchanged.
PriorSpec resolve_empirical_bayes(const Dataset &data, const ModelClass &cls, const PriorSpec &prior,
                                  EmpiricalBayesResult *fit = nullptr);

/// Largest |off-diagonal| of X'X relative to its largest diagonal entry.
double gram_offdiagonal_ratio(const Eigen::MatrixXd &X);

} // namespace mpm
