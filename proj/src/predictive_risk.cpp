#include "mpm/predictive_risk.hpp"
#include "mpm/errors.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

namespace mpm {

namespace {

template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

double max_offdiag_ratio(const Eigen::MatrixXd &m) {
    const double diag = m.diagonal().cwiseAbs().maxCoeff();
    double off = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j) off = std::max(off, std::abs(m(i, j)));
    return diag > 0.0 ? off / diag : (off > 0.0 ? 1.0 : 0.0);
}

bool near_collinear_columns(const Eigen::MatrixXd &X, const Variables &cols) {
    for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a + 1; b < cols.size(); ++b) {
            const Eigen::VectorXd u = X.col(idx(cols[a])).array() - X.col(idx(cols[a])).mean();
            const Eigen::VectorXd v = X.col(idx(cols[b])).array() - X.col(idx(cols[b])).mean();
            const double denom = u.norm() * v.norm();
            if (denom > 0.0 && std::abs(u.dot(v)) / denom >= 0.999) return true;
        }
    return false;
}

} // namespace

void check_positive_definite(const Eigen::MatrixXd &Q) {
    if (Q.rows() != Q.cols() || Q.rows() == 0) throw DimensionMismatch("Q must be a non-empty square matrix");
    if (!Q.allFinite()) throw NotPositiveDefinite("Q has non-finite entries");
    const double scale = std::max(Q.cwiseAbs().maxCoeff(), 1e-300);
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw NotPositiveDefinite("Q is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q, Eigen::EigenvaluesOnly);
    const auto &ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 1e-12 * ev.maxCoeff()) || !(ev.maxCoeff() > 0.0))
        throw NotPositiveDefinite(fmt::format("smallest eigenvalue {:.3g} of Q is not positive", ev.minCoeff()));
}

Eigen::MatrixXd QSpec::matrix(const Dataset &data) const {
    Eigen::MatrixXd q = std::visit(overloaded{
                                       [&](const GramScaled &g) -> Eigen::MatrixXd {
                                           if (!(g.gamma > 0.0)) throw ConfigError("gamma must be positive");
                                           return g.gamma * data.X.transpose() * data.X;
                                       },
                                       [&](const auto &) -> Eigen::MatrixXd { return matrix(data.k()); },
                                   },
                                   form);
    check_positive_definite(q);
    return q;
}

Eigen::MatrixXd QSpec::matrix(std::size_t k) const {
    Eigen::MatrixXd q = std::visit(overloaded{
                                       [&](const ExplicitQ &e) -> Eigen::MatrixXd { return e.matrix; },
                                       [&](const DiagonalQ &d) -> Eigen::MatrixXd {
                                           return d.q.asDiagonal().toDenseMatrix();
                                       },
                                       [&](const IdentityQ &) -> Eigen::MatrixXd {
                                           return Eigen::MatrixXd::Identity(idx(k), idx(k));
                                       },
                                       [&](const GramScaled &) -> Eigen::MatrixXd {
                                           throw ConfigError("a Gram-scaled Q needs the design matrix");
                                       },
                                   },
                                   form);
    if (static_cast<std::size_t>(q.rows()) != k) throw DimensionMismatch("Q does not match the number of covariates");
    check_positive_definite(q);
    return q;
}

std::string QSpec::describe() const {
    return std::visit(overloaded{
                          [](const ExplicitQ &) { return std::string("explicit"); },
                          [](const GramScaled &g) { return fmt::format("{:.6g} X'X", g.gamma); },
                          [](const DiagonalQ &) { return std::string("diagonal"); },
                          [](const IdentityQ &) { return std::string("identity"); },
                      },
                      form);
}

Eigen::VectorXd model_average_beta(const ModelPosterior &post, const std::vector<PosteriorMean> &means) {
    if (means.size() != post.size()) throw DimensionMismatch("one posterior mean per model required");
    Eigen::VectorXd bar = Eigen::VectorXd::Zero(idx(post.k()));
    for (std::size_t j = 0; j < post.size(); ++j)
        if (post.models[j].dimension() > 0) bar += post.probs[j] * embed(post.models[j], means[j].beta_tilde);
    return bar;
}

double risk(const ModelIndex &l, const PosteriorMean &mean, const Eigen::VectorXd &beta_bar, const Eigen::MatrixXd &Q) {
    if (static_cast<std::size_t>(beta_bar.size()) != l.size() || Q.rows() != beta_bar.size() || Q.cols() != beta_bar.size())
        throw DimensionMismatch("risk inputs have inconsistent dimensions");
    const Eigen::VectorXd d = (l.dimension() > 0 ? embed(l, mean.beta_tilde) : Eigen::VectorXd::Zero(beta_bar.size())) - beta_bar;
    return std::max(0.0, d.dot(Q * d));
}

double risk_diagonal(const Eigen::VectorXd &beta_tilde, const Eigen::VectorXd &q, const InclusionProbs &p,
                     const ModelIndex &l, const RiskConditions &conditions) {
    if (!conditions.coordinatewise_means || !conditions.q_diagonal)
        throw ConditionViolated("the diagonal risk needs coordinatewise posterior means and a diagonal Q");
    const auto k = l.size();
    if (static_cast<std::size_t>(beta_tilde.size()) != k || static_cast<std::size_t>(q.size()) != k || p.size() != k)
        throw DimensionMismatch("diagonal risk inputs have inconsistent dimensions");
    double r = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double gap = (l.contains(i) ? 1.0 : 0.0) - p[i];
        r += beta_tilde(idx(i)) * beta_tilde(idx(i)) * q(idx(i)) * gap * gap;
    }
    return r;
}

std::vector<double> risk_nuisance(const NuisanceProjection &proj, const ModelPosterior &post, double gamma, double b,
                                  const RiskConditions &conditions) {
    if (!conditions.scaled_gram_loss || !conditions.proportional_means || !conditions.flat_common_prior ||
        !(conditions.nested || conditions.semi_orthogonal))
        throw ConditionViolated("the projected risk needs Q = gamma X'X, proportional posterior means, a flat prior "
                                "on the common block and nested or semi-orthogonal models");
    const Eigen::VectorXd w = proj.w();
    std::map<ModelIndex, double> quad;
    auto s = [&](const ModelIndex &l) {
        auto it = quad.find(l);
        if (it != quad.end()) return it->second;
        const double v = w.dot(proj.projector(l) * w);
        quad.emplace(l, v);
        return v;
    };
    std::vector<double> out(post.size());
    for (std::size_t j = 0; j < post.size(); ++j) {
        double acc = s(post.models[j]);
        for (std::size_t i = 0; i < post.size(); ++i)
            if (post.probs[i] > 0.0) acc -= 2.0 * post.probs[i] * s(post.models[j].intersect(post.models[i]));
        out[j] = gamma * b * b * acc;
    }
    return out;
}

std::string to_string(RiskPath p) {
    switch (p) {
    case RiskPath::Diagonal: return "diagonal";
    case RiskPath::Nuisance: return "projected";
    case RiskPath::General: return "quadratic";
    }
    return "unknown";
}

std::size_t argmin_risk(const std::vector<ModelIndex> &models, const std::vector<double> &risks) {
    if (models.empty() || models.size() != risks.size()) throw DimensionMismatch("one risk per model required");
    double scale = 1.0;
    for (double r : risks) scale = std::max(scale, std::abs(r));
    std::size_t best = 0;
    for (std::size_t i = 1; i < models.size(); ++i) {
        const double diff = risks[i] - risks[best];
        if (diff < -1e-12 * scale) best = i;
        else if (std::abs(diff) <= 1e-12 * scale) {
            const auto di = models[i].dimension(), db = models[best].dimension();
            if (di < db || (di == db && models[i] < models[best])) best = i;
        }
    }
    return best;
}

RiskReport selection_report(const Dataset &data, const ModelClass &cls, const PriorSpec &prior_in, const QSpec &qspec,
                            const SelectionOptions &options) {
    if (cls.k() != data.k()) throw DimensionMismatch("class and dataset have different numbers of covariates");
    prior_in.validate(data.k());
    RiskReport rep;
    EmpiricalBayesResult eb{};
    const PriorSpec prior = resolve_empirical_bayes(data, cls, prior_in, &eb);
    if (std::holds_alternative<EmpiricalBayesG>(prior_in.family)) {
        rep.eb_fit = eb;
        if (eb.boundary) rep.notes.push_back(fmt::format("empirical-Bayes scale c = {:.6g} sits on the search boundary", eb.c));
    }
    PriorSpec mean_prior = prior;
    if (options.mean_family) mean_prior.family = *options.mean_family;
    rep.prior_description = prior.describe();
    rep.q_description = qspec.describe();

    ModelPosterior post;
    switch (options.method) {
    case PosteriorMethod::Bayes: post = bayes_posteriors(data, cls, prior); break;
    case PosteriorMethod::BIC: post = bic_posteriors(data, cls, prior.model_prior, prior.sigma); break;
    case PosteriorMethod::AIBF: post = aibf_posteriors(data, cls, prior.model_prior, options.aibf); break;
    case PosteriorMethod::External:
        if (!options.external) throw ConfigError("external posterior requested but none supplied");
        post = *options.external;
        for (const auto &m : post.models)
            if (!cls.contains(m)) throw NotInClass("posterior model " + m.to_string() + " is not in the class");
        break;
    }
    rep.models = post.models;
    rep.probs = post.probs;
    rep.source = post.source;

    const Variables &common = cls.common();
    for (const auto &m : rep.models) rep.means.push_back(posterior_mean(data, m, mean_prior, common));
    rep.inclusion = inclusion_probabilities(post);
    rep.beta_bar = model_average_beta(post, rep.means);
    const Eigen::MatrixXd Q = qspec.matrix(data);

    // hypotheses
    auto &f = rep.flags;
    auto &c = f.conditions;
    const std::size_t k = data.k();
    f.graphical = cls.has_graphical_structure();
    f.common_present = !common.empty();
    c.nested = cls.is_nested();
    c.q_diagonal = max_offdiag_ratio(Q) <= 1e-12;
    {
        const Eigen::MatrixXd gram = data.X.transpose() * data.X;
        const double gamma = Q.trace() / gram.trace();
        c.scaled_gram_loss = std::holds_alternative<GramScaled>(qspec.form) ||
                             (Q - gamma * gram).cwiseAbs().maxCoeff() <= 1e-10 * Q.cwiseAbs().maxCoeff();
    }
    const auto &fam = mean_prior.family;
    c.proportional_means = std::holds_alternative<Reference>(fam) || std::holds_alternative<GType>(fam) ||
                           std::holds_alternative<GTypeNuisance>(fam);
    c.flat_common_prior = std::holds_alternative<Reference>(fam) || std::holds_alternative<GTypeNuisance>(fam) ||
                          std::holds_alternative<IndependentNormal>(fam) ||
                          (std::holds_alternative<GType>(fam) && common.empty());
    Variables rest;
    for (std::size_t i = 0; i < k; ++i)
        if (!cls.is_common(i)) rest.push_back(i);
    if (!rest.empty()) {
        const NuisanceProjection proj(data, common);
        const Eigen::MatrixXd X2 = columns(data.X, rest);
        c.semi_orthogonal = max_offdiag_ratio(X2.transpose() * proj.Q() * X2) < 1e-8;
        f.near_collinear = near_collinear_columns(data.X, rest);
    }
    try {
        const PosteriorMean full = posterior_mean(data, ModelIndex::full(k), mean_prior, common);
        const double scale = std::max(1.0, full.beta_tilde.cwiseAbs().maxCoeff());
        double dev = 0.0;
        for (std::size_t j = 0; j < rep.models.size(); ++j)
            if (rep.models[j].dimension() > 0)
                dev = std::max(dev, (rep.means[j].beta_tilde - restrict_to(rep.models[j], full.beta_tilde)).cwiseAbs().maxCoeff());
        f.eq17_deviation = dev / scale;
        c.coordinatewise_means = f.eq17_deviation < 1e-8;
        if (c.coordinatewise_means && c.q_diagonal) {
            rep.path = RiskPath::Diagonal;
            for (const auto &m : rep.models)
                rep.risks.push_back(risk_diagonal(full.beta_tilde, Q.diagonal(), rep.inclusion, m, c));
        }
    } catch (const NumericError &) {
        c.coordinatewise_means = false;
    }
    for (std::size_t j = 0; j < rep.models.size(); ++j)
        rep.general_risks.push_back(risk(rep.models[j], rep.means[j], rep.beta_bar, Q));

    if (rep.path != RiskPath::Diagonal) {
        if (f.common_present && c.scaled_gram_loss && c.proportional_means && c.flat_common_prior &&
            (c.nested || c.semi_orthogonal)) {
            rep.path = RiskPath::Nuisance;
            const NuisanceProjection proj(data, common);
            const double gamma = Q.trace() / (data.X.transpose() * data.X).trace();
            const double b = rep.means.front().shrink_b.value_or(1.0);
            rep.risks = risk_nuisance(proj, post, gamma, b, c);
        } else {
            rep.path = RiskPath::General;
            rep.risks = rep.general_risks;
        }
    }

    rep.optimal = argmin_risk(rep.models, rep.risks);
    rep.maxprob = post.argmax();
    std::vector<std::uint8_t> bits(k);
    for (std::size_t i = 0; i < k; ++i) bits[i] = round_probability(rep.inclusion[i]) >= 0.5 ? 1 : 0;
    rep.median_model = ModelIndex(bits);
    try {
        const ModelIndex med = median_model(rep.inclusion, cls);
        rep.median = static_cast<std::size_t>(std::find(rep.models.begin(), rep.models.end(), med) - rep.models.begin());
        if (*rep.median == rep.models.size()) {
            rep.median.reset();
            rep.notes.push_back("median probability model " + med.to_string() + " was not enumerated");
        }
    } catch (const NotInClass &) {
        rep.notes.push_back("median probability model " + rep.median_model.to_string() + " is not in the class");
    }

    if (cls.is_all_subsets()) {
        const auto check = product_form_check(post, rep.inclusion, cls);
        f.product_form = check.holds;
    }
    if (common.empty())
        for (const auto &m : rep.models)
            if (m.dimension() == 0) {
                f.null_model_predicts_zero = true;
                rep.notes.push_back("the null model predicts 0");
            }

    if (c.coordinatewise_means && c.q_diagonal && f.graphical)
        rep.guarantees.push_back("median model is optimal: diagonal loss with coordinatewise posterior means over a "
                                 "graphical class");
    if (c.nested && c.scaled_gram_loss && c.proportional_means && (!f.common_present || c.flat_common_prior))
        rep.guarantees.push_back("median model is optimal: nested models under a scaled Gram loss");
    if (f.common_present && c.scaled_gram_loss && c.proportional_means && c.flat_common_prior && c.semi_orthogonal &&
        f.graphical)
        rep.guarantees.push_back("median model is optimal: common parameters with orthogonal remaining design over a "
                                 "graphical class");
    if (f.product_form) rep.notes.push_back("posterior has product form: median model is the highest-probability model");
    if (rep.guarantees.empty()) rep.guarantees.push_back(kNoGuarantee);
    if (f.near_collinear) rep.notes.push_back(kCollinearWarning);
    return rep;
}

} // namespace mpm
