#include "mpm/posterior_probs.hpp"
#include "mpm/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace mpm {

namespace {

template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double> &v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

std::vector<double> normalize_logs(const std::vector<double> &logs) {
    const double z = log_sum_exp(logs);
    if (!std::isfinite(z)) throw NumericError("posterior weights are all zero or non-finite");
    std::vector<double> out(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) out[i] = std::exp(logs[i] - z);
    return out;
}

std::size_t free_dimension(const ModelIndex &l, const ModelClass &cls) {
    std::size_t d = 0;
    for (auto i : l.positions())
        if (!cls.is_common(i)) ++d;
    return d;
}

std::vector<std::size_t> row_subset(std::size_t n, std::size_t m, std::mt19937_64 &rng) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(m);
    std::sort(rows.begin(), rows.end());
    return rows;
}

double log_binomial(std::size_t n, std::size_t m) {
    return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(m) + 1) -
           std::lgamma(static_cast<double>(n - m) + 1);
}

// Advances `c` to the next m-combination of {0..n-1} in lexicographic order; false after the last.
bool next_combination(std::vector<std::size_t> &c, std::size_t n) {
    const std::size_t m = c.size();
    std::size_t i = m;
    while (i > 0 && c[i - 1] == n - m + i - 1) --i;
    if (i == 0) return false;
    ++c[i - 1];
    for (std::size_t j = i; j < m; ++j) c[j] = c[j - 1] + 1;
    return true;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd &X, const std::vector<std::size_t> &rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd &y, const std::vector<std::size_t> &rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
    return out;
}

} // namespace

std::string to_string(PosteriorSource s) {
    switch (s) {
    case PosteriorSource::FullBayes: return "bayes";
    case PosteriorSource::BIC: return "bic";
    case PosteriorSource::AIBF: return "aibf";
    case PosteriorSource::External: return "external";
    }
    return "unknown";
}

ModelPosterior ModelPosterior::from_table(std::vector<ModelIndex> models, std::vector<double> probs,
                                          PosteriorSource source, double tol) {
    if (models.size() != probs.size()) throw DimensionMismatch("one probability per model required");
    if (models.empty()) throw NotNormalized("empty posterior");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0)) throw NotNormalized("negative probability for " + models[i].to_string());
        if (models[i].size() != models.front().size()) throw DimensionMismatch("model lengths differ");
        total += probs[i];
    }
    if (std::abs(total - 1.0) > tol) throw NotNormalized(fmt::format("probabilities sum to {:.12g}", total));
    std::set<ModelIndex> seen(models.begin(), models.end());
    if (seen.size() != models.size()) throw InvalidClass("a model appears twice in the posterior");
    return {std::move(models), std::move(probs), source};
}

double ModelPosterior::prob(const ModelIndex &l) const {
    for (std::size_t i = 0; i < models.size(); ++i)
        if (models[i] == l) return probs[i];
    return 0.0;
}

std::size_t ModelPosterior::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < models.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
        else if (probs[i] == probs[best]) {
            const auto di = models[i].dimension(), db = models[best].dimension();
            if (di < db || (di == db && models[i] < models[best])) best = i;
        }
    }
    return best;
}

std::vector<double> log_model_prior(const ModelPriorSpec &spec, const ModelClass &cls, const std::vector<ModelIndex> &models) {
    std::vector<double> out(models.size(), 0.0);
    std::visit(overloaded{
                   [](const UniformPrior &) {},
                   [&](const JeffreysOrder &) {
                       std::map<std::size_t, std::size_t> per_order;
                       for (const auto &m : models) ++per_order[free_dimension(m, cls) + 1];
                       for (std::size_t i = 0; i < models.size(); ++i) {
                           const auto j = free_dimension(models[i], cls) + 1;
                           out[i] = -std::log(static_cast<double>(j)) - std::log(static_cast<double>(per_order[j]));
                       }
                   },
                   [&](const ProductBernoulli &pb) {
                       if (pb.p0.size() != cls.k()) throw DimensionMismatch("Bernoulli model prior needs k probabilities");
                       for (std::size_t i = 0; i < models.size(); ++i)
                           for (std::size_t v = 0; v < cls.k(); ++v) {
                               if (cls.is_common(v)) continue;
                               const double q = models[i].contains(v) ? pb.p0[v] : 1.0 - pb.p0[v];
                               out[i] += q > 0.0 ? std::log(q) : kNegInf;
                           }
                   },
                   [&](const ExplicitPrior &ep) {
                       for (std::size_t i = 0; i < models.size(); ++i) {
                           auto it = ep.weights.find(models[i]);
                           if (it == ep.weights.end())
                               throw ConfigError("no prior weight given for model " + models[i].to_string());
                           if (!(it->second >= 0.0)) throw ConfigError("negative prior weight");
                           out[i] = it->second > 0.0 ? std::log(it->second) : kNegInf;
                       }
                   },
               },
               spec);
    return out;
}

ModelPosterior model_posteriors(const std::vector<ModelIndex> &models, const std::vector<LogMarginal> &log_marginals,
                                const std::vector<double> &log_prior, PosteriorSource source) {
    if (models.size() != log_marginals.size() || models.size() != log_prior.size())
        throw DimensionMismatch("models, marginals and prior weights must align");
    if (models.empty()) throw InvalidClass("no models");
    for (const auto &lm : log_marginals)
        if (lm.config != log_marginals.front().config)
            throw MixedConstants("marginals computed under '" + lm.config + "' and '" + log_marginals.front().config + "'");
    std::vector<double> logs(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) logs[i] = log_marginals[i].value + log_prior[i];
    return {models, normalize_logs(logs), source};
}

ModelPosterior bayes_posteriors(const Dataset &data, const ModelClass &cls, const PriorSpec &prior) {
    const auto models = enumerate_models(cls);
    std::vector<LogMarginal> lms;
    lms.reserve(models.size());
    for (const auto &m : models) lms.push_back(log_marginal(data, m, prior, cls.common()));
    return model_posteriors(models, lms, log_model_prior(prior.model_prior, cls, models), PosteriorSource::FullBayes);
}

ModelPosterior bic_posteriors(const Dataset &data, const ModelClass &cls, const ModelPriorSpec &model_prior,
                              const SigmaSpec &sigma) {
    const auto models = enumerate_models(cls);
    const auto prior = log_model_prior(model_prior, cls, models);
    const double n = static_cast<double>(data.n());
    std::vector<double> logs(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        const double rss = least_squares(data, models[i]).rss;
        double loglik;
        if (const auto *ks = std::get_if<KnownSigma>(&sigma))
            loglik = -0.5 * n * std::log(2.0 * M_PI * ks->sigma2) - rss / (2.0 * ks->sigma2);
        else
            loglik = rss > 0.0 ? -0.5 * n * (std::log(2.0 * M_PI * rss / n) + 1.0)
                               : std::numeric_limits<double>::infinity();
        logs[i] = loglik - 0.5 * static_cast<double>(models[i].dimension()) * std::log(n) + prior[i];
    }
    // Exact fits dominate every model with positive residual.
    if (std::any_of(logs.begin(), logs.end(), [](double v) { return std::isinf(v) && v > 0; })) {
        std::size_t best = models.size();
        for (std::size_t i = 0; i < models.size(); ++i)
            if (std::isinf(logs[i]) && logs[i] > 0 && (best == models.size() || models[i].dimension() < models[best].dimension()))
                best = i;
        std::vector<double> probs(models.size(), 0.0);
        probs[best] = 1.0;
        return {models, probs, PosteriorSource::BIC};
    }
    return {models, normalize_logs(logs), PosteriorSource::BIC};
}

ModelPosterior aibf_posteriors(const Dataset &data, const ModelClass &cls, const ModelPriorSpec &model_prior,
                               const AibfOptions &options, AibfDiagnostics *diagnostics) {
    const auto models = enumerate_models(cls);
    ModelIndex full = models.front();
    std::size_t max_dim = 0;
    for (const auto &m : models) {
        full = full.unite(m);
        max_dim = std::max(max_dim, m.dimension());
    }
    const auto full_it = std::find(models.begin(), models.end(), full);
    if (full_it == models.end())
        throw InvalidClass("the encompassing model " + full.to_string() + " is not in the class");
    const std::size_t n = data.n();
    const std::size_t m = max_dim + 1;
    if (n <= m) throw InsufficientData(fmt::format("n = {} does not exceed the training-sample size {}", n, m));

    std::vector<Eigen::MatrixXd> designs;
    for (const auto &l : models) designs.push_back(columns(data.X, l));
    const auto full_pos = static_cast<std::size_t>(full_it - models.begin());

    std::vector<double> log_bn(models.size());
    {
        const double lf = reference_log_marginal(designs[full_pos], data.y);
        for (std::size_t i = 0; i < models.size(); ++i) log_bn[i] = reference_log_marginal(designs[i], data.y) - lf;
    }

    // Training-sample log Bayes factors log B^N_{l,F}(y(t)), one vector per model.
    std::vector<std::vector<double>> log_bt(models.size());
    AibfDiagnostics diag;
    diag.training_size = m;

    auto accumulate = [&](const std::vector<std::size_t> &rows) {
        const Eigen::VectorXd yt = take_rows(data.y, rows);
        std::vector<double> vals(models.size());
        try {
            for (std::size_t i = 0; i < models.size(); ++i)
                vals[i] = reference_log_marginal(take_rows(designs[i], rows), yt);
        } catch (const NumericError &) {
            return;
        }
        // A training sample the full model fits exactly carries no information about scale.
        const LeastSquares fit = least_squares(take_rows(designs[full_pos], rows), yt);
        if (!(fit.rss > 1e-12 * yt.squaredNorm())) return;
        for (std::size_t i = 0; i < models.size(); ++i) log_bt[i].push_back(vals[i] - vals[full_pos]);
        ++diag.used_samples;
    };

    const double log_count = log_binomial(n, m);
    if (log_count <= std::log(static_cast<double>(options.max_training_samples)) + 1e-9) {
        std::vector<std::size_t> rows(m);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        do {
            ++diag.candidate_samples;
            accumulate(rows);
        } while (next_combination(rows, n));
    } else {
        diag.subsampled = true;
        std::mt19937_64 rng(options.seed);
        std::set<std::vector<std::size_t>> drawn;
        while (drawn.size() < options.max_training_samples) {
            auto rows = row_subset(n, m, rng);
            if (!drawn.insert(rows).second) continue;
            ++diag.candidate_samples;
            accumulate(rows);
        }
    }
    if (diag.used_samples == 0) throw NoValidTrainingSamples("every training sample is degenerate for some model");
    if (diagnostics) *diagnostics = diag;

    const auto prior = log_model_prior(model_prior, cls, models);
    const double log_t = std::log(static_cast<double>(diag.used_samples));
    std::vector<double> logs(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) logs[i] = log_bn[i] - (log_sum_exp(log_bt[i]) - log_t) + prior[i];
    return {models, normalize_logs(logs), PosteriorSource::AIBF};
}

InclusionProbs inclusion_probabilities(const ModelPosterior &post) {
    const std::size_t k = post.k();
    std::vector<double> p(k, 0.0);
    for (std::size_t v = 0; v < k; ++v) {
        bool always = true;
        for (std::size_t j = 0; j < post.size(); ++j) {
            if (post.models[j].contains(v)) p[v] += post.probs[j];
            else always = false;
        }
        p[v] = always ? 1.0 : std::clamp(p[v], 0.0, 1.0);
    }
    return InclusionProbs(std::move(p));
}

double joint_inclusion(const ModelPosterior &post, const Variables &vars) {
    if (vars.empty()) throw ConfigError("joint inclusion needs at least one variable");
    double total = 0.0;
    for (std::size_t j = 0; j < post.size(); ++j)
        if (post.models[j].contains_all(vars)) total += post.probs[j];
    return std::min(total, 1.0);
}

InclusionProbs inclusion_from_visits(const std::vector<ModelIndex> &visit_log) {
    if (visit_log.empty()) throw EmptyLog("no visited models");
    const std::size_t k = visit_log.front().size();
    std::vector<std::size_t> counts(k, 0);
    for (const auto &l : visit_log) {
        if (l.size() != k) throw DimensionMismatch("visited models have different lengths");
        for (std::size_t i = 0; i < k; ++i) counts[i] += l.contains(i);
    }
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(visit_log.size());
    return InclusionProbs(std::move(p));
}

ProductFormCheck product_form_check(const ModelPosterior &post, const InclusionProbs &p, const ModelClass &cls) {
    if (!cls.is_all_subsets()) throw WrongClass("the product form is only defined for the all-subsets class");
    if (p.size() != cls.k()) throw DimensionMismatch("inclusion probabilities do not match the class");
    double worst = 0.0;
    for (const auto &l : enumerate_models(cls)) {
        double prod = 1.0;
        for (std::size_t i = 0; i < p.size(); ++i) prod *= l.contains(i) ? p[i] : 1.0 - p[i];
        worst = std::max(worst, std::abs(post.prob(l) - prod));
    }
    return {worst < 1e-8, worst};
}

} // namespace mpm
