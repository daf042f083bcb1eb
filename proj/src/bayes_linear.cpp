#include "mpm/bayes_linear.hpp"
#include "mpm/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mpm {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kLogTwoPi = 1.8378770664093454836;

template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

int numeric_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> &qr) {
    const auto &r = qr.matrixR();
    const Eigen::Index d = std::min(r.rows(), r.cols());
    if (d == 0) return 0;
    const double top = std::abs(r(0, 0));
    int rank = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        if (std::abs(r(i, i)) > kRankTol * top) ++rank;
    return rank;
}

bool subset(const Variables &a, const Variables &b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Split of a model's coefficients into a flat block and a normal block N(m, sigma^2 P^{-1}).
struct Block {
    Variables flat;   // local positions within l
    Variables normal; // local positions within l
    Eigen::MatrixXd precision;
    Eigen::VectorXd mean;
    std::string tag;
};

Variables local_positions(const ModelIndex &l, const Variables &common, bool want_common) {
    Variables out;
    const auto pos = l.positions();
    for (std::size_t j = 0; j < pos.size(); ++j) {
        const bool c = std::binary_search(common.begin(), common.end(), pos[j]);
        if (c == want_common) out.push_back(j);
    }
    return out;
}

Eigen::MatrixXd residual_projector(const Eigen::MatrixXd &X1, Eigen::Index n) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
    if (X1.cols() == 0) return q;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X1);
    if (numeric_rank(qr) < X1.cols()) throw RankDeficient("common-variable columns are collinear");
    Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, X1.cols());
    q.noalias() -= basis * basis.transpose();
    return q;
}

Block make_block(const Dataset &data, const ModelIndex &l, const PriorSpec &prior, const Variables &common) {
    Block b;
    const auto pos = l.positions();
    const Eigen::MatrixXd Xl = columns(data.X, l);
    const std::size_t kl = pos.size();
    std::visit(overloaded{
                   [&](const Reference &) {
                       b.flat.resize(kl);
                       std::iota(b.flat.begin(), b.flat.end(), std::size_t{0});
                       b.tag = "reference";
                   },
                   [&](const IndependentNormal &p) {
                       b.flat = local_positions(l, common, true);
                       b.normal = local_positions(l, common, false);
                       const auto m = b.normal.size();
                       b.precision = Eigen::MatrixXd::Zero(idx(m), idx(m));
                       b.mean.resize(idx(m));
                       for (std::size_t j = 0; j < m; ++j) {
                           const auto g = pos[b.normal[j]];
                           b.precision(idx(j), idx(j)) = 1.0 / p.lambda(idx(g));
                           b.mean(idx(j)) = p.mean(idx(g));
                       }
                       b.tag = "indnormal";
                       for (Eigen::Index i = 0; i < p.lambda.size(); ++i)
                           b.tag += fmt::format(":{:.17g}/{:.17g}", p.mean(i), p.lambda(i));
                   },
                   [&](const GType &g) {
                       b.normal.resize(kl);
                       std::iota(b.normal.begin(), b.normal.end(), std::size_t{0});
                       b.precision = Xl.transpose() * Xl / g.c;
                       b.mean = Eigen::VectorXd::Zero(idx(kl));
                       b.tag = fmt::format("g:{:.17g}", g.c);
                   },
                   [&](const GTypeNuisance &g) {
                       b.flat = local_positions(l, common, true);
                       b.normal = local_positions(l, common, false);
                       const Eigen::MatrixXd X1 = columns(data.X, common);
                       const Eigen::MatrixXd XN = columns(Xl, b.normal);
                       const Eigen::MatrixXd q = residual_projector(X1, Xl.rows());
                       b.precision = XN.transpose() * q * XN / g.c;
                       b.mean = Eigen::VectorXd::Zero(idx(b.normal.size()));
                       b.tag = fmt::format("gnuisance:{:.17g}", g.c);
                   },
                   [&](const EmpiricalBayesG &) {
                       throw ConfigError("empirical-Bayes prior must be resolved before use");
                   },
               },
               prior.family);
    return b;
}

struct Fit {
    Eigen::VectorXd beta; // local order
    double s = 0.0;       // augmented residual sum of squares
    double log_det_a = 0.0;
    double log_det_p = 0.0;
};

Fit augmented_fit(const Eigen::MatrixXd &Xl, const Eigen::VectorXd &y, const Block &b) {
    const Eigen::Index n = Xl.rows();
    const Eigen::Index kl = Xl.cols();
    const auto m = idx(b.normal.size());
    Fit fit;
    Eigen::MatrixXd lower_t; // L' with L L' = P
    if (m > 0) {
        Eigen::LLT<Eigen::MatrixXd> llt(b.precision);
        if (llt.info() != Eigen::Success) throw RankDeficient("prior precision is not positive definite");
        lower_t = llt.matrixU();
        for (Eigen::Index i = 0; i < m; ++i) fit.log_det_p += 2.0 * std::log(lower_t(i, i));
    }
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, kl);
    Eigen::VectorXd rhs(n + m);
    aug.topRows(n) = Xl;
    rhs.head(n) = y;
    if (m > 0) {
        for (Eigen::Index j = 0; j < m; ++j) aug.bottomRows(m).col(idx(b.normal[j])) = lower_t.col(j);
        rhs.tail(m) = lower_t * b.mean;
    }
    if (kl == 0) {
        fit.s = y.squaredNorm();
        return fit;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aug);
    if (numeric_rank(qr) < kl) throw RankDeficient("model design is rank deficient");
    fit.beta = qr.solve(rhs);
    fit.s = (rhs - aug * fit.beta).squaredNorm();
    const auto &r = qr.matrixR();
    for (Eigen::Index i = 0; i < kl; ++i) fit.log_det_a += 2.0 * std::log(std::abs(r(i, i)));
    return fit;
}

std::string sigma_tag(const SigmaSpec &s) {
    return std::visit(overloaded{[](const KnownSigma &k) { return fmt::format("known:{:.17g}", k.sigma2); },
                                 [](const UnknownSigma &) { return std::string("unknown"); }},
                      s);
}

} // namespace

// ---------------------------------------------------------------------------------------------

Dataset::Dataset(Eigen::MatrixXd X_, Eigen::VectorXd y_, std::vector<std::string> names_, std::string response_)
    : X(std::move(X_)), y(std::move(y_)), names(std::move(names_)), response(std::move(response_)) {
    if (X.rows() != y.size()) throw DimensionMismatch("X and y have different row counts");
    if (names.empty())
        for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
    if (names.size() != k()) throw DimensionMismatch("one name per column required");
    if (X.cols() == 0) throw ConfigError("dataset has no covariates");
    if (n() <= k()) throw InsufficientData(fmt::format("need n > k, got n={} k={}", n(), k()));
    if (!X.allFinite() || !y.allFinite()) throw ConfigError("dataset contains non-finite values");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (numeric_rank(qr) < X.cols()) throw RankDeficient("design matrix does not have full column rank");
}

std::size_t Dataset::column(const std::string &name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ConfigError("no column named '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

Eigen::MatrixXd columns(const Eigen::MatrixXd &X, const Variables &positions) {
    Eigen::MatrixXd out(X.rows(), idx(positions.size()));
    for (std::size_t j = 0; j < positions.size(); ++j) out.col(idx(j)) = X.col(idx(positions[j]));
    return out;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd &X, const ModelIndex &l) {
    if (l.size() != static_cast<std::size_t>(X.cols())) throw DimensionMismatch("model length differs from k");
    return columns(X, l.positions());
}

IndependentNormal IndependentNormal::standard(std::size_t k, double lambda) {
    return {Eigen::VectorXd::Zero(idx(k)), Eigen::VectorXd::Constant(idx(k), lambda)};
}

void PriorSpec::validate(std::size_t k) const {
    std::visit(overloaded{
                   [](const Reference &) {},
                   [&](const IndependentNormal &p) {
                       if (static_cast<std::size_t>(p.mean.size()) != k || static_cast<std::size_t>(p.lambda.size()) != k)
                           throw DimensionMismatch("independent normal prior needs length-k mean and lambda");
                       if ((p.lambda.array() <= 0.0).any()) throw ConfigError("lambda must be positive");
                   },
                   [](const GType &g) {
                       if (!(g.c > 0.0)) throw ConfigError("g-prior scale c must be positive");
                   },
                   [](const GTypeNuisance &g) {
                       if (!(g.c > 0.0)) throw ConfigError("g-prior scale c must be positive");
                   },
                   [](const EmpiricalBayesG &) {},
               },
               family);
    if (const auto *ks = std::get_if<KnownSigma>(&sigma); ks && !(ks->sigma2 > 0.0))
        throw ConfigError("known sigma^2 must be positive");
    if (const auto *pb = std::get_if<ProductBernoulli>(&model_prior)) {
        if (pb->p0.size() != k) throw DimensionMismatch("Bernoulli model prior needs k probabilities");
        for (double v : pb->p0)
            if (!(v > 0.0 && v <= 1.0)) throw ConfigError("Bernoulli inclusion probabilities must lie in (0,1]");
    }
}

std::string PriorSpec::describe() const {
    std::string fam = std::visit(overloaded{
                                     [](const Reference &) { return std::string("reference"); },
                                     [](const IndependentNormal &) { return std::string("independent normal"); },
                                     [](const GType &g) { return fmt::format("g-prior c={:.6g}", g.c); },
                                     [](const GTypeNuisance &g) { return fmt::format("nuisance g-prior c={:.6g}", g.c); },
                                     [](const EmpiricalBayesG &) { return std::string("empirical-Bayes g-prior"); },
                                 },
                                 family);
    return fam + ", sigma " + sigma_tag(sigma);
}

// ---------------------------------------------------------------------------------------------

LeastSquares least_squares(const Eigen::MatrixXd &Xl, const Eigen::VectorXd &y) {
    LeastSquares out;
    if (Xl.cols() == 0) {
        out.rss = y.squaredNorm();
        return out;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xl);
    if (numeric_rank(qr) < Xl.cols()) throw RankDeficient("model design is rank deficient");
    out.beta = qr.solve(y);
    out.rss = (y - Xl * out.beta).squaredNorm();
    return out;
}

LeastSquares least_squares(const Dataset &data, const ModelIndex &l) { return least_squares(columns(data.X, l), data.y); }

NuisanceProjection::NuisanceProjection(const Dataset &data, Variables common)
    : x_(data.X), y_(data.y), common_(std::move(common)) {
    std::sort(common_.begin(), common_.end());
    q_ = residual_projector(columns(data.X, common_), data.X.rows());
}

Eigen::MatrixXd NuisanceProjection::projector(const ModelIndex &l) const {
    Variables rest;
    for (auto i : l.positions())
        if (!std::binary_search(common_.begin(), common_.end(), i)) rest.push_back(i);
    const Eigen::Index n = x_.rows();
    if (rest.empty()) return Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd m = q_ * columns(x_, rest);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    if (numeric_rank(qr) < m.cols()) throw RankDeficient("projected model columns are collinear");
    Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, m.cols());
    return basis * basis.transpose();
}

NuisanceProjection nuisance_projection(const Dataset &data, const Variables &common) {
    return NuisanceProjection(data, common);
}

double gram_offdiagonal_ratio(const Eigen::MatrixXd &X) {
    const Eigen::MatrixXd g = X.transpose() * X;
    const double diag = g.diagonal().cwiseAbs().maxCoeff();
    double off = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            if (i != j) off = std::max(off, std::abs(g(i, j)));
    return diag > 0.0 ? off / diag : 0.0;
}

PosteriorMean posterior_mean(const Dataset &data, const ModelIndex &l, const PriorSpec &prior, const Variables &common) {
    if (std::holds_alternative<IndependentNormal>(prior.family) && gram_offdiagonal_ratio(data.X) >= 1e-8)
        throw ConditionViolated("independent normal posterior means require a diagonal X'X");
    PosteriorMean out;
    if (std::holds_alternative<Reference>(prior.family)) {
        out.beta_tilde = least_squares(data, l).beta;
        out.shrink_b = 1.0;
        return out;
    }
    const Block b = make_block(data, l, prior, common);
    out.beta_tilde = augmented_fit(columns(data.X, l), data.y, b).beta;
    if (const auto *g = std::get_if<GType>(&prior.family)) out.shrink_b = g->c / (1.0 + g->c);
    if (const auto *g = std::get_if<GTypeNuisance>(&prior.family)) out.shrink_b = g->c / (1.0 + g->c);
    return out;
}

LogMarginal log_marginal(const Dataset &data, const ModelIndex &l, const PriorSpec &prior, const Variables &common) {
    Variables sorted_common = common;
    std::sort(sorted_common.begin(), sorted_common.end());
    const Block b = make_block(data, l, prior, sorted_common);
    const auto pos = l.positions();
    Variables flat_global;
    for (auto j : b.flat) flat_global.push_back(pos[j]);
    if (!subset(flat_global, sorted_common))
        throw ImproperMarginal("a flat prior on a non-common coefficient leaves the marginal defined only up to "
                               "a model-specific constant");
    const Fit fit = augmented_fit(columns(data.X, l), data.y, b);
    const double nu = static_cast<double>(data.n() - flat_global.size());
    double value = 0.5 * fit.log_det_p - 0.5 * fit.log_det_a;
    if (const auto *ks = std::get_if<KnownSigma>(&prior.sigma)) {
        value += -0.5 * nu * (kLogTwoPi + std::log(ks->sigma2)) - fit.s / (2.0 * ks->sigma2);
    } else {
        if (!(fit.s > 0.0)) throw RankDeficient("zero residual: marginal is unbounded");
        value += -0.5 * nu * kLogTwoPi + std::log(0.5) + std::lgamma(0.5 * nu) - 0.5 * nu * std::log(0.5 * fit.s);
    }
    std::string flat_tag;
    for (auto c : sorted_common) flat_tag += fmt::format("{},", c);
    return {value, b.tag + ";" + sigma_tag(prior.sigma) + ";flat=" + flat_tag};
}

double reference_log_marginal(const Eigen::MatrixXd &Xl, const Eigen::VectorXd &y) {
    const Eigen::Index n = Xl.rows();
    const Eigen::Index k = Xl.cols();
    if (n <= k) throw InsufficientData("reference marginal needs more rows than columns");
    double log_det = 0.0;
    double rss = y.squaredNorm();
    if (k > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xl);
        if (numeric_rank(qr) < k) throw RankDeficient("model design is rank deficient");
        const Eigen::VectorXd beta = qr.solve(y);
        rss = (y - Xl * beta).squaredNorm();
        const auto &r = qr.matrixR();
        for (Eigen::Index i = 0; i < k; ++i) log_det += 2.0 * std::log(std::abs(r(i, i)));
    }
    if (!(rss > 0.0)) throw RankDeficient("zero residual: reference marginal is unbounded");
    const double nu = static_cast<double>(n - k);
    return std::log(0.5) + std::lgamma(0.5 * nu) - 0.5 * nu * std::log(M_PI) - 0.5 * log_det - 0.5 * nu * std::log(rss);
}

double golden_section_max(const std::function<double(double)> &f, double lo, double hi, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double mid = 0.5 * (a + b);
    // The interior bracket never reaches the endpoints, so compare against them explicitly.
    double best = mid, fbest = f(mid);
    for (double e : {lo, hi}) {
        const double fe = f(e);
        if (fe > fbest) best = e, fbest = fe;
    }
    return best;
}

namespace {

PriorSpec with_scale(const PriorSpec &prior, double c, bool nuisance_default) {
    PriorSpec out = prior;
    std::visit(overloaded{
                   [&](const GType &) { out.family = GType{c}; },
                   [&](const GTypeNuisance &) { out.family = GTypeNuisance{c}; },
                   [&](const IndependentNormal &p) { out.family = IndependentNormal{p.mean, p.lambda * c}; },
                   [&](const EmpiricalBayesG &e) {
                       if (e.nuisance || nuisance_default) out.family = GTypeNuisance{c};
                       else out.family = GType{c};
                   },
                   [](const Reference &) { throw ConfigError("reference prior has no scale to estimate"); },
               },
               prior.family);
    return out;
}

double log_sum_exp(const std::vector<double> &v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

} // namespace

EmpiricalBayesResult empirical_bayes_c(const Dataset &data, const ModelClass &cls, const PriorSpec &prior,
                                       EbObjective objective) {
    if (const auto *e = std::get_if<EmpiricalBayesG>(&prior.family)) objective = e->objective;
    const auto models = enumerate_models(cls);
    ModelIndex full = models.front();
    for (const auto &m : models) full = full.unite(m);
    const Variables &common = cls.common();

    auto f = [&](double log_c) {
        const PriorSpec p = with_scale(prior, std::exp(log_c), false);
        if (objective == EbObjective::FullModel) return log_marginal(data, full, p, common).value;
        std::vector<double> v;
        v.reserve(models.size());
        for (const auto &m : models) v.push_back(log_marginal(data, m, p, common).value);
        return log_sum_exp(v) - std::log(static_cast<double>(models.size()));
    };
    constexpr double lo = -10.0, hi = 10.0;
    const double best = golden_section_max(f, lo, hi, 1e-6);
    const bool boundary = best - lo < 1e-4 || hi - best < 1e-4;
    return {std::exp(best), boundary, f(best)};
}

PriorSpec resolve_empirical_bayes(const Dataset &data, const ModelClass &cls, const PriorSpec &prior,
                                  EmpiricalBayesResult *fit) {
    if (!std::holds_alternative<EmpiricalBayesG>(prior.family)) return prior;
    const auto r = empirical_bayes_c(data, cls, prior);
    if (fit) *fit = r;
    return with_scale(prior, r.c, false);
}

} // namespace mpm
