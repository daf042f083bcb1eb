#include "mpm/shibata_bench.hpp"
#include "mpm/bayes_linear.hpp"
#include "mpm/errors.hpp"
#include "mpm/model_space.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>
#include <vector>

namespace mpm {

namespace {

constexpr unsigned kGaussPoints = 20;
constexpr int kGradingLevels = 60;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// int_0^pi g(theta) cos(m theta) w(theta) d theta for m = 0..k.
Eigen::VectorXd cosine_moments(const std::function<double(double)> &g, const std::function<double(double)> &w,
                               std::size_t k, std::size_t panels) {
    if (panels == 0) panels = std::max<std::size_t>(16, 2 * k);
    using rule = boost::math::quadrature::gauss<double, kGaussPoints>;
    const auto &nodes = rule::abscissa();
    const auto &weights = rule::weights();

    Eigen::VectorXd out = Eigen::VectorXd::Zero(idx(k + 1));
    auto accumulate = [&](double lo, double hi) {
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            for (double sgn : {-1.0, 1.0}) {
                if (nodes[i] == 0.0 && sgn > 0) continue;
                const double t = mid + sgn * half * nodes[i];
                const double v = weights[i] * half * g(t) * w(t);
                // cos(m t) by the Chebyshev recurrence.
                double c_prev = 1.0, c = std::cos(t);
                out(0) += v;
                if (k >= 1) out(1) += v * c;
                for (std::size_t m = 2; m <= k; ++m) {
                    const double c_next = 2.0 * std::cos(t) * c - c_prev;
                    c_prev = c;
                    c = c_next;
                    out(idx(m)) += v * c;
                }
            }
        }
    };
    const double h = M_PI / static_cast<double>(panels);
    // Geometric grading toward the endpoint singularity at theta = 0.
    double right = h;
    for (int j = 0; j < kGradingLevels; ++j) {
        accumulate(0.5 * right, right);
        right *= 0.5;
    }
    accumulate(0.0, right);
    for (std::size_t p = 1; p < panels; ++p) accumulate(h * static_cast<double>(p), h * static_cast<double>(p + 1));
    return out;
}

// f(cos theta) = -log(1 - cos theta), written to avoid cancellation near theta = 0.
double f_theta(double t) {
    const double s = std::sin(0.5 * t);
    return -std::log(2.0 * s * s);
}

double log_normal_density(double x, double var) {
    return -0.5 * (std::log(2.0 * M_PI * var) + x * x / var);
}

double sample_mean(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double> &v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

} // namespace

void BenchConfig::validate() const {
    if (k < 1) throw ConfigError("k must be at least 1");
    if (k >= n) throw ConfigError("k must be smaller than n");
    if (replicates < 1) throw ConfigError("at least one replicate is required");
    if (!(sigma2 >= 0.0)) throw ConfigError("sigma2 must be non-negative");
    if (!(a > 0.0)) throw ConfigError("the decay exponent a must be positive");
}

BenchConfig BenchConfig::from_json(const std::string &text) {
    BenchConfig cfg;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(std::string("benchmark config: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("benchmark config must be a JSON object");
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto &key = it.key();
            if (key == "n") cfg.n = it->get<std::size_t>();
            else if (key == "sigma2") cfg.sigma2 = it->get<double>();
            else if (key == "a") cfg.a = it->get<double>();
            else if (key == "k") cfg.k = it->get<std::size_t>();
            else if (key == "replicates") cfg.replicates = it->get<std::size_t>();
            else if (key == "seed") cfg.seed = it->get<std::uint64_t>();
            else if (key == "threads") cfg.threads = it->get<unsigned>();
            else throw ConfigError("unknown benchmark config field '" + key + "'");
        }
    } catch (const nlohmann::json::type_error &e) {
        throw ParseError(std::string("benchmark config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

Eigen::MatrixXd chebyshev_design(std::size_t n, std::size_t k) {
    if (k >= n) throw ConfigError("k must be smaller than n");
    Eigen::MatrixXd X(idx(n), idx(k));
    for (std::size_t i = 1; i <= n; ++i) {
        const double theta = (static_cast<double>(n - i) + 0.5) * M_PI / static_cast<double>(n);
        for (std::size_t m = 1; m <= k; ++m) X(idx(i - 1), idx(m - 1)) = std::cos(static_cast<double>(m) * theta);
    }
    return X;
}

Eigen::VectorXd chebyshev_coefficients(const std::function<double(double)> &g, std::size_t k, std::size_t panels) {
    return cosine_moments(g, [](double) { return 1.0; }, k, panels) * (2.0 / M_PI);
}

double true_function(double x) { return -std::log(1.0 - x); }

Eigen::VectorXd true_coefficients(std::size_t k, std::size_t panels) {
    return chebyshev_coefficients(f_theta, k, panels).tail(idx(k));
}

Eigen::MatrixXd chebyshev_gram(std::size_t k) {
    auto integral = [](std::size_t j) { return j % 2 == 1 ? 0.0 : 2.0 / (1.0 - static_cast<double>(j * j)); };
    Eigen::MatrixXd g(idx(k), idx(k));
    for (std::size_t i = 1; i <= k; ++i)
        for (std::size_t j = 1; j <= k; ++j)
            g(idx(i - 1), idx(j - 1)) = 0.5 * (integral(i + j) + integral(i > j ? i - j : j - i));
    return g;
}

BenchContext::BenchContext(const BenchConfig &c) : cfg(c) {
    cfg.validate();
    X = chebyshev_design(cfg.n, cfg.k);
    x.resize(idx(cfg.n));
    f.resize(idx(cfg.n));
    for (std::size_t i = 1; i <= cfg.n; ++i) {
        const double theta = (static_cast<double>(cfg.n - i) + 0.5) * M_PI / static_cast<double>(cfg.n);
        x(idx(i - 1)) = std::cos(theta);
        f(idx(i - 1)) = f_theta(theta);
    }
    beta = true_coefficients(cfg.k);
    gram = chebyshev_gram(cfg.k);
    f_basis = cosine_moments(f_theta, [](double t) { return std::sin(t); }, cfg.k, 0).tail(idx(cfg.k));
    const double l2 = std::log(2.0);
    f_sq = 2.0 * l2 * l2 - 4.0 * l2 + 4.0;
}

ReplicateResult run_replicate(const BenchContext &ctx, std::uint64_t seed) {
    const auto &cfg = ctx.cfg;
    const std::size_t n = cfg.n, k = cfg.k;
    const double nd = static_cast<double>(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, cfg.sigma2 > 0.0 ? std::sqrt(cfg.sigma2) : 1.0);
    Eigen::VectorXd y = ctx.f;
    if (cfg.sigma2 > 0.0)
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise(rng);

    const Eigen::VectorXd bhat = (2.0 / nd) * ctx.X.transpose() * y;
    const double v0 = 2.0 * cfg.sigma2 / nd;
    Eigen::VectorXd tau(idx(k));
    for (std::size_t i = 1; i <= k; ++i) tau(idx(i - 1)) = std::pow(static_cast<double>(i), -cfg.a);

    ReplicateResult r;
    auto objective = [&](double log_c) {
        const double c = std::exp(log_c);
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += log_normal_density(bhat(idx(i)), c * tau(idx(i)) + v0);
        return s;
    };
    const double log_c = golden_section_max(objective, -10.0, 10.0, 1e-6);
    r.c_hat = std::exp(log_c);
    r.c_boundary = log_c + 10.0 < 1e-4 || 10.0 - log_c < 1e-4;

    Eigen::VectorXd btilde(idx(k));
    for (std::size_t i = 0; i < k; ++i) {
        const double prior_var = r.c_hat * tau(idx(i));
        btilde(idx(i)) = v0 > 0.0 ? bhat(idx(i)) * prior_var / (prior_var + v0) : bhat(idx(i));
    }

    // Posterior over orders 1..k with equal prior.
    r.probs = Eigen::VectorXd::Zero(idx(k));
    if (v0 > 0.0) {
        std::vector<double> logm(k);
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            acc += log_normal_density(bhat(idx(i)), r.c_hat * tau(idx(i)) + v0) - log_normal_density(bhat(idx(i)), v0);
            logm[i] = acc;
        }
        const double top = *std::max_element(logm.begin(), logm.end());
        for (std::size_t i = 0; i < k; ++i) r.probs(idx(i)) = std::exp(logm[i] - top);
        r.probs /= r.probs.sum();
    } else {
        r.probs(idx(k - 1)) = 1.0; // noise-free data: the largest model explains everything
    }

    Eigen::Index jmax_idx;
    r.probs.maxCoeff(&jmax_idx);
    const std::size_t jmax = static_cast<std::size_t>(jmax_idx) + 1;
    const std::size_t jmed = median_model_nested(std::vector<double>(r.probs.data(), r.probs.data() + k)) + 1;
    r.median_order = jmed;

    // Inclusion of coefficient i: P(order >= i).
    Eigen::VectorXd incl(idx(k));
    double tail = 0.0;
    for (std::size_t i = k; i-- > 0;) {
        tail += r.probs(idx(i));
        incl(idx(i)) = std::min(tail, 1.0);
    }

    // Least squares criteria with sigma^2 known; RSS_j uses X'X = (n/2) I.
    std::size_t jbic = 1, jaic = 1;
    {
        double best_bic = -std::numeric_limits<double>::infinity(), best_aic = best_bic;
        double best_rss = std::numeric_limits<double>::infinity();
        double rss = y.squaredNorm();
        for (std::size_t j = 1; j <= k; ++j) {
            rss = std::max(0.0, rss - 0.5 * nd * bhat(idx(j - 1)) * bhat(idx(j - 1)));
            if (cfg.sigma2 > 0.0) {
                const double fit = -rss / (2.0 * cfg.sigma2);
                const double bic = fit - 0.5 * static_cast<double>(j) * std::log(nd);
                const double aic = fit - static_cast<double>(j);
                if (bic > best_bic) best_bic = bic, jbic = j;
                if (aic > best_aic) best_aic = aic, jaic = j;
            } else if (rss < best_rss) {
                best_rss = rss, jbic = jaic = j;
            }
        }
    }

    auto truncated = [&](const Eigen::VectorXd &v, std::size_t j) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(idx(k));
        out.head(idx(j)) = v.head(idx(j));
        return out;
    };
    const Eigen::VectorXd bbar = incl.cwiseProduct(btilde);
    const std::array<Eigen::VectorXd, kMethodCount> est = {truncated(btilde, jmax), truncated(btilde, jmed), bbar,
                                                           truncated(bhat, jbic), truncated(bhat, jaic)};
    r.size = {static_cast<double>(jmax), static_cast<double>(jmed), incl.sum(), static_cast<double>(jbic),
              static_cast<double>(jaic)};
    for (std::size_t m = 0; m < kMethodCount; ++m) {
        r.loss[m] = (est[m] - ctx.beta).squaredNorm();
        r.integrated_loss[m] = std::max(0.0, ctx.f_sq - 2.0 * est[m].dot(ctx.f_basis) + est[m].dot(ctx.gram * est[m]));
        r.bayes_risk[m] = 0.5 * nd * (est[m] - bbar).squaredNorm();
    }
    r.bayes_risk[static_cast<std::size_t>(Method::ModelAv)] = 0.0;
    return r;
}

ReplicateResult run_replicate(const BenchConfig &cfg, std::uint64_t seed) { return run_replicate(BenchContext(cfg), seed); }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

BenchResult run_benchmark(const BenchConfig &cfg) {
    const BenchContext ctx(cfg);
    const std::size_t N = cfg.replicates;
    std::vector<ReplicateResult> reps(N);
    const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(N)));
    auto work = [&](unsigned t) {
        for (std::size_t r = t; r < N; r += threads) reps[r] = run_replicate(ctx, splitmix64(cfg.seed + r));
    };
    if (threads == 1) work(0);
    else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto &th : pool) th.join();
    }

    BenchResult out;
    out.cfg = cfg;
    for (std::size_t m = 0; m < kMethodCount; ++m) {
        std::vector<double> loss(N), integrated(N), size(N);
        for (std::size_t r = 0; r < N; ++r) {
            loss[r] = reps[r].loss[m];
            integrated[r] = reps[r].integrated_loss[m];
            size[r] = reps[r].size[m];
        }
        auto &s = out.methods[m];
        s.loss = sample_mean(loss), s.loss_se = standard_error(loss);
        s.integrated = sample_mean(integrated), s.integrated_se = standard_error(integrated);
        s.size = sample_mean(size), s.size_se = standard_error(size);
    }
    double csum = 0.0;
    for (const auto &r : reps) {
        csum += r.c_hat;
        out.boundary_fits += r.c_boundary;
        const auto med = static_cast<std::size_t>(Method::MedianProb), mx = static_cast<std::size_t>(Method::MaxProb);
        out.median_not_worse += r.loss[med] <= r.loss[mx];
        out.bic_larger_than_aic += r.size[static_cast<std::size_t>(Method::BIC)] > r.size[static_cast<std::size_t>(Method::AIC)];
    }
    out.mean_c_hat = csum / static_cast<double>(N);
    return out;
}

} // namespace mpm
