#include "doctest.h"

#include "mpm/bayes_linear.hpp"
#include "mpm/datasets.hpp"
#include "mpm/errors.hpp"
#include "mpm/shibata_bench.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <random>

using namespace mpm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ModelIndex M(const char *bits) { return ModelIndex::from_string(bits); }

Dataset random_dataset(std::mt19937_64 &rng, std::size_t n, std::size_t k, bool intercept) {
    std::normal_distribution<double> z(0.0, 1.0);
    MatrixXd X(n, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) X(i, j) = (intercept && j == 0) ? 1.0 : z(rng);
    VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) y(i) = 0.7 * X(i, k - 1) + z(rng);
    return Dataset(X, y);
}

// log of the integral over a flat beta_c of N(y; X_c b, Sigma) db: the data density after integrating the
// common block, written with generalized least squares instead of an augmented factorization.
double gls_log_density(const MatrixXd &Xc, const VectorXd &y, const MatrixXd &Sigma) {
    const Eigen::LLT<MatrixXd> llt(Sigma);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double n = static_cast<double>(y.size());
    if (Xc.cols() == 0) {
        const double q = y.dot(llt.solve(y));
        return -0.5 * n * std::log(2 * M_PI) - 0.5 * logdet - 0.5 * q;
    }
    const MatrixXd SiX = llt.solve(Xc);
    const MatrixXd G = Xc.transpose() * SiX;
    const VectorXd b = G.ldlt().solve(SiX.transpose() * y);
    const VectorXd r = y - Xc * b;
    const double q = r.dot(llt.solve(r));
    const double kc = static_cast<double>(Xc.cols());
    return -0.5 * (n - kc) * std::log(2 * M_PI) - 0.5 * logdet - 0.5 * std::log(G.determinant()) - 0.5 * q;
}

// Column blocks and the prior covariance (in units of sigma^2) of the normal block for one model.
struct Blocks {
    MatrixXd Xc, Xn, V;
    VectorXd m;
};

Blocks blocks_for(const Dataset &d, const ModelIndex &l, const PriorSpec &prior, const Variables &common) {
    // The g-type family places a normal prior on every included coefficient, the others leave the common block flat.
    const bool all_normal = std::holds_alternative<GType>(prior.family);
    Variables c, nn;
    for (auto i : l.positions())
        (!all_normal && std::find(common.begin(), common.end(), i) != common.end() ? c : nn).push_back(i);
    Blocks b{columns(d.X, c), columns(d.X, nn), {}, VectorXd::Zero(static_cast<Eigen::Index>(nn.size()))};
    const auto kn = static_cast<Eigen::Index>(nn.size());
    if (auto *ind = std::get_if<IndependentNormal>(&prior.family)) {
        b.V = MatrixXd::Zero(kn, kn);
        for (Eigen::Index j = 0; j < kn; ++j) {
            b.V(j, j) = ind->lambda(static_cast<Eigen::Index>(nn[j]));
            b.m(j) = ind->mean(static_cast<Eigen::Index>(nn[j]));
        }
    } else if (auto *g = std::get_if<GTypeNuisance>(&prior.family)) {
        const MatrixXd Q = MatrixXd::Identity(d.X.rows(), d.X.rows()) -
                           b.Xc * (b.Xc.transpose() * b.Xc).inverse() * b.Xc.transpose();
        b.V = g->c * (b.Xn.transpose() * Q * b.Xn).inverse();
    } else if (auto *gt = std::get_if<GType>(&prior.family)) {
        b.V = gt->c * (b.Xn.transpose() * b.Xn).inverse();
    }
    return b;
}

// Oracle marginal: Gaussian density of y with the normal block integrated analytically and, for unknown
// sigma, a numerical integral over sigma against 1/sigma.
double oracle_log_marginal(const Dataset &d, const ModelIndex &l, const PriorSpec &prior, const Variables &common) {
    const auto b = blocks_for(d, l, prior, common);
    const auto n = d.X.rows();
    auto log_density = [&](double s2) {
        MatrixXd Sigma = s2 * MatrixXd::Identity(n, n);
        if (b.Xn.cols() > 0) Sigma += s2 * b.Xn * b.V * b.Xn.transpose();
        const VectorXd yc = d.y - b.Xn * b.m;
        return gls_log_density(b.Xc, yc, Sigma);
    };
    if (auto *known = std::get_if<KnownSigma>(&prior.sigma)) return log_density(known->sigma2);
    // Integrate exp(log_density(s^2) - shift) / s over s > 0; the shift keeps the integrand O(1).
    double shift = -1e300;
    for (double t = -6; t <= 6; t += 0.01) shift = std::max(shift, log_density(std::exp(2 * t)));
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [&](double s) {
        if (s < 1e-100 || s > 1e100) return 0.0;
        const double v = std::exp(log_density(s * s) - shift) / s;
        return std::isfinite(v) ? v : 0.0;
    };
    double err = 0;
    const double v = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-12, &err);
    return std::log(v) + shift;
}

} // namespace

TEST_CASE("least squares on the factorial data") {
    const auto d = datasets::anova();
    const auto ls = least_squares(d, M("1111"));
    // X'X = 12 I here, so the normal equations reduce to X'y / 12.
    const VectorXd oracle = d.X.transpose() * d.y / 12.0;
    CHECK((ls.beta - oracle).norm() < 1e-10);
    CHECK(ls.beta(0) == doctest::Approx(27.5).epsilon(1e-10));
    CHECK(ls.beta(1) == doctest::Approx(-4.1666666667).epsilon(1e-9));
    CHECK(ls.beta(2) == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(ls.beta(3) == doctest::Approx(0.8333333333).epsilon(1e-9));
    CHECK(ls.rss == doctest::Approx((d.y - d.X * oracle).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("least squares reproduces an exact fit") {
    std::mt19937_64 rng(1);
    auto d = random_dataset(rng, 9, 3, true);
    const VectorXd beta0 = (VectorXd(3) << 1.5, -2.0, 0.25).finished();
    d.y = d.X * beta0;
    const auto ls = least_squares(d, M("111"));
    CHECK((ls.beta - beta0).norm() < 1e-10);
    CHECK(ls.rss < 1e-20);
    const auto null = least_squares(d, M("000"));
    CHECK(null.beta.size() == 0);
    CHECK(null.rss == doctest::Approx(d.y.squaredNorm()));
}

TEST_CASE("least squares on the Chebyshev design is a scaled inner product") {
    const MatrixXd X = chebyshev_design(30, 6);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    VectorXd y(30);
    for (auto &v : y) v = z(rng);
    const auto ls = least_squares(X, y);
    CHECK((ls.beta - (2.0 / 30.0) * X.transpose() * y).norm() < 1e-10);
}

TEST_CASE("rank checks") {
    MatrixXd X(5, 2);
    X << 1, 2, 1, 2, 1, 2, 1, 2, 1, 2;
    CHECK_THROWS_AS(Dataset(X, VectorXd::Ones(5)), RankDeficient);
    CHECK_THROWS_AS(Dataset(MatrixXd::Identity(3, 3), VectorXd::Ones(3)), ConfigError);
}

TEST_CASE("nuisance projection") {
    std::mt19937_64 rng(3);
    const auto d = random_dataset(rng, 10, 4, true);
    const auto proj = nuisance_projection(d, {0});
    const MatrixXd J = MatrixXd::Constant(10, 10, 1.0 / 10.0);
    CHECK((proj.Q() - (MatrixXd::Identity(10, 10) - J)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((proj.Q() * proj.Q() - proj.Q()).cwiseAbs().maxCoeff() < 1e-9);
    const auto P1 = proj.projector(M("1100"));
    const auto P2 = proj.projector(M("1110"));
    const auto P3 = proj.projector(M("1111"));
    for (const auto *P : {&P1, &P2, &P3}) {
        CHECK((*P * *P - *P).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((*P - P->transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK((P1 * P2 - P1).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((P2 * P3 - P2).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((P3 * P1 - P1).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(proj.projector(M("1000")).norm() == 0.0);
    CHECK(P2.trace() == doctest::Approx(2.0));
}

TEST_CASE("nuisance projection with an orthogonal common block") {
    MatrixXd X(4, 3);
    X << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1;
    const Dataset d(X, VectorXd::LinSpaced(4, 0, 3));
    const auto proj = nuisance_projection(d, {0});
    const MatrixXd X2 = X.rightCols(2);
    CHECK((X2.transpose() * proj.Q() * X2 - X2.transpose() * X2).norm() < 1e-12);
}

TEST_CASE("cement data projector has trace one for one non-common variable") {
    const auto d = datasets::hald();
    const auto proj = nuisance_projection(d, {0, 4});
    CHECK(proj.projector(M("11001")).trace() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(proj.projector(M("11011")).trace() == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("posterior means") {
    std::mt19937_64 rng(4);
    const auto d = random_dataset(rng, 12, 4, true);
    const Variables common{0};
    const auto l = M("1101");
    const auto ls = least_squares(d, l);

    const auto ref = posterior_mean(d, l, PriorSpec{Reference{}}, common);
    CHECK((ref.beta_tilde - ls.beta).norm() < 1e-10);

    const auto g = posterior_mean(d, l, PriorSpec{GType{1.0}}, common);
    CHECK((g.beta_tilde - 0.5 * ls.beta).norm() < 1e-10);
    REQUIRE(g.shrink_b);
    CHECK(*g.shrink_b == doctest::Approx(0.5));

    // Flat common block, N(0, c sigma^2 (Xn'Q Xn)^{-1}) on the rest: solve the posterior normal equations directly.
    const double c = 3.0;
    const auto gn = posterior_mean(d, l, PriorSpec{GTypeNuisance{c}}, common);
    const MatrixXd Xl = columns(d.X, l);
    const MatrixXd Xc = Xl.leftCols(1), Xn = Xl.rightCols(2);
    const MatrixXd Q = MatrixXd::Identity(12, 12) - Xc * (Xc.transpose() * Xc).inverse() * Xc.transpose();
    MatrixXd prec = Xl.transpose() * Xl;
    prec.bottomRightCorner(2, 2) += (Xn.transpose() * Q * Xn) / c;
    const VectorXd oracle = prec.inverse() * Xl.transpose() * d.y;
    CHECK((gn.beta_tilde - oracle).norm() < 1e-9);
    const VectorXd proj_ls = (Xn.transpose() * Q * Xn).inverse() * Xn.transpose() * Q * d.y;
    CHECK((gn.beta_tilde.tail(2) - c / (1 + c) * proj_ls).norm() < 1e-9);
    const VectorXd common_part = (Xc.transpose() * Xc).inverse() * Xc.transpose() * (d.y - Xn * gn.beta_tilde.tail(2));
    CHECK((gn.beta_tilde.head(1) - common_part).norm() < 1e-9);
}

TEST_CASE("independent normal means on an orthogonal design") {
    const auto d = datasets::anova();
    IndependentNormal ind{(VectorXd(4) << 0, 1.0, -0.5, 0).finished(), (VectorXd(4) << 1, 2.0, 0.5, 1.0).finished()};
    const Variables common{0};
    const auto full = posterior_mean(d, M("1111"), PriorSpec{ind}, common);
    const VectorXd v = d.X.transpose() * d.y;
    for (Eigen::Index i = 1; i < 4; ++i)
        CHECK(full.beta_tilde(i) ==
              doctest::Approx((v(i) + ind.mean(i) / ind.lambda(i)) / (12.0 + 1.0 / ind.lambda(i))).epsilon(1e-12));
    CHECK(full.beta_tilde(0) == doctest::Approx(v(0) / 12.0).epsilon(1e-12));
    // coordinatewise agreement across models
    for (const char *bits : {"1000", "1100", "1010", "1001", "1110", "1101", "1011"}) {
        const auto l = M(bits);
        const auto pm = posterior_mean(d, l, PriorSpec{ind}, common);
        CHECK((embed(l, pm.beta_tilde) - embed(l, restrict_to(l, full.beta_tilde))).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK_THROWS_AS(posterior_mean(datasets::hald(), M("11111"), PriorSpec{IndependentNormal::standard(5)}, {0}),
                    ConditionViolated);
}

TEST_CASE("reference posterior means scale with y") {
    std::mt19937_64 rng(5);
    auto d = random_dataset(rng, 10, 3, true);
    const auto a = posterior_mean(d, M("111"), PriorSpec{}, {0});
    d.y *= 3.5;
    const auto b = posterior_mean(d, M("111"), PriorSpec{}, {0});
    CHECK((b.beta_tilde - 3.5 * a.beta_tilde).norm() < 1e-10 * b.beta_tilde.norm());
}

TEST_CASE("closed-form marginals match the quadrature oracle") {
    std::mt19937_64 rng(6);
    struct Case {
        Dataset d;
        ModelIndex l;
        PriorSpec prior;
        Variables common;
    };
    std::vector<Case> cases;
    {
        // one covariate, five observations, no common block
        auto d = random_dataset(rng, 5, 1, false);
        cases.push_back({d, M("1"), PriorSpec{IndependentNormal::standard(1, 2.0), UnknownSigma{}}, {}});
        cases.push_back({d, M("1"), PriorSpec{IndependentNormal::standard(1, 2.0), KnownSigma{0.7}}, {}});
        cases.push_back({d, M("1"), PriorSpec{GType{4.0}, UnknownSigma{}}, {}});
    }
    {
        auto d = random_dataset(rng, 8, 3, true);
        IndependentNormal ind{(VectorXd(3) << 0, 0.3, -0.2).finished(), (VectorXd(3) << 1, 1.5, 0.5).finished()};
        cases.push_back({d, M("111"), PriorSpec{ind, UnknownSigma{}}, {0}});
        cases.push_back({d, M("101"), PriorSpec{ind, KnownSigma{1.3}}, {0}});
        cases.push_back({d, M("111"), PriorSpec{GTypeNuisance{2.0}, UnknownSigma{}}, {0}});
        cases.push_back({d, M("110"), PriorSpec{GTypeNuisance{0.5}, KnownSigma{0.4}}, {0}});
        cases.push_back({d, M("100"), PriorSpec{GTypeNuisance{0.5}, UnknownSigma{}}, {0}});
    }
    for (const auto &tc : cases) {
        const double got = log_marginal(tc.d, tc.l, tc.prior, tc.common).value;
        const double want = oracle_log_marginal(tc.d, tc.l, tc.prior, tc.common);
        CAPTURE(tc.l.to_string());
        CAPTURE(tc.prior.describe());
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("g-prior marginal with known variance is the exact Gaussian density") {
    std::mt19937_64 rng(7);
    const auto d = random_dataset(rng, 9, 3, true);
    const auto l = M("111");
    const double c = 2.5, s2 = 0.8;
    const MatrixXd Xl = columns(d.X, l);
    const MatrixXd Sigma = s2 * (MatrixXd::Identity(9, 9) + c * Xl * (Xl.transpose() * Xl).inverse() * Xl.transpose());
    const double want = gls_log_density(MatrixXd(9, 0), d.y, Sigma);
    CHECK(log_marginal(d, l, PriorSpec{GType{c}, KnownSigma{s2}}, {0}).value == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("reference marginal matches the quadrature oracle") {
    std::mt19937_64 rng(8);
    const auto d = random_dataset(rng, 7, 2, true);
    const auto ls = least_squares(d, M("11"));
    const double n = 7, k = 2;
    const double logdet = std::log((d.X.transpose() * d.X).determinant());
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [&](double s) {
        if (s <= 0) return 0.0;
        return std::exp(-(n - k) * std::log(std::sqrt(2 * M_PI) * s) - ls.rss / (2 * s * s)) / s;
    };
    const double want = std::log(integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity())) - 0.5 * logdet;
    CHECK(reference_log_marginal(d.X, d.y) == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("marginal configuration guards") {
    std::mt19937_64 rng(9);
    const auto d = random_dataset(rng, 8, 3, true);
    CHECK_THROWS_AS(log_marginal(d, M("110"), PriorSpec{Reference{}}, {0}), ImproperMarginal);
    const auto a = log_marginal(d, M("110"), PriorSpec{GTypeNuisance{1.0}}, {0});
    const auto b = log_marginal(d, M("110"), PriorSpec{GTypeNuisance{1.0}}, {0});
    CHECK(a.value == b.value);
    CHECK(a.config == b.config);
    CHECK(a.config != log_marginal(d, M("110"), PriorSpec{GTypeNuisance{2.0}}, {0}).config);
    const auto c = log_marginal(d, M("111"), PriorSpec{GTypeNuisance{1.0}}, {0});
    CHECK(std::exp(a.value - c.value) == doctest::Approx(std::exp(a.value) / std::exp(c.value)).epsilon(1e-10));
}

TEST_CASE("golden-section search") {
    CHECK(golden_section_max([](double x) { return -(x - 1.3) * (x - 1.3); }, -10, 10) == doctest::Approx(1.3).epsilon(1e-5));
    CHECK(golden_section_max([](double x) { return x; }, -10, 10) == doctest::Approx(10.0));
}

TEST_CASE("empirical Bayes scale agrees with a grid scan") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> z;
    MatrixXd X(20, 3);
    VectorXd y(20);
    for (int i = 0; i < 20; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = z(rng);
        X(i, 2) = z(rng);
        y(i) = 2.0 + 3.0 * X(i, 1) - 2.0 * X(i, 2) + 0.5 * z(rng);
    }
    const Dataset d(X, y);
    const auto cls = ModelClass::all_subsets(3, {0});
    for (auto obj : {EbObjective::FullModel, EbObjective::ModelAveraged}) {
        const PriorSpec prior{EmpiricalBayesG{true, obj}};
        const auto fit = empirical_bayes_c(d, cls, prior, obj);
        CHECK_FALSE(fit.boundary);
        CHECK(fit.c > 1.0);
        // Grid scan of the same objective, evaluated through the public marginal.
        auto objective = [&](double logc) {
            const PriorSpec p{GTypeNuisance{std::exp(logc)}};
            if (obj == EbObjective::FullModel) return log_marginal(d, ModelIndex::full(3), p, {0}).value;
            double mx = -1e300;
            std::vector<double> v;
            for (const auto &l : enumerate_models(cls)) v.push_back(log_marginal(d, l, p, {0}).value);
            for (double x : v) mx = std::max(mx, x);
            double s = 0;
            for (double x : v) s += std::exp(x - mx);
            return mx + std::log(s / v.size());
        };
        double best = -10, best_val = -1e300;
        for (double t = -10; t <= 10; t += 1e-3)
            if (const double val = objective(t); val > best_val) best_val = val, best = t;
        CHECK(std::log(fit.c) == doctest::Approx(best).epsilon(2e-3));
        CHECK(fit.objective >= best_val - 1e-6);
    }
}

TEST_CASE("empirical Bayes with no signal hits the lower boundary") {
    std::mt19937_64 rng(11);
    auto d = random_dataset(rng, 10, 3, true);
    d.y.setZero();
    d.y(0) = 1e-3; // keeps the residual sums positive
    d.y(1) = -1e-3;
    const auto fit = empirical_bayes_c(d, ModelClass::all_subsets(3, {0}), PriorSpec{EmpiricalBayesG{}});
    CHECK(fit.boundary);
    CHECK(fit.c < 1e-3);
}

TEST_CASE("prior validation") {
    CHECK_THROWS_AS(PriorSpec{GType{-1.0}}.validate(3), ConfigError);
    CHECK_THROWS_AS((PriorSpec{Reference{}, KnownSigma{0.0}}.validate(3)), ConfigError);
    CHECK_THROWS_AS((PriorSpec{Reference{}, UnknownSigma{}, ProductBernoulli{{0.5, 1.5, 0.5}}}.validate(3)), ConfigError);
    CHECK_NOTHROW(PriorSpec{IndependentNormal::standard(3)}.validate(3));
}
