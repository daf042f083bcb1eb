#include "mpm/csv.hpp"
#include "mpm/demos.hpp"
#include "mpm/errors.hpp"
#include "mpm/geometry.hpp"
#include "mpm/report_io.hpp"
#include "mpm/run_config.hpp"
#include "mpm/shibata_bench.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitDiff = 4;

struct DataFlags {
    mpm::RunConfig cfg;
    std::string format = "table";
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_data_flags(CLI::App *app, DataFlags &f, bool with_q) {
    app->add_option("--input", f.cfg.input, "CSV file with a header row")->required();
    app->add_option("--response", f.cfg.response, "response column")->required();
    app->add_option("--common", f.cfg.common, "covariates present in every model (comma-separated)")->delimiter(',');
    app->add_flag("--intercept", f.cfg.intercept, "prepend a constant column 'c' and make it common");
    app->add_option("--class", f.cfg.class_spec, "all | nested[:v,...] | graphical:v=a+b;... | explicit:bits,... | explicit:@file")
        ->capture_default_str();
    app->add_option("--prior", f.cfg.prior_spec, "reference | g:C | gn:C | indnormal[:L] | eb-g[:full]")->capture_default_str();
    app->add_option("--sigma", f.cfg.sigma_spec, "known:V | unknown")->capture_default_str();
    app->add_option("--model-prior", f.cfg.model_prior_spec, "uniform | jeffreys | bernoulli:P[,...] | file:PATH")
        ->capture_default_str();
    app->add_option("--posterior", f.cfg.posterior_spec, "bayes | bic | aibf (default: aibf for the reference prior)");
    if (with_q) app->add_option("--q", f.cfg.q_spec, "gram[:G] | identity | diag:q1,... | file:PATH")->capture_default_str();
    app->add_option("--format", f.format, "table | records")->capture_default_str();
    app->add_option("--seed", f.seed, "seed for training-sample subsets (overrides MPM_SEED)");
    app->add_option("--out", f.out, "write to this file instead of stdout");
}

void emit(const std::string &text, const std::string &out) {
    if (out.empty()) std::cout << text << std::flush;
    else mpm::write_atomic(out, text);
}

struct Prepared {
    mpm::LoadedData loaded;
    mpm::ModelClass cls;
    mpm::PriorSpec prior;
    mpm::PosteriorMethod method;
    mpm::AibfOptions aibf;
};

Prepared prepare(const DataFlags &f) {
    auto loaded = mpm::load_csv(f.cfg.input, f.cfg.response, f.cfg.common, f.cfg.intercept);
    const auto k = loaded.data.k();
    auto cls = mpm::parse_class(f.cfg.class_spec, loaded.data, loaded.common);
    mpm::PriorSpec prior{mpm::parse_prior(f.cfg.prior_spec, k), mpm::parse_sigma(f.cfg.sigma_spec),
                         mpm::parse_model_prior(f.cfg.model_prior_spec, k, loaded.common)};
    prior.validate(k);
    const auto method = mpm::parse_posterior(f.cfg.posterior_spec, prior.family);
    mpm::AibfOptions aibf;
    aibf.seed = mpm::resolve_seed(f.seed);
    return {std::move(loaded), std::move(cls), std::move(prior), method, aibf};
}

int run_analyze(const DataFlags &f) {
    const auto format = mpm::parse_format(f.format);
    auto p = prepare(f);
    const auto &data = p.loaded.data;
    mpm::ModelPosterior post;
    switch (p.method) {
    case mpm::PosteriorMethod::AIBF: post = mpm::aibf_posteriors(data, p.cls, p.prior.model_prior, p.aibf); break;
    case mpm::PosteriorMethod::BIC: post = mpm::bic_posteriors(data, p.cls, p.prior.model_prior, p.prior.sigma); break;
    default: post = mpm::bayes_posteriors(data, p.cls, mpm::resolve_empirical_bayes(data, p.cls, p.prior, nullptr)); break;
    }
    emit(mpm::format_posterior(post, data.names, format), f.out);
    return 0;
}

int run_risk(const DataFlags &f) {
    const auto format = mpm::parse_format(f.format);
    auto p = prepare(f);
    mpm::SelectionOptions opt;
    opt.method = p.method;
    opt.aibf = p.aibf;
    const auto q = mpm::parse_q(f.cfg.q_spec, p.loaded.data.k());
    const auto report = mpm::selection_report(p.loaded.data, p.cls, p.prior, q, opt);
    emit(mpm::format_report(report, p.loaded.data.names, format), f.out);
    return 0;
}

mpm::Point parse_point(const std::string &s) {
    const auto parts = mpm::split_list(s);
    if (parts.size() != 2) throw mpm::ConfigError("point '" + s + "' needs the form x,y");
    mpm::Point p;
    for (int i = 0; i < 2; ++i) {
        const auto &t = parts[static_cast<std::size_t>(i)];
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), p(i));
        if (ec != std::errc() || ptr != t.data() + t.size()) throw mpm::ConfigError("bad coordinate '" + t + "'");
    }
    return p;
}

struct GeometryFlags {
    DataFlags data;
    std::string vertices;
    std::string alpha_bar;
};

int run_geometry(const GeometryFlags &g) {
    std::optional<mpm::Point> bar;
    mpm::RegionDiagram d;
    if (!g.vertices.empty()) {
        const auto pts = mpm::split_list(g.vertices, ';');
        if (pts.size() != 3) throw mpm::ConfigError("--vertices needs three points x,y;x,y;x,y (models 10, 01, 11)");
        d = mpm::region_diagram(parse_point(pts[0]), parse_point(pts[1]), parse_point(pts[2]));
        if (!g.alpha_bar.empty()) bar = parse_point(g.alpha_bar);
    } else {
        if (g.data.cfg.input.empty()) throw mpm::ConfigError("geometry needs --vertices or --input and --response");
        auto p = prepare(g.data);
        if (p.loaded.data.k() != 2 || !p.cls.common().empty() || !p.cls.is_all_subsets())
            throw mpm::ConfigError("geometry from data needs exactly two covariates, none common, all subsets");
        mpm::SelectionOptions opt;
        opt.method = p.method;
        opt.aibf = p.aibf;
        const auto q = mpm::parse_q(g.data.cfg.q_spec, 2);
        const auto report = mpm::selection_report(p.loaded.data, p.cls, p.prior, q, opt);
        const auto post = mpm::ModelPosterior::from_table(report.models, report.probs, report.source);
        const auto set = mpm::alpha_points(q.matrix(p.loaded.data), post, report.means);
        mpm::Point v[3];
        for (const auto &ap : set.points) {
            const auto bits = ap.model.to_string();
            const int idx = bits == "10" ? 0 : bits == "01" ? 1 : bits == "11" ? 2 : -1;
            if (idx >= 0) v[idx] = ap.alpha;
        }
        d = mpm::region_diagram(v[0], v[1], v[2]);
        bar = mpm::Point(set.alpha_bar);
    }
    emit(mpm::render_svg(d, bar), g.data.out);
    return 0;
}

struct ShibataFlags {
    std::string config;
    std::optional<std::size_t> n, k, replicates;
    std::optional<double> sigma2, a;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string format = "table";
    std::string out;
};

int run_shibata(const ShibataFlags &s) {
    const auto format = mpm::parse_format(s.format);
    mpm::BenchConfig cfg = s.config.empty() ? mpm::BenchConfig{} : mpm::BenchConfig::from_json(mpm::read_file(s.config));
    if (s.n) cfg.n = *s.n;
    if (s.k) cfg.k = *s.k;
    if (s.replicates) cfg.replicates = *s.replicates;
    if (s.sigma2) cfg.sigma2 = *s.sigma2;
    if (s.a) cfg.a = *s.a;
    if (s.threads) cfg.threads = *s.threads;
    if (s.seed || s.config.empty()) cfg.seed = mpm::resolve_seed(s.seed);
    cfg.validate();
    emit(mpm::format_bench(mpm::run_benchmark(cfg), format), s.out);
    return 0;
}

int run_demo(const std::string &name, const std::string &format_spec, const std::optional<std::uint64_t> &seed,
             const std::string &out) {
    const auto format = mpm::parse_format(format_spec);
    const auto outcome = mpm::run_demo(name, mpm::resolve_seed(seed));
    emit(mpm::format_demo(outcome, format), out);
    if (!outcome.passed()) {
        std::cerr << "demo " << name << ": computed table deviates from the stored values\n";
        return kExitDiff;
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Bayesian variable selection for normal linear models: posterior model and inclusion "
                 "probabilities, median probability model and predictive risks."};
    app.require_subcommand(1);

    DataFlags analyze_flags, risk_flags;
    auto *analyze = app.add_subcommand("analyze", "posterior model and inclusion probabilities");
    add_data_flags(analyze, analyze_flags, false);
    auto *risk = app.add_subcommand("risk", "posterior, model average, predictive risks and selected models");
    add_data_flags(risk, risk_flags, true);

    ShibataFlags sh;
    auto *shibata = app.add_subcommand("shibata", "nested Chebyshev regression benchmark");
    shibata->add_option("--config", sh.config, "JSON file with any of n, sigma2, a, k, replicates, seed, threads");
    shibata->add_option("--n", sh.n, "sample size");
    shibata->add_option("--sigma2", sh.sigma2, "noise variance");
    shibata->add_option("--a", sh.a, "prior decay exponent");
    shibata->add_option("--k", sh.k, "largest model order");
    shibata->add_option("--replicates", sh.replicates, "number of simulated data sets");
    shibata->add_option("--seed", sh.seed, "base seed (overrides MPM_SEED)");
    shibata->add_option("--threads", sh.threads, "worker threads");
    shibata->add_option("--format", sh.format, "table | records")->capture_default_str();
    shibata->add_option("--out", sh.out, "write to this file instead of stdout");

    GeometryFlags geo;
    auto *geometry = app.add_subcommand("geometry", "SVG of the optimality, highest-probability and median regions");
    geometry->add_option("--vertices", geo.vertices, "x,y;x,y;x,y for the models 10, 01 and 11");
    geometry->add_option("--alpha-bar", geo.alpha_bar, "x,y of the model-averaged point");
    geometry->add_option("--input", geo.data.cfg.input, "CSV file with two covariates");
    geometry->add_option("--response", geo.data.cfg.response, "response column");
    geometry->add_option("--prior", geo.data.cfg.prior_spec)->capture_default_str();
    geometry->add_option("--sigma", geo.data.cfg.sigma_spec)->capture_default_str();
    geometry->add_option("--model-prior", geo.data.cfg.model_prior_spec)->capture_default_str();
    geometry->add_option("--posterior", geo.data.cfg.posterior_spec);
    geometry->add_option("--q", geo.data.cfg.q_spec)->capture_default_str();
    geometry->add_option("--seed", geo.data.seed);
    geometry->add_option("--out", geo.data.out, "write to this file instead of stdout");

    std::string demo_name, demo_format = "table", demo_out;
    std::optional<std::uint64_t> demo_seed;
    auto *demo = app.add_subcommand("demo", "recompute a built-in table and compare it with stored values");
    demo->add_option("name", demo_name, "hald-nested | hald-all | anova-s1 | anova-s2 | anova-s3")
        ->required()
        ->check(CLI::IsMember({"hald-nested", "hald-all", "anova-s1", "anova-s2", "anova-s3"}));
    demo->add_option("--format", demo_format, "table | records")->capture_default_str();
    demo->add_option("--seed", demo_seed, "seed for training-sample subsets (overrides MPM_SEED)");
    demo->add_option("--out", demo_out, "write to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*analyze) return run_analyze(analyze_flags);
        if (*risk) return run_risk(risk_flags);
        if (*shibata) return run_shibata(sh);
        if (*geometry) return run_geometry(geo);
        if (*demo) return run_demo(demo_name, demo_format, demo_seed, demo_out);
    } catch (const mpm::ConfigError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mpm::NumericError &e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}
