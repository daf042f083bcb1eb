#include "mpm/demos.hpp"
#include "mpm/datasets.hpp"
#include "mpm/errors.hpp"
#include "mpm/report_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace mpm {

namespace {

std::size_t find_model(const RiskReport &r, const std::string &bits) {
    const auto target = ModelIndex::from_string(bits);
    for (std::size_t j = 0; j < r.models.size(); ++j)
        if (r.models[j] == target) return j;
    throw ConfigError("model " + bits + " missing from the computed table");
}

void compare_column(DemoOutcome &out, const RiskReport &r, const std::vector<std::string> &models,
                    const std::vector<double> &expected, const std::vector<double> &actual_by_model, double tol,
                    bool relative, const std::string &label) {
    for (std::size_t i = 0; i < models.size(); ++i) {
        const double got = actual_by_model[find_model(r, models[i])];
        const double want = expected[i];
        const double err = std::abs(got - want);
        const double allowed = relative ? tol * std::max(1.0, std::abs(want)) : tol;
        out.checks.push_back({fmt::format("{} {}", label, models[i]), err <= allowed,
                              fmt::format("got {} expected {} (|diff| {:.3g}, allowed {:.3g})", num12(got), num12(want), err,
                                          allowed)});
    }
}

void check_model(DemoOutcome &out, const std::string &what, const RiskReport &r, std::optional<std::size_t> got,
                 const std::string &want) {
    const std::string g = got ? r.models[*got].to_string() : "none";
    out.checks.push_back({what, g == want, fmt::format("got {} expected {}", g, want)});
}

void check_inclusion(DemoOutcome &out, const RiskReport &r, const datasets::ExpectedTable &t, const Variables &free) {
    for (std::size_t i = 0; i < t.inclusion.size() && i < free.size(); ++i) {
        const double got = r.inclusion[free[i]];
        const double err = std::abs(got - t.inclusion[i]);
        out.checks.push_back({fmt::format("inclusion {}", out.names[free[i]]), err <= t.prob_tolerance,
                              fmt::format("got {} expected {}", num12(got), num12(t.inclusion[i]))});
    }
}

Variables free_variables(const ModelClass &cls) {
    Variables v;
    for (std::size_t i = 0; i < cls.k(); ++i)
        if (!cls.is_common(i)) v.push_back(i);
    return v;
}

DemoOutcome anova_demo(int scenario) {
    DemoOutcome out;
    const auto data = datasets::anova();
    const auto cls = scenario == 1 ? datasets::anova_all_class()
                     : scenario == 2 ? datasets::anova_graphical_class()
                                     : datasets::anova_unusual_class();
    const auto t = datasets::expected_anova(scenario);
    out.name = fmt::format("anova-s{}", scenario);
    out.title = t.title;
    out.names = data.names;
    PriorSpec prior{IndependentNormal::standard(data.k(), 1.0), UnknownSigma{}, UniformPrior{}};
    auto r = selection_report(data, cls, prior, QSpec{GramScaled{1.0}});
    compare_column(out, r, t.models, t.probs, r.probs, t.prob_tolerance, false, "probability");
    compare_column(out, r, t.models, t.risks, r.risks, t.risk_tolerance, true, "risk");
    check_inclusion(out, r, t, free_variables(cls));
    check_model(out, "median model", r, r.median, "1110");
    check_model(out, "maxprob model", r, r.maxprob, "1110");
    check_model(out, "optimal model", r, r.optimal, "1110");
    out.labels.push_back("uniform model prior");
    out.reports.push_back(std::move(r));
    return out;
}

DemoOutcome hald_nested_demo(std::uint64_t seed) {
    DemoOutcome out;
    const auto data = datasets::hald();
    const auto cls = datasets::hald_nested_class();
    const auto t = datasets::expected_hald_nested();
    out.name = "hald-nested";
    out.title = t.title;
    out.names = data.names;
    SelectionOptions opt;
    opt.method = PosteriorMethod::AIBF;
    opt.aibf.seed = seed;
    for (int variant = 0; variant < 2; ++variant) {
        PriorSpec prior{Reference{}, UnknownSigma{}, UniformPrior{}};
        if (variant == 1) prior.model_prior = JeffreysOrder{};
        auto r = selection_report(data, cls, prior, QSpec{GramScaled{1.0}}, opt);
        const std::string label = variant == 0 ? "uniform" : "1/order";
        compare_column(out, r, t.models, variant == 0 ? t.probs : t.alt_probs, r.probs, t.prob_tolerance, false,
                       label + " probability");
        compare_column(out, r, t.models, variant == 0 ? t.risks : t.alt_risks, r.risks, t.risk_tolerance, false,
                       label + " risk");
        check_model(out, label + " median model", r, r.median, "11011");
        check_model(out, label + " optimal model", r, r.optimal, "11011");
        if (variant == 1) check_model(out, label + " maxprob model", r, r.maxprob, "11001");
        out.labels.push_back(label + " model prior");
        out.reports.push_back(std::move(r));
    }
    return out;
}

DemoOutcome hald_all_demo(std::uint64_t seed) {
    DemoOutcome out;
    const auto data = datasets::hald();
    const auto cls = datasets::hald_all_class();
    const auto t = datasets::expected_hald_all();
    out.name = "hald-all";
    out.title = t.title;
    out.names = data.names;
    SelectionOptions opt;
    opt.method = PosteriorMethod::AIBF;
    opt.aibf.seed = seed;
    auto r = selection_report(data, cls, PriorSpec{}, QSpec{GramScaled{1.0}}, opt);
    compare_column(out, r, t.models, t.probs, r.probs, t.prob_tolerance, false, "probability");
    check_inclusion(out, r, t, free_variables(cls));
    check_model(out, "median model", r, r.median, "11101");
    check_model(out, "optimal model", r, r.optimal, "11101");
    check_model(out, "maxprob model", r, r.maxprob, "11100");
    const double r_med = r.risks[find_model(r, "11101")];
    const double r_max = r.risks[find_model(r, "11100")];
    out.checks.push_back({"risk 11101 below risk 11100", r_med < r_max, fmt::format("{} vs {}", num12(r_med), num12(r_max))});
    out.labels.push_back("uniform model prior");
    out.reports.push_back(std::move(r));
    return out;
}

} // namespace

bool DemoOutcome::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const DemoCheck &c) { return c.ok; });
}

DemoOutcome run_demo(const std::string &name, std::uint64_t seed) {
    if (name == "hald-nested") return hald_nested_demo(seed);
    if (name == "hald-all") return hald_all_demo(seed);
    if (name == "anova-s1") return anova_demo(1);
    if (name == "anova-s2") return anova_demo(2);
    if (name == "anova-s3") return anova_demo(3);
    throw ConfigError("unknown demo '" + name + "' (hald-nested, hald-all, anova-s1, anova-s2, anova-s3)");
}

std::string format_demo(const DemoOutcome &o, OutputFormat format) {
    std::string s;
    if (format == OutputFormat::Table) s += o.title + "\n";
    for (std::size_t i = 0; i < o.reports.size(); ++i) {
        if (format == OutputFormat::Table) s += "\n== " + o.labels[i] + "\n";
        s += format_report(o.reports[i], o.names, format);
    }
    if (format == OutputFormat::Records) {
        for (const auto &c : o.checks) s += fmt::format("check,\"{}\",{},\"{}\"\n", c.what, c.ok ? "pass" : "FAIL", c.detail);
        return s;
    }
    s += "\ncomparison with stored values\n";
    for (const auto &c : o.checks) s += fmt::format("  [{}] {}: {}\n", c.ok ? "pass" : "FAIL", c.what, c.detail);
    s += o.passed() ? "all checks passed\n" : "some checks FAILED\n";
    return s;
}

} // namespace mpm
