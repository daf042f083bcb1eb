#include "mpm/report_io.hpp"
#include "mpm/errors.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <fstream>

namespace mpm {

std::string num12(double v) { return fmt::format("{:.12g}", v); }

std::string model_label(const ModelIndex &l, const std::vector<std::string> &names) {
    std::string s = "{";
    bool first = true;
    for (auto i : l.positions()) {
        s += (first ? "" : ", ") + (i < names.size() ? names[i] : std::to_string(i + 1));
        first = false;
    }
    return s + "}";
}

std::string format_posterior(const ModelPosterior &post, const std::vector<std::string> &names, OutputFormat format) {
    const auto incl = inclusion_probabilities(post);
    std::string s;
    if (format == OutputFormat::Records) {
        s += "record,key,value,extra\n";
        for (std::size_t j = 0; j < post.size(); ++j)
            s += fmt::format("model,{},{},{}\n", post.models[j].to_string(), num12(post.probs[j]), to_string(post.source));
        for (std::size_t i = 0; i < incl.size(); ++i) s += fmt::format("inclusion,{},{},\n", names[i], num12(incl[i]));
        return s;
    }
    s += fmt::format("posterior source: {}\n\n", to_string(post.source));
    s += fmt::format("{:<12} {:<28} {:>20}\n", "model", "variables", "probability");
    for (std::size_t j = 0; j < post.size(); ++j)
        s += fmt::format("{:<12} {:<28} {:>20}\n", post.models[j].to_string(), model_label(post.models[j], names),
                         num12(post.probs[j]));
    s += "\ninclusion probabilities\n";
    for (std::size_t i = 0; i < incl.size(); ++i) s += fmt::format("  {:<10} {:>20}\n", names[i], num12(incl[i]));
    return s;
}

std::string format_report(const RiskReport &r, const std::vector<std::string> &names, OutputFormat format) {
    std::string s;
    const auto &c = r.flags.conditions;
    auto yn = [](bool b) { return b ? "yes" : "no"; };
    const std::string risk_kind = r.risks_are_relative() ? "relative" : "absolute";
    const std::string median = r.median ? r.models[*r.median].to_string() : "none";
    if (format == OutputFormat::Records) {
        s += "record,key,value,extra\n";
        for (std::size_t j = 0; j < r.models.size(); ++j)
            s += fmt::format("model,{},{},{}\n", r.models[j].to_string(), num12(r.probs[j]), num12(r.risks[j]));
        for (std::size_t i = 0; i < r.inclusion.size(); ++i)
            s += fmt::format("inclusion,{},{},\n", names[i], num12(r.inclusion[i]));
        for (Eigen::Index i = 0; i < r.beta_bar.size(); ++i)
            s += fmt::format("beta_bar,{},{},\n", names[static_cast<std::size_t>(i)], num12(r.beta_bar(i)));
        s += fmt::format("selected,optimal,{},\n", r.models[r.optimal].to_string());
        s += fmt::format("selected,median,{},\n", median);
        s += fmt::format("selected,maxprob,{},\n", r.models[r.maxprob].to_string());
        s += fmt::format("risk,path,{},{}\n", to_string(r.path), risk_kind);
        s += fmt::format("flag,coordinatewise_means,{},{}\n", yn(c.coordinatewise_means), num12(r.flags.eq17_deviation));
        s += fmt::format("flag,q_diagonal,{},\n", yn(c.q_diagonal));
        s += fmt::format("flag,scaled_gram_loss,{},\n", yn(c.scaled_gram_loss));
        s += fmt::format("flag,proportional_means,{},\n", yn(c.proportional_means));
        s += fmt::format("flag,flat_common_prior,{},\n", yn(c.flat_common_prior));
        s += fmt::format("flag,graphical,{},\n", yn(r.flags.graphical));
        s += fmt::format("flag,nested,{},\n", yn(c.nested));
        s += fmt::format("flag,semi_orthogonal,{},\n", yn(c.semi_orthogonal));
        s += fmt::format("flag,near_collinear,{},\n", yn(r.flags.near_collinear));
        for (const auto &g : r.guarantees) s += fmt::format("guarantee,\"{}\",,\n", g);
        for (const auto &n : r.notes) s += fmt::format("note,\"{}\",,\n", n);
        return s;
    }
    s += fmt::format("prior: {}\nloss weight Q: {}\nposterior source: {}\n", r.prior_description, r.q_description,
                     to_string(r.source));
    if (r.eb_fit) s += fmt::format("empirical-Bayes scale: {}\n", num12(r.eb_fit->c));
    s += fmt::format("risk path: {} ({} risks)\n\n", to_string(r.path), risk_kind);
    s += fmt::format("{:<12} {:<28} {:>20} {:>20}\n", "model", "variables", "probability", "risk");
    for (std::size_t j = 0; j < r.models.size(); ++j) {
        std::string tag;
        if (j == r.optimal) tag += " optimal";
        if (r.median && j == *r.median) tag += " median";
        if (j == r.maxprob) tag += " maxprob";
        s += fmt::format("{:<12} {:<28} {:>20} {:>20}{}\n", r.models[j].to_string(), model_label(r.models[j], names),
                         num12(r.probs[j]), num12(r.risks[j]), tag);
    }
    s += "\ninclusion probabilities\n";
    for (std::size_t i = 0; i < r.inclusion.size(); ++i) s += fmt::format("  {:<10} {:>20}\n", names[i], num12(r.inclusion[i]));
    s += "\nmodel-averaged coefficients\n";
    for (Eigen::Index i = 0; i < r.beta_bar.size(); ++i)
        s += fmt::format("  {:<10} {:>20}\n", names[static_cast<std::size_t>(i)], num12(r.beta_bar(i)));
    s += fmt::format("\noptimal model: {}\nmedian model:  {}\nmaxprob model: {}\n", r.models[r.optimal].to_string(),
                     median, r.models[r.maxprob].to_string());
    s += fmt::format("\nconditions: coordinatewise means {} (deviation {}), Q diagonal {}, Q scaled Gram {}, "
                     "proportional means {}, flat common prior {}, graphical {}, nested {}, semi-orthogonal {}\n",
                     yn(c.coordinatewise_means), num12(r.flags.eq17_deviation), yn(c.q_diagonal), yn(c.scaled_gram_loss),
                     yn(c.proportional_means), yn(c.flat_common_prior), yn(r.flags.graphical), yn(c.nested),
                     yn(c.semi_orthogonal));
    for (const auto &g : r.guarantees) s += "guarantee: " + g + "\n";
    for (const auto &n : r.notes) s += "note: " + n + "\n";
    return s;
}

std::string format_bench(const BenchResult &b, OutputFormat format) {
    std::string s;
    if (format == OutputFormat::Records) {
        s += "method,loss,loss_se,integrated_loss,integrated_loss_se,size,size_se\n";
        for (std::size_t m = 0; m < kMethodCount; ++m) {
            const auto &x = b.methods[m];
            s += fmt::format("{},{},{},{},{},{},{}\n", kMethodNames[m], num12(x.loss), num12(x.loss_se), num12(x.integrated),
                             num12(x.integrated_se), num12(x.size), num12(x.size_se));
        }
        return s;
    }
    s += fmt::format("n = {}, sigma2 = {}, a = {}, k = {}, replicates = {}, seed = {}\n", b.cfg.n, num12(b.cfg.sigma2),
                     num12(b.cfg.a), b.cfg.k, b.cfg.replicates, b.cfg.seed);
    s += "expected loss [average model size]\n";
    for (std::size_t m = 0; m < kMethodCount; ++m) s += fmt::format("{:>22}", kMethodNames[m]);
    s += "\ncoefficient loss\n";
    for (std::size_t m = 0; m < kMethodCount; ++m)
        s += fmt::format("{:>22}", fmt::format("{:.3f} [{:.1f}]", b.methods[m].loss, b.methods[m].size));
    s += "\n";
    for (std::size_t m = 0; m < kMethodCount; ++m) s += fmt::format("{:>22}", fmt::format("(se {:.3f})", b.methods[m].loss_se));
    s += "\nintegrated squared error\n";
    for (std::size_t m = 0; m < kMethodCount; ++m) s += fmt::format("{:>22}", fmt::format("{:.3f}", b.methods[m].integrated));
    s += "\n";
    s += fmt::format("mean c-hat {:.4g}; boundary fits {}; MedianProb no worse than MaxProb in {} of {}\n", b.mean_c_hat,
                     b.boundary_fits, b.median_not_worse, b.cfg.replicates);
    return s;
}

void write_atomic(const std::string &path, const std::string &content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp + "'");
        out << content;
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw ConfigError("failed writing '" + tmp + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ConfigError("cannot move output into '" + path + "'");
    }
}

} // namespace mpm
