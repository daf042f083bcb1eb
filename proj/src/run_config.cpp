#include "mpm/run_config.hpp"
#include "mpm/csv.hpp"
#include "mpm/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>

namespace mpm {

namespace {

double parse_number(const std::string &s, const std::string &what) {
    double v = 0.0;
    const char *first = s.data();
    const char *last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last) throw ConfigError("bad number '" + s + "' in " + what);
    return v;
}

std::pair<std::string, std::string> head_tail(const std::string &spec) {
    const auto pos = spec.find(':');
    if (pos == std::string::npos) return {spec, {}};
    return {spec.substr(0, pos), spec.substr(pos + 1)};
}

Variables resolve_names(const std::vector<std::string> &names, const Dataset &data) {
    Variables out;
    for (const auto &n : names) out.push_back(data.column(n));
    return out;
}

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

} // namespace

std::vector<std::string> split_list(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ModelClass parse_class(const std::string &spec, const Dataset &data, const Variables &common) {
    const auto [kind, arg] = head_tail(spec);
    const std::size_t k = data.k();
    if (kind == "all") return ModelClass::all_subsets(k, common);
    if (kind == "nested") {
        Variables order;
        if (arg.empty()) {
            for (std::size_t i = 0; i < k; ++i)
                if (std::find(common.begin(), common.end(), i) == common.end()) order.push_back(i);
        } else {
            order = resolve_names(split_list(arg), data);
        }
        return ModelClass::nested(k, order, common);
    }
    if (kind == "graphical") {
        std::vector<Variables> req(k);
        for (const auto &rule : split_list(arg, ';')) {
            const auto eq = rule.find('=');
            if (eq == std::string::npos) throw InvalidClass("graphical rule '" + rule + "' needs the form var=a+b");
            const auto target = data.column(trim(rule.substr(0, eq)));
            req[target] = resolve_names(split_list(rule.substr(eq + 1), '+'), data);
        }
        return ModelClass::graphical(k, req, common);
    }
    if (kind == "explicit") {
        std::vector<std::string> bits;
        if (!arg.empty() && arg.front() == '@') {
            std::istringstream in(read_file(arg.substr(1)));
            std::string line;
            while (std::getline(in, line))
                if (!trim(line).empty()) bits.push_back(trim(line));
        } else {
            bits = split_list(arg);
        }
        if (bits.empty()) throw InvalidClass("explicit class lists no models");
        std::vector<ModelIndex> models;
        for (const auto &b : bits) models.push_back(ModelIndex::from_string(b));
        auto cls = ModelClass::explicit_list(models, common);
        if (cls.k() != k) throw InvalidClass("explicit models must have one bit per covariate");
        return cls;
    }
    throw InvalidClass("unknown class '" + spec + "' (all, nested, graphical or explicit)");
}

PriorFamily parse_prior(const std::string &spec, std::size_t k) {
    const auto [kind, arg] = head_tail(spec);
    if (kind == "reference") return Reference{};
    if (kind == "g") return GType{parse_number(arg, "--prior")};
    if (kind == "gn") return GTypeNuisance{parse_number(arg, "--prior")};
    if (kind == "indnormal") return IndependentNormal::standard(k, arg.empty() ? 1.0 : parse_number(arg, "--prior"));
    if (kind == "eb-g") {
        if (arg.empty()) return EmpiricalBayesG{true, EbObjective::ModelAveraged};
        if (arg == "full") return EmpiricalBayesG{true, EbObjective::FullModel};
        throw ConfigError("eb-g accepts only the option 'full'");
    }
    throw ConfigError("unknown prior '" + spec + "' (reference, g:C, gn:C, indnormal[:L], eb-g)");
}

SigmaSpec parse_sigma(const std::string &spec) {
    const auto [kind, arg] = head_tail(spec);
    if (kind == "unknown") return UnknownSigma{};
    if (kind == "known") return KnownSigma{parse_number(arg, "--sigma")};
    throw ConfigError("unknown sigma spec '" + spec + "' (known:V or unknown)");
}

ModelPriorSpec parse_model_prior(const std::string &spec, std::size_t k, const Variables &common) {
    const auto [kind, arg] = head_tail(spec);
    if (kind == "uniform") return UniformPrior{};
    if (kind == "jeffreys") return JeffreysOrder{};
    if (kind == "bernoulli") {
        const auto parts = split_list(arg);
        std::vector<double> p;
        if (parts.size() == 1) p.assign(k, parse_number(parts[0], "--model-prior"));
        else if (parts.size() == k)
            for (const auto &s : parts) p.push_back(parse_number(s, "--model-prior"));
        else throw ConfigError("bernoulli model prior needs one probability or one per covariate");
        for (auto c : common) p[c] = 1.0;
        return ProductBernoulli{p};
    }
    if (kind == "file") {
        ExplicitPrior ep;
        std::istringstream in(read_file(arg));
        std::string bits, weight;
        while (in >> bits >> weight) ep.weights[ModelIndex::from_string(bits)] = parse_number(weight, arg);
        if (ep.weights.empty()) throw ConfigError("model prior file '" + arg + "' is empty");
        return ep;
    }
    throw ConfigError("unknown model prior '" + spec + "' (uniform, jeffreys, bernoulli:P, file:PATH)");
}

QSpec parse_q(const std::string &spec, std::size_t k) {
    const auto [kind, arg] = head_tail(spec);
    QSpec q;
    if (kind == "gram") q.form = GramScaled{arg.empty() ? 1.0 : parse_number(arg, "--q")};
    else if (kind == "identity") q.form = IdentityQ{};
    else if (kind == "diag") {
        const auto parts = split_list(arg);
        if (parts.size() != k) throw DimensionMismatch("diag Q needs one entry per covariate");
        Eigen::VectorXd d(static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) d(static_cast<Eigen::Index>(i)) = parse_number(parts[i], "--q");
        q.form = DiagonalQ{d};
    } else if (kind == "file") {
        std::istringstream in(read_file(arg));
        Eigen::MatrixXd m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        std::string tok;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            if (!(in >> tok)) throw ParseError("Q file '" + arg + "' needs " + std::to_string(k * k) + " numbers");
            m(i / m.cols(), i % m.cols()) = parse_number(tok, arg);
        }
        if (in >> tok) throw ParseError("Q file '" + arg + "' has extra entries");
        q.form = ExplicitQ{m};
    } else throw ConfigError("unknown Q spec '" + spec + "' (gram, identity, diag:..., file:PATH)");
    return q;
}

PosteriorMethod parse_posterior(const std::string &spec, const PriorFamily &family) {
    if (spec.empty()) return std::holds_alternative<Reference>(family) ? PosteriorMethod::AIBF : PosteriorMethod::Bayes;
    if (spec == "bayes") return PosteriorMethod::Bayes;
    if (spec == "bic") return PosteriorMethod::BIC;
    if (spec == "aibf") return PosteriorMethod::AIBF;
    throw ConfigError("unknown posterior method '" + spec + "' (bayes, bic, aibf)");
}

OutputFormat parse_format(const std::string &spec) {
    if (spec == "table") return OutputFormat::Table;
    if (spec == "records") return OutputFormat::Records;
    throw ConfigError("unknown format '" + spec + "' (table or records)");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t> &flag) {
    if (flag) return *flag;
    if (const char *env = std::getenv("MPM_SEED"); env && *env) {
        std::uint64_t v = 0;
        const char *last = env + std::char_traits<char>::length(env);
        auto [ptr, ec] = std::from_chars(env, last, v);
        if (ec != std::errc() || ptr != last) throw ConfigError(std::string("MPM_SEED is not an integer: ") + env);
        return v;
    }
    return 0;
}

} // namespace mpm
