#include "mpm/model_space.hpp"
#include "mpm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace mpm {

namespace {

Variables normalized(Variables v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string join(const Variables &v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i] + 1;
    return out.str();
}

template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};

} // namespace

// ---------------------------------------------------------------------------------------------
// ModelIndex

ModelIndex::ModelIndex(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_)
        if (b > 1) throw InvalidClass("model index entries must be 0 or 1");
}

ModelIndex ModelIndex::from_string(std::string_view bits) {
    std::vector<std::uint8_t> out;
    out.reserve(bits.size());
    for (char c : bits) {
        if (c != '0' && c != '1') throw InvalidClass("bad model bitstring '" + std::string(bits) + "'");
        out.push_back(c == '1' ? 1 : 0);
    }
    if (out.empty()) throw InvalidClass("empty model bitstring");
    return ModelIndex(std::move(out));
}

ModelIndex ModelIndex::none(std::size_t k) { return ModelIndex(std::vector<std::uint8_t>(k, 0)); }
ModelIndex ModelIndex::full(std::size_t k) { return ModelIndex(std::vector<std::uint8_t>(k, 1)); }

ModelIndex ModelIndex::from_positions(std::size_t k, const Variables &positions) {
    std::vector<std::uint8_t> bits(k, 0);
    for (auto i : positions) {
        if (i >= k) throw InvalidClass("variable position out of range");
        bits[i] = 1;
    }
    return ModelIndex(std::move(bits));
}

std::size_t ModelIndex::dimension() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool ModelIndex::contains_all(const Variables &vars) const {
    return std::all_of(vars.begin(), vars.end(), [&](std::size_t i) { return contains(i); });
}

bool ModelIndex::subset_of(const ModelIndex &other) const {
    if (other.size() != size()) throw DimensionMismatch("model lengths differ");
    for (std::size_t i = 0; i < size(); ++i)
        if (bits_[i] && !other.bits_[i]) return false;
    return true;
}

Variables ModelIndex::positions() const {
    Variables out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(i);
    return out;
}

ModelIndex ModelIndex::intersect(const ModelIndex &other) const {
    if (other.size() != size()) throw DimensionMismatch("model lengths differ");
    std::vector<std::uint8_t> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = bits_[i] & other.bits_[i];
    return ModelIndex(std::move(out));
}

ModelIndex ModelIndex::unite(const ModelIndex &other) const {
    if (other.size() != size()) throw DimensionMismatch("model lengths differ");
    std::vector<std::uint8_t> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = bits_[i] | other.bits_[i];
    return ModelIndex(std::move(out));
}

std::string ModelIndex::to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
}

InclusionProbs::InclusionProbs(std::vector<double> values) : p(std::move(values)) {
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0 + 1e-12))
            throw ConfigError("inclusion probability outside [0,1]");
}

// ---------------------------------------------------------------------------------------------
// ModelClass

ModelClass::ModelClass(std::size_t k, Kind kind, Variables common)
    : k_(k), kind_(std::move(kind)), common_(normalized(std::move(common))) {
    if (k_ == 0) throw InvalidClass("k must be at least 1");
    if (!common_.empty() && common_.back() >= k_) throw InvalidClass("common variable out of range");

    std::visit(overloaded{
                   [](AllSubsets &) {},
                   [&](Graphical &g) {
                       if (g.prerequisites.size() != k_)
                           throw InvalidClass("graphical class needs one index set per variable");
                       for (auto &req : g.prerequisites) {
                           req = normalized(req);
                           if (!req.empty() && req.back() >= k_)
                               throw InvalidClass("graphical index set out of range");
                       }
                   },
                   [&](Nested &nest) {
                       Variables seen = normalized(nest.order);
                       if (seen.size() != nest.order.size())
                           throw InvalidClass("nested order repeats a variable");
                       Variables free;
                       for (std::size_t i = 0; i < k_; ++i)
                           if (!is_common(i)) free.push_back(i);
                       if (seen != free)
                           throw InvalidClass("nested order must list every non-common variable exactly once");
                   },
                   [&](Explicit &ex) {
                       if (ex.models.empty()) throw InvalidClass("explicit class is empty");
                       std::set<ModelIndex> unique;
                       for (const auto &m : ex.models) {
                           if (m.size() != k_) throw InvalidClass("explicit model has wrong length");
                           if (!m.contains_all(common_))
                               throw InvalidClass("explicit model " + m.to_string() + " omits a common variable");
                           if (!unique.insert(m).second)
                               throw InvalidClass("explicit model " + m.to_string() + " listed twice");
                       }
                   },
               },
               kind_);
}

ModelClass ModelClass::all_subsets(std::size_t k, Variables common) {
    return ModelClass(k, AllSubsets{}, std::move(common));
}

ModelClass ModelClass::graphical(std::size_t k, std::vector<Variables> prerequisites, Variables common) {
    return ModelClass(k, Graphical{std::move(prerequisites)}, std::move(common));
}

ModelClass ModelClass::nested(std::size_t k, Variables order, Variables common) {
    return ModelClass(k, Nested{std::move(order)}, std::move(common));
}

ModelClass ModelClass::explicit_list(std::vector<ModelIndex> models, Variables common) {
    if (models.empty()) throw InvalidClass("explicit class is empty");
    const std::size_t k = models.front().size();
    return ModelClass(k, Explicit{std::move(models)}, std::move(common));
}

bool ModelClass::is_common(std::size_t i) const {
    return std::binary_search(common_.begin(), common_.end(), i);
}

namespace {

bool satisfies_prerequisites(const ModelIndex &m, const Graphical &g) {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m.contains(i) && !m.contains_all(g.prerequisites[i])) return false;
    return true;
}

} // namespace

bool ModelClass::contains(const ModelIndex &model) const {
    if (model.size() != k_ || !model.contains_all(common_)) return false;
    return std::visit(overloaded{
                          [](const AllSubsets &) { return true; },
                          [&](const Graphical &g) { return satisfies_prerequisites(model, g); },
                          [&](const Nested &nest) {
                              // Included free variables must form a prefix of the order.
                              std::size_t depth = 0;
                              while (depth < nest.order.size() && model.contains(nest.order[depth])) ++depth;
                              for (std::size_t j = depth; j < nest.order.size(); ++j)
                                  if (model.contains(nest.order[j])) return false;
                              return true;
                          },
                          [&](const Explicit &ex) {
                              return std::find(ex.models.begin(), ex.models.end(), model) != ex.models.end();
                          },
                      },
                      kind_);
}

bool ModelClass::has_graphical_structure() const {
    const auto *ex = std::get_if<Explicit>(&kind_);
    if (!ex) return true;
    // A family of sets is the solution set of "i in => I(i) in" constraints exactly when it contains
    // the common-only model and the full model and is closed under union and intersection.
    std::set<ModelIndex> members(ex->models.begin(), ex->models.end());
    if (!members.count(ModelIndex::from_positions(k_, common_)) || !members.count(ModelIndex::full(k_)))
        return false;
    for (const auto &a : ex->models)
        for (const auto &b : ex->models)
            if (!members.count(a.unite(b)) || !members.count(a.intersect(b))) return false;
    return true;
}

bool ModelClass::is_nested() const {
    if (std::holds_alternative<Nested>(kind_)) return true;
    const auto *ex = std::get_if<Explicit>(&kind_);
    if (!ex) return false;
    auto models = ex->models;
    std::sort(models.begin(), models.end(),
              [](const ModelIndex &a, const ModelIndex &b) { return a.dimension() < b.dimension(); });
    for (std::size_t j = 1; j < models.size(); ++j)
        if (models[j - 1].dimension() == models[j].dimension() || !models[j - 1].subset_of(models[j]))
            return false;
    return true;
}

bool ModelClass::is_all_subsets() const { return std::holds_alternative<AllSubsets>(kind_); }

std::string ModelClass::describe() const {
    std::string kind = std::visit(overloaded{
                                      [](const AllSubsets &) { return std::string("all-subsets"); },
                                      [](const Graphical &) { return std::string("graphical"); },
                                      [](const Nested &) { return std::string("nested"); },
                                      [](const Explicit &) { return std::string("explicit"); },
                                  },
                                  kind_);
    return kind + " k=" + std::to_string(k_) + (common_.empty() ? "" : " common={" + join(common_) + "}");
}

// ---------------------------------------------------------------------------------------------
// enumeration

std::vector<ModelIndex> enumerate_models(const ModelClass &cls) {
    const std::size_t k = cls.k();
    Variables free;
    for (std::size_t i = 0; i < k; ++i)
        if (!cls.is_common(i)) free.push_back(i);

    auto subsets = [&](auto &&keep) {
        if (free.size() > kMaxFreeVariables)
            throw InvalidClass("refusing to enumerate 2^" + std::to_string(free.size()) + " models");
        std::vector<ModelIndex> out;
        const std::uint64_t count = std::uint64_t{1} << free.size();
        for (std::uint64_t mask = 0; mask < count; ++mask) {
            std::vector<std::uint8_t> bits(k, 0);
            for (auto c : cls.common()) bits[c] = 1;
            for (std::size_t j = 0; j < free.size(); ++j)
                if (mask >> j & 1U) bits[free[j]] = 1;
            ModelIndex m(std::move(bits));
            if (keep(m)) out.push_back(std::move(m));
        }
        std::sort(out.begin(), out.end());
        return out;
    };

    return std::visit(overloaded{
                          [&](const AllSubsets &) { return subsets([](const ModelIndex &) { return true; }); },
                          [&](const Graphical &g) {
                              return subsets([&](const ModelIndex &m) { return satisfies_prerequisites(m, g); });
                          },
                          [&](const Nested &nest) {
                              std::vector<ModelIndex> out;
                              Variables included = cls.common();
                              out.push_back(ModelIndex::from_positions(k, included));
                              for (auto v : nest.order) {
                                  included.push_back(v);
                                  out.push_back(ModelIndex::from_positions(k, included));
                              }
                              return out;
                          },
                          [&](const Explicit &ex) {
                              auto out = ex.models;
                              std::sort(out.begin(), out.end());
                              return out;
                          },
                      },
                      cls.kind());
}

// ---------------------------------------------------------------------------------------------
// median probability model

double round_probability(double p) { return std::round(p * 1e12) / 1e12; }

ModelIndex median_model(const InclusionProbs &p, const ModelClass &cls) {
    if (p.size() != cls.k()) throw DimensionMismatch("inclusion probabilities do not match the class");
    std::vector<std::uint8_t> bits(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) bits[i] = round_probability(p[i]) >= 0.5 ? 1 : 0;
    ModelIndex median(std::move(bits));
    if (!cls.contains(median)) {
        // Closure under the graphical constraints makes this unreachable for those classes.
        if (!std::holds_alternative<Explicit>(cls.kind()))
            throw std::logic_error("median model escaped a graphical class");
        throw NotInClass("median model " + median.to_string() + " is not in the class");
    }
    return median;
}

std::size_t median_model_nested(const std::vector<double> &ordered_probs) {
    if (ordered_probs.empty()) throw NotNormalized("no probabilities");
    double total = 0.0;
    for (double v : ordered_probs) {
        if (!(v >= 0.0)) throw NotNormalized("negative probability");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-8) throw NotNormalized("probabilities sum to " + std::to_string(total));
    double cumulative = 0.0;
    for (std::size_t j = 0; j < ordered_probs.size(); ++j) {
        cumulative += ordered_probs[j];
        if (round_probability(cumulative) >= 0.5) return j;
    }
    return ordered_probs.size() - 1;
}

// ---------------------------------------------------------------------------------------------
// selection matrices

Eigen::MatrixXd selection_matrix(const ModelIndex &model) {
    const auto pos = model.positions();
    if (pos.empty()) throw EmptyModel("the null model has no selection matrix");
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.size()),
                                              static_cast<Eigen::Index>(pos.size()));
    for (std::size_t j = 0; j < pos.size(); ++j) h(static_cast<Eigen::Index>(pos[j]), static_cast<Eigen::Index>(j)) = 1.0;
    return h;
}

Eigen::VectorXd embed(const ModelIndex &model, const Eigen::VectorXd &beta_model) {
    const auto pos = model.positions();
    if (static_cast<std::size_t>(beta_model.size()) != pos.size())
        throw DimensionMismatch("coefficient vector does not match model dimension");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.size()));
    for (std::size_t j = 0; j < pos.size(); ++j) out(static_cast<Eigen::Index>(pos[j])) = beta_model(static_cast<Eigen::Index>(j));
    return out;
}

Eigen::VectorXd restrict_to(const ModelIndex &model, const Eigen::VectorXd &beta_full) {
    if (static_cast<std::size_t>(beta_full.size()) != model.size())
        throw DimensionMismatch("vector length does not match model length");
    const auto pos = model.positions();
    Eigen::VectorXd out(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t j = 0; j < pos.size(); ++j) out(static_cast<Eigen::Index>(j)) = beta_full(static_cast<Eigen::Index>(pos[j]));
    return out;
}

} // namespace mpm
