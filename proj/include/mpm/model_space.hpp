#pragma once
#include <Eigen/Core>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mpm {

/// Sorted, duplicate-free list of 0-based covariate positions.
using Variables = std::vector<std::size_t>;

/// Largest number of free (non-common) variables we are willing to enumerate.
inline constexpr std::size_t kMaxFreeVariables = 25;

/** Binary inclusion vector identifying a submodel of the full linear model.
 *
 * Position i is 1 when covariate i is in the model. Ordering is lexicographic over the bits, which
 * matches the ordering of the bitstrings produced by to_string().
 */
class ModelIndex {
  public:
    ModelIndex() = default;
    explicit ModelIndex(std::vector<std::uint8_t> bits);

    /// Parses a bitstring such as "1011".
    static ModelIndex from_string(std::string_view bits);
    static ModelIndex none(std::size_t k);
    static ModelIndex full(std::size_t k);
    static ModelIndex from_positions(std::size_t k, const Variables &positions);

    std::size_t size() const { return bits_.size(); }
    /// Number of included covariates.
    std::size_t dimension() const;
    bool contains(std::size_t i) const { return bits_.at(i) != 0; }
    bool contains_all(const Variables &vars) const;
    bool subset_of(const ModelIndex &other) const;
    Variables positions() const;

    /// Coordinatewise product: covariates present in both models.
    ModelIndex intersect(const ModelIndex &other) const;
    ModelIndex unite(const ModelIndex &other) const;

    std::string to_string() const;
    const std::vector<std::uint8_t> &bits() const { return bits_; }

    auto operator<=>(const ModelIndex &) const = default;
    bool operator==(const ModelIndex &) const = default;

  private:
    std::vector<std::uint8_t> bits_;
};

/// Posterior inclusion probability of every covariate.
struct InclusionProbs {
    std::vector<double> p;

    InclusionProbs() = default;
    explicit InclusionProbs(std::vector<double> values);
    std::size_t size() const { return p.size(); }
    double operator[](std::size_t i) const { return p[i]; }
};

struct AllSubsets {};

/// Class closed under "if x_i is in the model, every x_j with j in prerequisites[i] is in the model".
struct Graphical {
    std::vector<Variables> prerequisites;
};

/// The nested sequence of models adding `order[0]`, `order[1]`, ... on top of the common variables.
struct Nested {
    Variables order;
};

struct Explicit {
    std::vector<ModelIndex> models;
};

/** The set of admissible models, with the covariates forced into every model.
 *
 * Construction validates the kind against k and the common set, so a ModelClass that exists is
 * always enumerable (subject to the kMaxFreeVariables guard for the combinatorial kinds).
 */
class ModelClass {
  public:
    using Kind = std::variant<AllSubsets, Graphical, Nested, Explicit>;

    ModelClass(std::size_t k, Kind kind, Variables common = {});

    static ModelClass all_subsets(std::size_t k, Variables common = {});
    static ModelClass graphical(std::size_t k, std::vector<Variables> prerequisites, Variables common = {});
    static ModelClass nested(std::size_t k, Variables order, Variables common = {});
    static ModelClass explicit_list(std::vector<ModelIndex> models, Variables common = {});

    std::size_t k() const { return k_; }
    const Kind &kind() const { return kind_; }
    const Variables &common() const { return common_; }
    bool is_common(std::size_t i) const;

    bool contains(const ModelIndex &model) const;

    /// True for AllSubsets, Graphical and Nested kinds; explicit lists are tested for the closure.
    bool has_graphical_structure() const;
    /// True for the Nested kind and for explicit lists that form a chain under inclusion.
    bool is_nested() const;
    bool is_all_subsets() const;

    std::string describe() const;

  private:
    std::size_t k_;
    Kind kind_;
    Variables common_;
};

/// Admissible models in deterministic order: lexicographic by bits, or by nesting depth for Nested.
std::vector<ModelIndex> enumerate_models(const ModelClass &cls);

/// Rounds to 12 decimal digits so that the 1/2 threshold is decided deterministically.
double round_probability(double p);

/// Variables with inclusion probability at least 1/2; throws NotInClass if that model is not admissible.
ModelIndex median_model(const InclusionProbs &p, const ModelClass &cls);

/// Index (0-based, in the order given) of the first model at which cumulative probability reaches 1/2.
std::size_t median_model_nested(const std::vector<double> &ordered_probs);

/// k x k_l matrix H with x * H the subvector of included covariates. Throws EmptyModel when k_l = 0.
Eigen::MatrixXd selection_matrix(const ModelIndex &model);

/// H_l * beta_l: scatters model coefficients into a length-k vector with zeros elsewhere.
Eigen::VectorXd embed(const ModelIndex &model, const Eigen::VectorXd &beta_model);

/// H_l' * beta: gathers the included coordinates of a length-k vector.
Eigen::VectorXd restrict_to(const ModelIndex &model, const Eigen::VectorXd &beta_full);

} // namespace mpm
