#pragma once
#include "mpm/bayes_linear.hpp"
#include "mpm/posterior_probs.hpp"

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mpm {

struct AlphaPoint {
    ModelIndex model;
    Eigen::VectorXd alpha; // A H_l beta_tilde_l with A'A = Q
};

struct AlphaSet {
    Eigen::MatrixXd A; // upper-triangular Cholesky factor of Q
    std::vector<AlphaPoint> points;
    Eigen::VectorXd alpha_bar;
};

/// Maps each model to a point whose squared distance to alpha_bar is its predictive risk.
AlphaSet alpha_points(const Eigen::MatrixXd &Q, const ModelPosterior &post, const std::vector<PosteriorMean> &means);

using Point = Eigen::Vector2d;
using Polygon = std::vector<Point>;

/// Shape of the triangle at the vertex of the two-variable model.
enum class TriangleCase {
    Obtuse, // the two-variable cell reaches the opposite side
    Acute,
    Right, // median regions coincide with optimality cells
};

std::string to_string(TriangleCase c);

/// Regions of the triangle (alpha_10, alpha_01, alpha_11). Arrays are indexed 0 = M10, 1 = M01, 2 = M11.
struct RegionDiagram {
    std::array<Point, 3> vertex;
    Point A, B, C; // midpoints of 10-01, 01-11, 10-11
    Point O;       // centroid
    Point G;       // circumcenter
    std::optional<Point> E, F; // bisector hits on side 10-01 when the angle at alpha_11 is obtuse
    std::array<Polygon, 3> optimality;
    std::array<Polygon, 3> maxprob;
    std::array<Polygon, 3> median;
    TriangleCase kind = TriangleCase::Acute;
    double angle_11 = 0.0; // radians

    /// Implied (p10, p01, p11): barycentric coordinates of x.
    std::array<double, 3> barycentric(const Point &x) const;
    /// Vertex nearest to x (ties to the lower index).
    int optimal_at(const Point &x) const;
    /// Largest implied probability (ties to the lower index).
    int maxprob_at(const Point &x) const;
    /// Median probability model under the implied probabilities.
    int median_at(const Point &x) const;
    /// Shared boundary segments of the optimality cells.
    std::vector<std::array<Point, 2>> optimality_boundaries() const;
    /// The two dashed segments A-C and A-B.
    std::vector<std::array<Point, 2>> median_boundaries() const;
};

/// Builds the region diagram; throws Degenerate when the vertices are collinear (area <= 1e-9).
RegionDiagram region_diagram(const Point &v10, const Point &v01, const Point &v11);

/// Polygon membership with boundary tolerance.
bool polygon_contains(const Polygon &poly, const Point &x, double tol = 1e-9);

/// Which polygon of `family` contains x; -1 if none.
int region_of(const std::array<Polygon, 3> &family, const Point &x, double tol = 1e-9);

/// SVG 1.1 drawing of the three region families with alpha_bar marked. Output is byte-deterministic.
std::string render_svg(const RegionDiagram &diagram, const std::optional<Point> &alpha_bar = std::nullopt);

} // namespace mpm
