#include "mpm/geometry.hpp"
#include "mpm/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace mpm {

namespace {

constexpr double kAngleTol = 1e-9;

double cross(const Point &a, const Point &b) { return a.x() * b.y() - a.y() * b.x(); }

// Half-plane n.x <= d.
struct HalfPlane {
    Point n;
    double d;
    double eval(const Point &x) const { return n.dot(x) - d; }
};

HalfPlane closer_to(const Point &vi, const Point &vj) {
    return {2.0 * (vj - vi), vj.squaredNorm() - vi.squaredNorm()};
}

Polygon clip(const Polygon &poly, const HalfPlane &h) {
    Polygon out;
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Point &p = poly[i];
        const Point &q = poly[(i + 1) % m];
        const double fp = h.eval(p), fq = h.eval(q);
        if (fp <= 0.0) out.push_back(p);
        if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) out.push_back(p + (q - p) * (fp / (fp - fq)));
    }
    return out;
}

std::optional<Point> line_hits_segment(const HalfPlane &h, const Point &p, const Point &q) {
    const double denom = h.n.dot(q - p);
    if (std::abs(denom) < 1e-300) return std::nullopt;
    const double t = (h.d - h.n.dot(p)) / denom;
    if (t < -1e-12 || t > 1.0 + 1e-12) return std::nullopt;
    return p + t * (q - p);
}

std::string num(double v) {
    if (std::abs(v) < 5e-7) v = 0.0;
    return fmt::format("{:.6f}", v);
}

std::string pt(const Point &p) { return num(p.x()) + "," + num(-p.y()); }

std::string polygon_points(const Polygon &poly) {
    std::string s;
    for (std::size_t i = 0; i < poly.size(); ++i) s += (i ? " " : "") + pt(poly[i]);
    return s;
}

const std::array<const char *, 3> kModelNames = {"M10", "M01", "M11"};
const std::array<const char *, 3> kColors = {"#4e79a7", "#f28e2b", "#59a14f"};

} // namespace

std::string to_string(TriangleCase c) {
    switch (c) {
    case TriangleCase::Obtuse: return "a";
    case TriangleCase::Acute: return "b";
    case TriangleCase::Right: return "c";
    }
    return "?";
}

AlphaSet alpha_points(const Eigen::MatrixXd &Q, const ModelPosterior &post, const std::vector<PosteriorMean> &means) {
    if (means.size() != post.size()) throw DimensionMismatch("one posterior mean per model required");
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("Q has no Cholesky factor");
    AlphaSet out;
    out.A = llt.matrixU();
    out.alpha_bar = Eigen::VectorXd::Zero(Q.rows());
    for (std::size_t j = 0; j < post.size(); ++j) {
        const auto &l = post.models[j];
        Eigen::VectorXd a = l.dimension() > 0 ? Eigen::VectorXd(out.A * embed(l, means[j].beta_tilde))
                                              : Eigen::VectorXd::Zero(Q.rows());
        out.alpha_bar += post.probs[j] * a;
        out.points.push_back({l, std::move(a)});
    }
    return out;
}

bool polygon_contains(const Polygon &poly, const Point &x, double tol) {
    if (poly.size() < 3) return false;
    // Orientation-independent convex test.
    double sign = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point &p = poly[i];
        const Point &q = poly[(i + 1) % poly.size()];
        const double len = (q - p).norm();
        if (len == 0.0) continue;
        const double c = cross(q - p, x - p) / len;
        if (std::abs(c) <= tol) continue;
        if (sign == 0.0) sign = c;
        else if ((c > 0) != (sign > 0)) return false;
    }
    return true;
}

int region_of(const std::array<Polygon, 3> &family, const Point &x, double tol) {
    for (int i = 0; i < 3; ++i)
        if (polygon_contains(family[static_cast<std::size_t>(i)], x, tol)) return i;
    return -1;
}

std::array<double, 3> RegionDiagram::barycentric(const Point &x) const {
    const Point &a = vertex[0], &b = vertex[1], &c = vertex[2];
    const double area = cross(b - a, c - a);
    const double wa = cross(b - x, c - x) / area;
    const double wb = cross(c - x, a - x) / area;
    return {wa, wb, 1.0 - wa - wb};
}

int RegionDiagram::optimal_at(const Point &x) const {
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if ((x - vertex[static_cast<std::size_t>(i)]).squaredNorm() < (x - vertex[static_cast<std::size_t>(best)]).squaredNorm())
            best = i;
    return best;
}

int RegionDiagram::maxprob_at(const Point &x) const {
    const auto p = barycentric(x);
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)]) best = i;
    return best;
}

int RegionDiagram::median_at(const Point &x) const {
    const auto p = barycentric(x);
    const bool has1 = round_probability(p[0] + p[2]) >= 0.5;
    const bool has2 = round_probability(p[1] + p[2]) >= 0.5;
    if (has1 && has2) return 2;
    return has1 ? 0 : 1;
}

std::vector<std::array<Point, 2>> RegionDiagram::optimality_boundaries() const {
    std::vector<std::array<Point, 2>> out;
    double scale = 0.0;
    for (const auto &v : vertex) scale = std::max(scale, v.cwiseAbs().maxCoeff());
    scale = std::max(scale, 1.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) {
            const HalfPlane h = closer_to(vertex[i], vertex[j]);
            const double hn = h.n.norm();
            std::vector<Point> on;
            for (const auto &p : optimality[i])
                if (std::abs(h.eval(p)) / hn <= 1e-9 * scale) on.push_back(p);
            if (on.size() < 2) continue;
            std::array<Point, 2> seg{on[0], on[1]};
            double best = -1.0;
            for (std::size_t a = 0; a < on.size(); ++a)
                for (std::size_t b = a + 1; b < on.size(); ++b)
                    if ((on[a] - on[b]).norm() > best) best = (on[a] - on[b]).norm(), seg = {on[a], on[b]};
            if (best > 1e-12 * scale) out.push_back(seg);
        }
    return out;
}

std::vector<std::array<Point, 2>> RegionDiagram::median_boundaries() const { return {{A, C}, {A, B}}; }

RegionDiagram region_diagram(const Point &v10, const Point &v01, const Point &v11) {
    const double area = 0.5 * std::abs(cross(v01 - v10, v11 - v10));
    if (!(area > 1e-9)) throw Degenerate("the three model points are collinear");
    RegionDiagram d;
    d.vertex = {v10, v01, v11};
    d.A = 0.5 * (v10 + v01);
    d.B = 0.5 * (v01 + v11);
    d.C = 0.5 * (v10 + v11);
    d.O = (v10 + v01 + v11) / 3.0;
    {
        const Point b = v01 - v10, c = v11 - v10;
        const double den = 2.0 * cross(b, c);
        d.G = v10 + Point(c.y() * b.squaredNorm() - b.y() * c.squaredNorm(), b.x() * c.squaredNorm() - c.x() * b.squaredNorm()) / den;
    }
    const Point u = v10 - v11, w = v01 - v11;
    d.angle_11 = std::acos(std::clamp(u.dot(w) / (u.norm() * w.norm()), -1.0, 1.0));
    if (std::abs(d.angle_11 - M_PI / 2) <= kAngleTol) d.kind = TriangleCase::Right;
    else if (d.angle_11 > M_PI / 2) d.kind = TriangleCase::Obtuse;
    else d.kind = TriangleCase::Acute;

    const Polygon tri = {v10, v01, v11};
    for (std::size_t i = 0; i < 3; ++i) {
        Polygon cell = tri;
        for (std::size_t j = 0; j < 3; ++j)
            if (j != i) cell = clip(cell, closer_to(d.vertex[i], d.vertex[j]));
        d.optimality[i] = cell;
    }
    if (d.kind == TriangleCase::Obtuse) {
        d.F = line_hits_segment(closer_to(v10, v11), v10, v01);
        d.E = line_hits_segment(closer_to(v01, v11), v10, v01);
    }
    d.maxprob = {Polygon{v10, d.A, d.O, d.C}, Polygon{v01, d.B, d.O, d.A}, Polygon{v11, d.C, d.O, d.B}};
    d.median = {Polygon{v10, d.A, d.C}, Polygon{v01, d.A, d.B}, Polygon{d.C, d.A, d.B, v11}};
    return d;
}

std::string render_svg(const RegionDiagram &d, const std::optional<Point> &alpha_bar) {
    double minx = d.vertex[0].x(), maxx = minx, miny = d.vertex[0].y(), maxy = miny;
    for (const auto &v : d.vertex) {
        minx = std::min(minx, v.x()), maxx = std::max(maxx, v.x());
        miny = std::min(miny, v.y()), maxy = std::max(maxy, v.y());
    }
    const double margin = 0.1 * std::max(maxx - minx, maxy - miny);
    const double w = maxx - minx + 2 * margin, h = maxy - miny + 2 * margin;
    const double stroke = 0.004 * std::max(w, h);
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\" "
                     "width=\"600\" height=\"{}\">\n",
                     num(minx - margin), num(-maxy - margin), num(w), num(h), num(600.0 * h / w));
    s += fmt::format("<title>Model regions, case ({})</title>\n", to_string(d.kind));

    auto family = [&](const char *id, const std::array<Polygon, 3> &polys, double opacity, const char *dash) {
        s += fmt::format("<g id=\"{}\">\n", id);
        for (std::size_t i = 0; i < 3; ++i) {
            if (polys[i].size() < 3) continue;
            s += fmt::format("  <polygon points=\"{}\" fill=\"{}\" fill-opacity=\"{}\" stroke=\"black\" "
                             "stroke-width=\"{}\"{}><title>{} {}</title></polygon>\n",
                             polygon_points(polys[i]), kColors[i], num(opacity), num(stroke),
                             dash[0] ? fmt::format(" stroke-dasharray=\"{}\"", dash) : std::string(), id, kModelNames[i]);
        }
        s += "</g>\n";
    };
    family("optimality", d.optimality, 0.35, "");
    family("maxprob", d.maxprob, 0.0, fmt::format("{},{}", num(stroke), num(stroke)).c_str());
    family("median", d.median, 0.0, fmt::format("{},{}", num(4 * stroke), num(2 * stroke)).c_str());

    s += "<g id=\"boundaries\">\n";
    for (const auto &seg : d.optimality_boundaries())
        s += fmt::format("  <path class=\"optimality-boundary\" d=\"M {} L {}\" stroke=\"black\" stroke-width=\"{}\"/>\n",
                         pt(seg[0]), pt(seg[1]), num(2 * stroke));
    for (const auto &seg : d.median_boundaries())
        s += fmt::format("  <path class=\"median-boundary\" d=\"M {} L {}\" stroke=\"black\" stroke-width=\"{}\" "
                         "stroke-dasharray=\"{},{}\"/>\n",
                         pt(seg[0]), pt(seg[1]), num(stroke), num(4 * stroke), num(2 * stroke));
    s += "</g>\n";

    const double fs = 0.04 * std::max(w, h);
    s += "<g id=\"labels\" font-family=\"sans-serif\" font-size=\"" + num(fs) + "\">\n";
    for (std::size_t i = 0; i < 3; ++i)
        s += fmt::format("  <text x=\"{}\" y=\"{}\">{}</text>\n", num(d.vertex[i].x()), num(-d.vertex[i].y()), kModelNames[i]);
    const std::array<std::pair<const char *, Point>, 4> marks = {{{"A", d.A}, {"B", d.B}, {"C", d.C}, {"O", d.O}}};
    for (const auto &[name, p] : marks)
        s += fmt::format("  <text x=\"{}\" y=\"{}\">{}</text>\n", num(p.x()), num(-p.y()), name);
    if (d.E) s += fmt::format("  <text x=\"{}\" y=\"{}\">E</text>\n", num(d.E->x()), num(-d.E->y()));
    if (d.F) s += fmt::format("  <text x=\"{}\" y=\"{}\">F</text>\n", num(d.F->x()), num(-d.F->y()));
    s += "</g>\n";
    if (alpha_bar)
        s += fmt::format("<circle id=\"alpha-bar\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"red\"/>\n", num(alpha_bar->x()),
                         num(-alpha_bar->y()), num(3 * stroke));
    s += "</svg>\n";
    return s;
}

} // namespace mpm
