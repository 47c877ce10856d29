#include "cvt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cvt {

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::TooFewVertices: return "TooFewVertices";
        case Errc::NonConvex: return "NonConvex";
        case Errc::Degenerate: return "Degenerate";
        case Errc::InvalidConfiguration: return "InvalidConfiguration";
        case Errc::CoincidentGenerators: return "CoincidentGenerators";
        case Errc::EmptyCell: return "EmptyCell";
        case Errc::DegenerateCell: return "DegenerateCell";
        case Errc::MismatchedSizes: return "MismatchedSizes";
        case Errc::PointOutsideDomain: return "PointOutsideDomain";
        case Errc::PerturbationExitsDomain: return "PerturbationExitsDomain";
        case Errc::InvalidQuadrature: return "InvalidQuadrature";
        case Errc::InvalidSchedule: return "InvalidSchedule";
        case Errc::InvalidParams: return "InvalidParams";
        case Errc::IndexOutOfSchedule: return "IndexOutOfSchedule";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::UnsupportedDomainForTiling: return "UnsupportedDomainForTiling";
        case Errc::InvalidAnchor: return "InvalidAnchor";
        case Errc::NoGenerators: return "NoGenerators";
        case Errc::TooFewClusters: return "TooFewClusters";
    }
    return "Unknown";
}

double polygon_area(std::span<const Vec2> poly) {
    const std::size_t n = poly.size();
    if (n < 3) return 0.0;
    // Shoelace about the first vertex keeps cancellation small far from the origin.
    const Vec2 o = poly[0];
    double twice = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) twice += cross(poly[k] - o, poly[k + 1] - o);
    return 0.5 * twice;
}

Vec2 polygon_centroid(std::span<const Vec2> poly) {
    const std::size_t n = poly.size();
    const Vec2 o = poly[0];
    double twice = 0.0;
    Vec2 acc;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const Vec2 a = poly[k] - o;
        const Vec2 b = poly[k + 1] - o;
        const double c = cross(a, b);
        twice += c;
        acc += c * (a + b);
    }
    return o + acc / (3.0 * twice);
}

double second_moment(std::span<const Vec2> cell, Vec2 p) {
    if (cell.size() < 3 || std::abs(polygon_area(cell)) < 1e-14)
        throw Error(Errc::DegenerateCell, "cell area below 1e-14");
    // Triangle (p, a, b): ∫‖y − p‖² = cross(a, b)/12 · (a·a + a·b + b·b), a and b relative to p.
    double total = 0.0;
    const std::size_t n = cell.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 a = cell[k] - p;
        const Vec2 b = cell[(k + 1) % n] - p;
        total += cross(a, b) * (dot(a, a) + dot(a, b) + dot(b, b));
    }
    return std::max(0.0, total / 12.0);
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
    const std::size_t n = vertices_.size();
    for (std::size_t k = 0; k < n; ++k) {
        perimeter_ += distance(vertices_[k], vertices_[(k + 1) % n]);
        for (std::size_t m = k + 1; m < n; ++m)
            diameter_ = std::max(diameter_, distance(vertices_[k], vertices_[m]));
    }
    area_ = polygon_area(vertices_);
    centroid_ = polygon_centroid(vertices_);
}

Domain Domain::from_vertices(std::vector<Vec2> vertices) {
    const std::size_t n = vertices.size();
    if (n < 3) throw Error(Errc::TooFewVertices, "a domain needs at least 3 vertices");
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(vertices[k].x) || !std::isfinite(vertices[k].y))
            throw Error(Errc::Degenerate, "non-finite vertex coordinate");
        for (std::size_t m = k + 1; m < n; ++m)
            if (vertices[k] == vertices[m]) throw Error(Errc::Degenerate, "duplicate vertex");
    }
    const double signed_area = polygon_area(vertices);
    if (signed_area == 0.0) throw Error(Errc::Degenerate, "zero-area polygon");
    if (signed_area < 0.0) std::reverse(vertices.begin(), vertices.end());

    double turning = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 e1 = vertices[(k + 1) % n] - vertices[k];
        const Vec2 e2 = vertices[(k + 2) % n] - vertices[(k + 1) % n];
        const double c = cross(e1, e2);
        if (std::abs(c) <= 1e-12 * norm(e1) * norm(e2))
            throw Error(Errc::Degenerate, "collinear vertices at index " + std::to_string((k + 1) % n));
        if (c < 0.0) throw Error(Errc::NonConvex, "reflex vertex at index " + std::to_string((k + 1) % n));
        turning += std::atan2(c, dot(e1, e2));
    }
    // Star polygons turn every corner the same way but wind more than once.
    if (turning > 2.0 * std::numbers::pi + 1e-9) throw Error(Errc::NonConvex, "self-intersecting polygon");
    return Domain(std::move(vertices));
}

Domain Domain::regular_polygon(std::size_t k, double radius, Vec2 center) {
    if (k < 3) throw Error(Errc::TooFewVertices, "regular polygon needs k >= 3");
    std::vector<Vec2> v;
    v.reserve(k);
    for (std::size_t m = 0; m < k; ++m) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(k);
        v.push_back({center.x + radius * std::cos(t), center.y + radius * std::sin(t)});
    }
    return from_vertices(std::move(v));
}

Domain Domain::unit_square() { return from_vertices({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

double Domain::signed_distance(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 a = vertices_[k];
        const Vec2 e = vertices_[(k + 1) % n] - a;
        best = std::min(best, cross(e, p - a) / norm(e));
    }
    return best;
}

void validate(const Domain& domain, const Configuration& config) {
    for (std::size_t i = 0; i < config.size(); ++i) {
        const Vec2 p = config.points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !domain.contains(p))
            throw Error(Errc::InvalidConfiguration, "generator " + std::to_string(i) + " is not strictly inside the domain");
    }
    for (std::size_t i = 0; i < config.size(); ++i)
        for (std::size_t j = i + 1; j < config.size(); ++j)
            if (distance(config.points[i], config.points[j]) <= kCoincidenceTol)
                throw Error(Errc::CoincidentGenerators,
                            "generators " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

// ---------------------------------------------------------------------------
// Tessellation

namespace {

// Edge k runs from vertices[k] to vertices[k+1]; label >= 0 is the neighbouring
// generator whose bisector produced it, label < 0 a domain edge.
struct LabelledPolygon {
    std::vector<Vec2> vertices;
    std::vector<long> labels;
};

// Keeps {x : dot(normal, x) <= offset}; the new edge along the cut carries `label`.
void clip(LabelledPolygon& poly, Vec2 normal, double offset, long label) {
    const std::size_t n = poly.vertices.size();
    if (n == 0) return;
    LabelledPolygon out;
    out.vertices.reserve(n + 2);
    out.labels.reserve(n + 2);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 a = poly.vertices[k];
        const Vec2 b = poly.vertices[(k + 1) % n];
        const double sa = dot(normal, a) - offset;
        const double sb = dot(normal, b) - offset;
        const long lab = poly.labels[k];
        if (sa <= 0.0) {
            out.vertices.push_back(a);
            out.labels.push_back(lab);
            if (sb > 0.0) {
                const double t = sa / (sa - sb);
                out.vertices.push_back(a + t * (b - a));
                out.labels.push_back(label);
            }
        } else if (sb <= 0.0) {
            const double t = sa / (sa - sb);
            out.vertices.push_back(a + t * (b - a));
            out.labels.push_back(lab);
        }
    }
    poly = std::move(out);
}

// Drops vertices that coincide with their successor; the surviving copy keeps
// the label of the outgoing edge.
void remove_short_edges(LabelledPolygon& poly, double tol) {
    bool changed = true;
    while (changed && poly.vertices.size() > 2) {
        changed = false;
        const std::size_t n = poly.vertices.size();
        for (std::size_t k = 0; k < n; ++k) {
            if (distance(poly.vertices[k], poly.vertices[(k + 1) % n]) <= tol) {
                poly.vertices.erase(poly.vertices.begin() + static_cast<std::ptrdiff_t>(k));
                poly.labels.erase(poly.labels.begin() + static_cast<std::ptrdiff_t>(k));
                changed = true;
                break;
            }
        }
    }
}

}  // namespace

Tessellation tessellate(const Domain& domain, const Configuration& config) {
    const std::size_t n = config.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (distance(config.points[i], config.points[j]) <= kCoincidenceTol)
                throw Error(Errc::CoincidentGenerators,
                            "generators " + std::to_string(i) + " and " + std::to_string(j) + " coincide");

    const double edge_tol = 1e-12 * domain.diameter();
    Tessellation tess;
    tess.cells.reserve(n);
    tess.areas.reserve(n);
    tess.centroids.reserve(n);

    // Per-cell sum of bisector edge lengths keyed by neighbour.
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(n);

    for (std::size_t i = 0; i < n; ++i) {
        LabelledPolygon poly;
        poly.vertices = domain.vertices();
        for (std::size_t k = 0; k < domain.num_edges(); ++k) poly.labels.push_back(-1 - static_cast<long>(k));

        const Vec2 xi = config.points[i];
        for (std::size_t j = 0; j < n && !poly.vertices.empty(); ++j) {
            if (j == i) continue;
            const Vec2 xj = config.points[j];
            const Vec2 normal = xj - xi;
            clip(poly, normal, dot(normal, 0.5 * (xi + xj)), static_cast<long>(j));
        }
        remove_short_edges(poly, edge_tol);
        if (poly.vertices.size() < 3)
            throw Error(Errc::EmptyCell, "cell " + std::to_string(i) + " vanished during clipping");

        const double area = polygon_area(poly.vertices);
        if (!(area > 0.0)) throw Error(Errc::EmptyCell, "cell " + std::to_string(i) + " has no area");

        const std::size_t m = poly.vertices.size();
        for (std::size_t k = 0; k < m; ++k) {
            if (poly.labels[k] < 0) continue;
            const double len = distance(poly.vertices[k], poly.vertices[(k + 1) % m]);
            auto& adj = adjacency[i];
            const auto j = static_cast<std::size_t>(poly.labels[k]);
            auto it = std::find_if(adj.begin(), adj.end(), [j](const auto& e) { return e.first == j; });
            if (it == adj.end())
                adj.emplace_back(j, len);
            else
                it->second += len;
        }

        tess.areas.push_back(area);
        tess.centroids.push_back(polygon_centroid(poly.vertices));
        tess.cells.push_back(std::move(poly.vertices));
    }

    // Each shared edge is seen from both sides; average the two measurements and
    // keep it only when both sides agree that it has positive length.
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, len_i] : adjacency[i]) {
            if (j <= i) continue;
            const auto& other = adjacency[j];
            auto it = std::find_if(other.begin(), other.end(), [i](const auto& e) { return e.first == i; });
            if (it == other.end()) continue;
            const double len = 0.5 * (len_i + it->second);
            if (len > edge_tol) tess.edges.push_back({i, j, len});
        }
    }
    std::sort(tess.edges.begin(), tess.edges.end(),
              [](const SharedEdge& a, const SharedEdge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    return tess;
}

}  // namespace cvt
