#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cvt/error.hpp"

namespace cvt {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
    Vec2& operator+=(Vec2 b) {
        x += b.x;
        y += b.y;
        return *this;
    }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Closed convex polygon, vertices counterclockwise, no repeated closing vertex.
using Polygon = std::vector<Vec2>;

double polygon_area(std::span<const Vec2> poly);
Vec2 polygon_centroid(std::span<const Vec2> poly);

/// Exact ∫_cell ‖p − y‖² dy over a convex polygon (fan triangulation about p).
/// Throws DegenerateCell when the area is below 1e-14.
double second_moment(std::span<const Vec2> cell, Vec2 p);

/// Strictly convex polygon in counterclockwise order with cached measures.
class Domain {
public:
    /// Normalizes orientation; throws TooFewVertices, Degenerate or NonConvex.
    static Domain from_vertices(std::vector<Vec2> vertices);
    /// Regular k-gon inscribed in the circle of given radius and center,
    /// first vertex at angle 0.
    static Domain regular_polygon(std::size_t k, double radius = 1.0, Vec2 center = {});
    static Domain unit_square();

    const std::vector<Vec2>& vertices() const { return vertices_; }
    std::size_t num_edges() const { return vertices_.size(); }
    Vec2 vertex(std::size_t k) const { return vertices_[k % vertices_.size()]; }
    double perimeter() const { return perimeter_; }
    double area() const { return area_; }
    double diameter() const { return diameter_; }
    Vec2 centroid() const { return centroid_; }

    /// Uniform boundary density that neutralizes `n_charges` unit charges.
    double sigma(std::size_t n_charges) const { return static_cast<double>(n_charges) / perimeter_; }

    /// Minimum over edges of the signed distance to the edge line; positive inside.
    double signed_distance(Vec2 p) const;
    bool contains(Vec2 p) const { return signed_distance(p) > 0.0; }

private:
    explicit Domain(std::vector<Vec2> vertices);

    std::vector<Vec2> vertices_;
    double perimeter_ = 0.0;
    double area_ = 0.0;
    double diameter_ = 0.0;
    Vec2 centroid_;
};

inline Domain build_domain(std::vector<Vec2> vertices) { return Domain::from_vertices(std::move(vertices)); }

/// Ordered generator positions.
struct Configuration {
    std::vector<Vec2> points;

    std::size_t size() const { return points.size(); }
    friend bool operator==(const Configuration&, const Configuration&) = default;
};

inline constexpr double kCoincidenceTol = 1e-12;

/// Throws InvalidConfiguration (point not strictly inside) or CoincidentGenerators.
void validate(const Domain& domain, const Configuration& config);

struct SharedEdge {
    std::size_t i = 0;
    std::size_t j = 0;
    double length = 0.0;
};

struct Tessellation {
    std::vector<Polygon> cells;
    std::vector<double> areas;
    std::vector<Vec2> centroids;
    /// Sorted by (i, j) with i < j; only positive-length shared edges.
    std::vector<SharedEdge> edges;

    std::size_t size() const { return cells.size(); }
};

/// Voronoi cells of `config` clipped to `domain` by successive half-plane
/// cuts. Adjacency comes from the bisector labels that survive clipping.
Tessellation tessellate(const Domain& domain, const Configuration& config);

}  // namespace cvt
