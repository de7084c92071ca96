#include "mrrefine/geom.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace mrrefine::geom {

namespace {

constexpr double kEps = 1e-9;

std::vector<Vec2> world_vertices(const ConvexPolygon& poly, const Pose2& p) {
    std::vector<Vec2> out;
    out.reserve(poly.vertices.size());
    for (const Vec2& v : poly.vertices) out.push_back(apply(p, v));
    return out;
}

// Distance from a point to a closed convex polygon given by world vertices.
// Returns 0 when the point is inside or on the boundary.
double point_poly_distance(Vec2 pt, const std::vector<Vec2>& verts) {
    const size_t n = verts.size();
    bool inside = true;
    double best = std::numeric_limits<double>::max();
    for (size_t i = 0; i < n; ++i) {
        const Vec2 a = verts[i];
        const Vec2 b = verts[(i + 1) % n];
        const Vec2 e = b - a;
        if (cross(e, pt - a) < 0.0) inside = false;
        // point-segment distance
        const double len2 = dot(e, e);
        double t = len2 > 0.0 ? dot(pt - a, e) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, norm(pt - (a + t * e)));
    }
    return inside ? 0.0 : best;
}

// Projection interval of world vertices onto a unit axis.
std::pair<double, double> project(const std::vector<Vec2>& verts, Vec2 axis) {
    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    for (const Vec2& v : verts) {
        const double d = dot(v, axis);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return {lo, hi};
}

bool separated_by_edges(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    const size_t n = a.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2 e = a[(i + 1) % n] - a[i];
        const double len = norm(e);
        if (len <= 0.0) continue;
        const Vec2 axis{e.y / len, -e.x / len};  // outward normal for CCW
        auto [alo, ahi] = project(a, axis);
        auto [blo, bhi] = project(b, axis);
        if (ahi < blo - kEps || bhi < alo - kEps) return true;
    }
    return false;
}

}  // namespace

double normalize_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

Pose2 pose(double x, double y, double theta) { return {x, y, normalize_angle(theta)}; }

Pose2 compose(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta), s = std::sin(a.theta);
    return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
            normalize_angle(a.theta + b.theta)};
}

Pose2 inverse(const Pose2& a) {
    const double c = std::cos(a.theta), s = std::sin(a.theta);
    return {-(c * a.x + s * a.y), -(-s * a.x + c * a.y), normalize_angle(-a.theta)};
}

Vec2 apply(const Pose2& p, Vec2 v) {
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    return {p.x + c * v.x - s * v.y, p.y + s * v.x + c * v.y};
}

void check_shape(const Shape& s) {
    if (const Disc* d = std::get_if<Disc>(&s)) {
        if (!(d->radius > 0.0)) throw std::invalid_argument("disc radius must be > 0");
        return;
    }
    const ConvexPolygon& poly = std::get<ConvexPolygon>(s);
    const size_t n = poly.vertices.size();
    if (n < 3) throw std::invalid_argument("polygon needs >= 3 vertices");
    for (size_t i = 0; i < n; ++i) {
        const Vec2 a = poly.vertices[i];
        const Vec2 b = poly.vertices[(i + 1) % n];
        const Vec2 c = poly.vertices[(i + 2) % n];
        if (cross(b - a, c - b) <= 0.0)
            throw std::invalid_argument("polygon must be strictly convex and CCW");
    }
}

double bounding_radius(const Shape& s) {
    if (const Disc* d = std::get_if<Disc>(&s)) return d->radius;
    double r = 0.0;
    for (const Vec2& v : std::get<ConvexPolygon>(s).vertices) r = std::max(r, norm(v));
    return r;
}

bool collide(const Shape& sa, const Pose2& pa, const Shape& sb, const Pose2& pb) {
    const Disc* da = std::get_if<Disc>(&sa);
    const Disc* db = std::get_if<Disc>(&sb);
    if (da && db) {
        const double d = std::hypot(pa.x - pb.x, pa.y - pb.y);
        return d <= da->radius + db->radius + kEps;
    }
    if (da && !db) return collide(sb, pb, sa, pa);
    if (db) {
        const auto verts = world_vertices(std::get<ConvexPolygon>(sa), pa);
        return point_poly_distance({pb.x, pb.y}, verts) <= db->radius + kEps;
    }
    const auto va = world_vertices(std::get<ConvexPolygon>(sa), pa);
    const auto vb = world_vertices(std::get<ConvexPolygon>(sb), pb);
    return !separated_by_edges(va, vb) && !separated_by_edges(vb, va);
}

bool contains(const Shape& region, const Pose2& pregion, const Shape& s, const Pose2& ps) {
    const ConvexPolygon& poly = std::get<ConvexPolygon>(region);
    const auto rverts = world_vertices(poly, pregion);
    const size_t n = rverts.size();
    auto inward_margin = [&](Vec2 pt) {
        double m = std::numeric_limits<double>::max();
        for (size_t i = 0; i < n; ++i) {
            const Vec2 e = rverts[(i + 1) % n] - rverts[i];
            const double len = norm(e);
            m = std::min(m, cross(e, pt - rverts[i]) / len);
        }
        return m;
    };
    if (const Disc* d = std::get_if<Disc>(&s))
        return inward_margin({ps.x, ps.y}) >= d->radius - kEps;
    for (const Vec2& v : world_vertices(std::get<ConvexPolygon>(s), ps))
        if (inward_margin(v) < -kEps) return false;
    return true;
}

double angle_diff(double from, double to) { return normalize_angle(to - from); }

Pose2 interpolate(const Pose2& from, const Pose2& to, double t) {
    return {from.x + t * (to.x - from.x), from.y + t * (to.y - from.y),
            normalize_angle(from.theta + t * angle_diff(from.theta, to.theta))};
}

double se2_distance(const Pose2& a, const Pose2& b, double rot_weight) {
    return std::hypot(b.x - a.x, b.y - a.y) +
           rot_weight * std::abs(angle_diff(a.theta, b.theta));
}

bool segment_valid(const Shape& s, const Pose2& from, const Pose2& to,
                   std::span<const Placed> obstacles, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
    const double d = se2_distance(from, to);
    const int n = std::max(1, static_cast<int>(std::ceil(d / step)));
    for (int i = 0; i <= n; ++i) {
        const Pose2 p = interpolate(from, to, static_cast<double>(i) / n);
        for (const auto& [os, op] : obstacles)
            if (collide(s, p, os, op)) return false;
    }
    return true;
}

void Aabb::expand(const Aabb& o) {
    if (o.empty()) return;
    if (empty()) {
        *this = o;
        return;
    }
    xmin = std::min(xmin, o.xmin);
    ymin = std::min(ymin, o.ymin);
    xmax = std::max(xmax, o.xmax);
    ymax = std::max(ymax, o.ymax);
}

Aabb aabb_of(const Shape& s, const Pose2& p) {
    if (const Disc* d = std::get_if<Disc>(&s))
        return {p.x - d->radius, p.y - d->radius, p.x + d->radius, p.y + d->radius};
    Aabb box{1.0, 1.0, -1.0, -1.0};
    for (const Vec2& v : std::get<ConvexPolygon>(s).vertices) {
        const Vec2 w = apply(p, v);
        box.expand({w.x, w.y, w.x, w.y});
    }
    return box;
}

}  // namespace mrrefine::geom
