#pragma once

// 2D geometry kernel: SE(2) poses, disc/convex-polygon shapes, collision,
// containment and swept-segment validity. Closed-set semantics throughout:
// touching counts as collision.

#include <cmath>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace mrrefine::geom {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Rigid planar pose; theta is kept normalized to (-pi, pi].
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

/// Normalizes an angle to (-pi, pi].
double normalize_angle(double a);

Pose2 pose(double x, double y, double theta);

/// SE(2) group product a * b.
Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& a);

/// Maps a point from the pose's body frame to the world frame.
Vec2 apply(const Pose2& p, Vec2 v);

struct Disc {
    double radius = 0.0;
};

/// Strictly convex polygon, counter-clockwise winding, body frame.
struct ConvexPolygon {
    std::vector<Vec2> vertices;
};

using Shape = std::variant<Disc, ConvexPolygon>;

/// Throws std::invalid_argument on radius <= 0, < 3 vertices,
/// non-convex or clockwise polygons.
void check_shape(const Shape& s);

/// Radius of the smallest origin-centered disc covering the shape.
double bounding_radius(const Shape& s);

/// Closed-set intersection test (touching counts as collision).
bool collide(const Shape& sa, const Pose2& pa, const Shape& sb, const Pose2& pb);

/// True iff `s` posed at `ps` lies entirely inside the convex polygon
/// region posed at `pregion` (boundary contact allowed).
bool contains(const Shape& region, const Pose2& pregion, const Shape& s, const Pose2& ps);

/// Shortest signed angular difference to - from, in (-pi, pi].
double angle_diff(double from, double to);

/// Linear in (x, y), shortest arc in theta. t in [0, 1].
Pose2 interpolate(const Pose2& from, const Pose2& to, double t);

/// Translation distance plus rot_weight * |shortest arc|.
double se2_distance(const Pose2& a, const Pose2& b, double rot_weight = 0.5);

using Placed = std::pair<Shape, Pose2>;

/// Dense-interpolation sweep of `s` from `from` to `to` against obstacles.
/// Poses are sampled at metric spacing <= step, endpoints included.
bool segment_valid(const Shape& s, const Pose2& from, const Pose2& to,
                   std::span<const Placed> obstacles, double step);

struct Aabb {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
    void expand(const Aabb& o);
    bool empty() const { return xmax < xmin || ymax < ymin; }
};

Aabb aabb_of(const Shape& s, const Pose2& p);

}  // namespace mrrefine::geom
