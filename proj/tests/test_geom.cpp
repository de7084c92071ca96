#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mrrefine/geom.hpp"
#include "mrrefine/rng.hpp"

using namespace mrrefine;
using namespace mrrefine::geom;

namespace {

ConvexPolygon square(double half) {
    return ConvexPolygon{{{-half, -half}, {half, -half}, {half, half}, {-half, half}}};
}

}  // namespace

TEST_CASE("normalize_angle maps onto (-pi, pi]") {
    CHECK(normalize_angle(0.0) == doctest::Approx(0.0));
    CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
    // -pi is excluded from the range; it wraps to +pi.
    CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
    CHECK(normalize_angle(2.0 * kPi) == doctest::Approx(0.0));
    CHECK(normalize_angle(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(normalize_angle(-3.5 * kPi) == doctest::Approx(0.5 * kPi));

    Rng rng = rng_for(7, "geom-angle");
    for (int i = 0; i < 200; ++i) {
        double a = rng.uniform(-50.0, 50.0);
        double n = normalize_angle(a);
        CHECK(n > -kPi);
        CHECK(n <= kPi + 1e-15);
        // Same direction on the circle.
        CHECK(std::cos(n) == doctest::Approx(std::cos(a)).epsilon(1e-9));
        CHECK(std::sin(n) == doctest::Approx(std::sin(a)).epsilon(1e-9));
    }
}

TEST_CASE("compose and inverse follow the SE(2) group law") {
    // Hand-computed: rotating b's translation (3,-1) by pi/2 gives (1,3).
    Pose2 a = pose(1.0, 2.0, kPi / 2.0);
    Pose2 b = pose(3.0, -1.0, kPi / 4.0);
    Pose2 ab = compose(a, b);
    CHECK(ab.x == doctest::Approx(2.0));
    CHECK(ab.y == doctest::Approx(5.0));
    CHECK(ab.theta == doctest::Approx(3.0 * kPi / 4.0));

    Pose2 ia = inverse(a);
    CHECK(ia.x == doctest::Approx(-2.0));
    CHECK(ia.y == doctest::Approx(1.0));
    CHECK(ia.theta == doctest::Approx(-kPi / 2.0));

    Rng rng = rng_for(7, "geom-group");
    for (int i = 0; i < 100; ++i) {
        Pose2 p = pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.angle());
        Pose2 q = pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.angle());
        Pose2 r = pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.angle());

        // Associativity.
        Pose2 lhs = compose(compose(p, q), r);
        Pose2 rhs = compose(p, compose(q, r));
        CHECK(lhs.x == doctest::Approx(rhs.x).epsilon(1e-9));
        CHECK(lhs.y == doctest::Approx(rhs.y).epsilon(1e-9));
        CHECK(std::abs(angle_diff(lhs.theta, rhs.theta)) < 1e-9);

        // p * p^-1 = identity.
        Pose2 id = compose(p, inverse(p));
        CHECK(std::abs(id.x) < 1e-9);
        CHECK(std::abs(id.y) < 1e-9);
        CHECK(std::abs(angle_diff(id.theta, 0.0)) < 1e-9);

        // apply is the group action: (pq) v == p (q v).
        Vec2 v{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        Vec2 w1 = apply(compose(p, q), v);
        Vec2 w2 = apply(p, apply(q, v));
        CHECK(w1.x == doctest::Approx(w2.x).epsilon(1e-9));
        CHECK(w1.y == doctest::Approx(w2.y).epsilon(1e-9));
    }
}

TEST_CASE("apply maps body-frame points to the world") {
    Pose2 p = pose(2.0, 1.0, kPi / 2.0);
    Vec2 w = apply(p, {1.0, 0.0});
    CHECK(w.x == doctest::Approx(2.0));
    CHECK(w.y == doctest::Approx(2.0));
}

TEST_CASE("check_shape rejects degenerate shapes") {
    CHECK_THROWS_AS(check_shape(Disc{0.0}), std::invalid_argument);
    CHECK_THROWS_AS(check_shape(Disc{-1.0}), std::invalid_argument);
    CHECK_THROWS_AS(check_shape(ConvexPolygon{{{0, 0}, {1, 0}}}), std::invalid_argument);
    // Clockwise winding.
    CHECK_THROWS_AS(check_shape(ConvexPolygon{{{0, 0}, {0, 1}, {1, 1}, {1, 0}}}),
                    std::invalid_argument);
    // Reflex vertex.
    CHECK_THROWS_AS(
        check_shape(ConvexPolygon{{{0, 0}, {2, 0}, {2, 2}, {1, 0.5}, {0, 2}}}),
        std::invalid_argument);
    CHECK_NOTHROW(check_shape(Disc{0.5}));
    CHECK_NOTHROW(check_shape(square(1.0)));
}

TEST_CASE("bounding_radius") {
    CHECK(bounding_radius(Disc{0.7}) == doctest::Approx(0.7));
    CHECK(bounding_radius(square(1.0)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(bounding_radius(ConvexPolygon{{{-1, 0}, {3, 0}, {0, 2}}}) == doctest::Approx(3.0));
}

TEST_CASE("disc-disc collision is closed-set") {
    Disc a{0.5}, b{0.5};
    // Exactly touching: centers one diameter apart.
    CHECK(collide(a, pose(0, 0, 0), b, pose(1.0, 0, 0)));
    CHECK(collide(a, pose(0, 0, 0), b, pose(0.9, 0, 0)));
    CHECK_FALSE(collide(a, pose(0, 0, 0), b, pose(1.0 + 1e-6, 0, 0)));
    CHECK_FALSE(collide(a, pose(0, 0, 0), b, pose(3.0, 4.0, 0)));
}

TEST_CASE("disc-polygon collision") {
    ConvexPolygon sq = square(1.0);
    Disc d{0.5};
    // Edge contact at x = 1.5.
    CHECK(collide(sq, pose(0, 0, 0), d, pose(1.5, 0, 0)));
    CHECK(collide(d, pose(1.5, 0, 0), sq, pose(0, 0, 0)));
    CHECK_FALSE(collide(sq, pose(0, 0, 0), d, pose(1.51, 0, 0)));
    // Vertex contact: rotate the square by pi/4 so a corner points along +x.
    double corner = std::sqrt(2.0);
    CHECK(collide(sq, pose(0, 0, kPi / 4.0), d, pose(corner + 0.5, 0, 0)));
    CHECK_FALSE(collide(sq, pose(0, 0, kPi / 4.0), d, pose(corner + 0.51, 0, 0)));
    // Disc center inside the polygon.
    CHECK(collide(sq, pose(0, 0, 0), d, pose(0.2, -0.3, 0)));
}

TEST_CASE("polygon-polygon collision") {
    ConvexPolygon sq = square(1.0);
    CHECK(collide(sq, pose(0, 0, 0), sq, pose(1.9, 0, 0)));
    // Exactly touching edges.
    CHECK(collide(sq, pose(0, 0, 0), sq, pose(2.0, 0, 0)));
    CHECK_FALSE(collide(sq, pose(0, 0, 0), sq, pose(2.01, 0, 0)));
    // A diamond slides past an axis-aligned square diagonally: the gap
    // between corner and edge is what separates them.
    CHECK_FALSE(collide(sq, pose(0, 0, 0), sq, pose(1.0 + std::sqrt(2.0) + 0.01, 0, kPi / 4.0)));
    CHECK(collide(sq, pose(0, 0, 0), sq, pose(1.0 + std::sqrt(2.0) - 0.01, 0, kPi / 4.0)));
    // Full containment of a small square in a big one.
    CHECK(collide(square(3.0), pose(0, 0, 0), sq, pose(0.5, 0.5, 0.3)));
}

TEST_CASE("contains allows boundary contact") {
    ConvexPolygon region = ConvexPolygon{{{0, 0}, {4, 0}, {4, 4}, {0, 4}}};
    Disc d{1.0};
    CHECK(contains(region, pose(0, 0, 0), d, pose(2, 2, 0)));
    // Touching two walls.
    CHECK(contains(region, pose(0, 0, 0), d, pose(1, 1, 0)));
    CHECK_FALSE(contains(region, pose(0, 0, 0), d, pose(0.99, 1, 0)));
    CHECK_FALSE(contains(region, pose(0, 0, 0), d, pose(6, 2, 0)));

    // Polygon in polygon, with the region itself posed.
    ConvexPolygon sq = square(1.0);
    CHECK(contains(region, pose(10, 0, 0), sq, pose(12, 2, kPi / 4.0)));
    CHECK_FALSE(contains(region, pose(10, 0, 0), sq, pose(13.5, 2, kPi / 4.0)));
}

TEST_CASE("angle_diff is the shortest signed arc") {
    CHECK(angle_diff(0.0, kPi / 2.0) == doctest::Approx(kPi / 2.0));
    CHECK(angle_diff(kPi / 2.0, 0.0) == doctest::Approx(-kPi / 2.0));
    // Crossing the branch cut.
    CHECK(angle_diff(3.0, -3.0) == doctest::Approx(2.0 * kPi - 6.0));
    CHECK(angle_diff(-3.0, 3.0) == doctest::Approx(6.0 - 2.0 * kPi));

    Rng rng = rng_for(7, "geom-adiff");
    for (int i = 0; i < 200; ++i) {
        double a = rng.angle(), b = rng.angle();
        double d = angle_diff(a, b);
        CHECK(std::abs(d) <= kPi + 1e-12);
        CHECK(std::abs(angle_diff(normalize_angle(a + d), b)) < 1e-9);
    }
}

TEST_CASE("interpolate takes the short arc") {
    Pose2 a = pose(0, 0, 2.5);
    Pose2 b = pose(4, 0, -2.5);
    Pose2 m = interpolate(a, b, 0.25);
    CHECK(m.x == doctest::Approx(1.0));
    CHECK(m.y == doctest::Approx(0.0));
    // Short way from 2.5 to -2.5 goes up through pi (arc length 2pi - 5).
    CHECK(m.theta == doctest::Approx(2.5 + 0.25 * (2.0 * kPi - 5.0)));
    Pose2 at0 = interpolate(a, b, 0.0);
    Pose2 at1 = interpolate(a, b, 1.0);
    CHECK(at0.x == doctest::Approx(a.x));
    CHECK(std::abs(angle_diff(at0.theta, a.theta)) < 1e-12);
    CHECK(at1.x == doctest::Approx(b.x));
    CHECK(std::abs(angle_diff(at1.theta, b.theta)) < 1e-12);
}

TEST_CASE("se2_distance is a metric") {
    CHECK(se2_distance(pose(0, 0, 0), pose(3, 4, kPi / 2.0)) ==
          doctest::Approx(5.0 + 0.5 * kPi / 2.0));
    CHECK(se2_distance(pose(0, 0, 0), pose(3, 4, kPi / 2.0), 2.0) ==
          doctest::Approx(5.0 + 2.0 * kPi / 2.0));

    Rng rng = rng_for(7, "geom-metric");
    for (int i = 0; i < 200; ++i) {
        Pose2 p = pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.angle());
        Pose2 q = pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.angle());
        Pose2 r = pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.angle());
        CHECK(se2_distance(p, p) == doctest::Approx(0.0));
        CHECK(se2_distance(p, q) == doctest::Approx(se2_distance(q, p)));
        CHECK(se2_distance(p, r) <= se2_distance(p, q) + se2_distance(q, r) + 1e-9);
    }
}

TEST_CASE("segment_valid sweeps densely") {
    Disc mover{0.4};
    std::vector<Placed> obstacles;
    obstacles.emplace_back(Disc{1.0}, pose(5.0, 2.0, 0));

    // Clearance 2.0 against a combined radius of 1.4: fine.
    CHECK(segment_valid(mover, pose(0, 0, 0), pose(10, 0, 0), obstacles, 0.05));

    // Obstacle at y = 1: the midpoint of the sweep penetrates.
    obstacles[0].second = pose(5.0, 1.0, 0);
    CHECK_FALSE(segment_valid(mover, pose(0, 0, 0), pose(10, 0, 0), obstacles, 0.05));

    // The violation happens only mid-segment; the endpoints alone are free,
    // so a sweep that skipped interior samples would wrongly pass. Obstacle
    // blocks x in roughly [3.9, 6.1] while endpoints sit at x = 0 and 10.
    CHECK_FALSE(collide(Shape{mover}, pose(0, 0, 0), obstacles[0].first, obstacles[0].second));
    CHECK_FALSE(collide(Shape{mover}, pose(10, 0, 0), obstacles[0].first, obstacles[0].second));

    // Zero-length segment degenerates to a point check.
    CHECK(segment_valid(mover, pose(0, 0, 0), pose(0, 0, 0), obstacles, 0.05));
    CHECK_FALSE(segment_valid(mover, pose(5, 0, 0), pose(5, 0, 0), obstacles, 0.05));

    // Pure rotation of a polygon can also collide mid-sweep.
    ConvexPolygon bar{{{-2, -0.1}, {2, -0.1}, {2, 0.1}, {-2, 0.1}}};
    std::vector<Placed> post;
    post.emplace_back(Disc{0.2}, pose(0.0, 1.0, 0));
    CHECK_FALSE(segment_valid(bar, pose(0, 0, 0), pose(0, 0, kPi), post, 0.02));
}

TEST_CASE("aabb_of accounts for pose") {
    Aabb box = aabb_of(square(1.0), pose(3, 1, kPi / 4.0));
    double s = std::sqrt(2.0);
    CHECK(box.xmin == doctest::Approx(3 - s));
    CHECK(box.xmax == doctest::Approx(3 + s));
    CHECK(box.ymin == doctest::Approx(1 - s));
    CHECK(box.ymax == doctest::Approx(1 + s));

    Aabb db = aabb_of(Disc{0.5}, pose(-1, 2, 1.3));
    CHECK(db.xmin == doctest::Approx(-1.5));
    CHECK(db.ymax == doctest::Approx(2.5));

    Aabb merged = box;
    merged.expand(db);
    CHECK(merged.xmin == doctest::Approx(-1.5));
    CHECK(merged.xmax == doctest::Approx(3 + s));
    CHECK_FALSE(merged.empty());
}
