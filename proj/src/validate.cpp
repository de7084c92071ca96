// Independent replay of a solution. The collision, containment and
// kinematics routines here are deliberately written from scratch rather
// than calling the planner's geometry kernel, and collisions count only
// beyond a penetration slack so the replay cannot blame planner
// discretization for contact-level noise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "mrrefine/pipeline.hpp"

namespace mrrefine {

namespace {

constexpr double kSlack = 0.03;    // penetration depth tolerated as noise
constexpr double kSweep = 0.01;    // max body-point motion between re-checks
constexpr double kPoseTol = 1e-6;  // equality tolerance for replayed values

struct Pt {
    double x = 0.0, y = 0.0;
};

double ang_diff(double from, double to) {
    return std::atan2(std::sin(to - from), std::cos(to - from));
}

geom::Pose2 lerp_pose(const geom::Pose2& a, const geom::Pose2& b, double t) {
    geom::Pose2 p;
    p.x = a.x + (b.x - a.x) * t;
    p.y = a.y + (b.y - a.y) * t;
    p.theta = a.theta + ang_diff(a.theta, b.theta) * t;
    return p;
}

geom::Pose2 mul(const geom::Pose2& a, const geom::Pose2& b) {
    const double c = std::cos(a.theta), s = std::sin(a.theta);
    geom::Pose2 r;
    r.x = a.x + c * b.x - s * b.y;
    r.y = a.y + s * b.x + c * b.y;
    r.theta = a.theta + b.theta;
    return r;
}

geom::Pose2 inv(const geom::Pose2& a) {
    const double c = std::cos(a.theta), s = std::sin(a.theta);
    geom::Pose2 r;
    r.x = -(c * a.x + s * a.y);
    r.y = -(-s * a.x + c * a.y);
    r.theta = -a.theta;
    return r;
}

double metric_dist(const geom::Pose2& a, const geom::Pose2& b) {
    return std::hypot(b.x - a.x, b.y - a.y) + 0.5 * std::abs(ang_diff(a.theta, b.theta));
}

/// A body in world coordinates.
struct WBody {
    bool is_disc = true;
    double cx = 0.0, cy = 0.0, r = 0.0;
    std::vector<Pt> pts;  // convex, CCW
    int robot = 0;        // owning robot id, 0 = none
    int movable = 0;      // movable id, 0 = none
    bool moving = false;
};

WBody place(const geom::Shape& shape, const geom::Pose2& pose) {
    WBody b;
    if (const auto* d = std::get_if<geom::Disc>(&shape)) {
        b.is_disc = true;
        b.cx = pose.x;
        b.cy = pose.y;
        b.r = d->radius;
    } else {
        const auto& poly = std::get<geom::ConvexPolygon>(shape);
        b.is_disc = false;
        const double c = std::cos(pose.theta), s = std::sin(pose.theta);
        for (const geom::Vec2& v : poly.vertices)
            b.pts.push_back({pose.x + c * v.x - s * v.y, pose.y + s * v.x + c * v.y});
    }
    return b;
}

double body_radius(const geom::Shape& shape) {
    if (const auto* d = std::get_if<geom::Disc>(&shape)) return d->radius;
    double r = 0.0;
    for (const geom::Vec2& v : std::get<geom::ConvexPolygon>(shape).vertices)
        r = std::max(r, std::hypot(v.x, v.y));
    return r;
}

/// Signed distance from a point to a convex polygon: negative inside.
double point_poly_sdist(Pt p, const std::vector<Pt>& poly) {
    double max_out = -std::numeric_limits<double>::max();
    double min_edge = std::numeric_limits<double>::max();
    bool inside = true;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Pt a = poly[i], b = poly[(i + 1) % n];
        const double ex = b.x - a.x, ey = b.y - a.y;
        const double len = std::hypot(ex, ey);
        // outward normal of a CCW edge
        const double nx = ey / len, ny = -ex / len;
        const double d = (p.x - a.x) * nx + (p.y - a.y) * ny;
        if (d > 0.0) inside = false;
        max_out = std::max(max_out, d);
        // distance to the segment itself
        const double t = std::clamp(((p.x - a.x) * ex + (p.y - a.y) * ey) / (len * len), 0.0, 1.0);
        min_edge = std::min(min_edge, std::hypot(p.x - (a.x + t * ex), p.y - (a.y + t * ey)));
    }
    return inside ? -min_edge : min_edge;
}

std::pair<double, double> project(const WBody& b, double nx, double ny) {
    if (b.is_disc) {
        const double c = b.cx * nx + b.cy * ny;
        return {c - b.r, c + b.r};
    }
    double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (const Pt& p : b.pts) {
        const double v = p.x * nx + p.y * ny;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

/// Penetration depth; <= 0 means separated or touching.
double penetration(const WBody& a, const WBody& b) {
    if (a.is_disc && b.is_disc)
        return a.r + b.r - std::hypot(a.cx - b.cx, a.cy - b.cy);
    if (a.is_disc != b.is_disc) {
        const WBody& disc = a.is_disc ? a : b;
        const WBody& poly = a.is_disc ? b : a;
        return disc.r - point_poly_sdist({disc.cx, disc.cy}, poly.pts);
    }
    double pen = std::numeric_limits<double>::max();
    for (const WBody* w : {&a, &b}) {
        const size_t n = w->pts.size();
        for (size_t i = 0; i < n; ++i) {
            const Pt p = w->pts[i], q = w->pts[(i + 1) % n];
            const double ex = q.x - p.x, ey = q.y - p.y;
            const double len = std::hypot(ex, ey);
            const double nx = ey / len, ny = -ex / len;
            const auto [alo, ahi] = project(a, nx, ny);
            const auto [blo, bhi] = project(b, nx, ny);
            pen = std::min(pen, std::min(ahi, bhi) - std::max(alo, blo));
            if (pen <= 0.0) return pen;
        }
    }
    return pen;
}

/// Closed containment of a shape in a region polygon, with tolerance.
bool contained(const geom::Shape& shape, const geom::Pose2& pose, const RegionSpec& region,
               double tol) {
    const WBody reg = place(geom::Shape(region.polygon), geom::Pose2(region.pose));
    if (const auto* d = std::get_if<geom::Disc>(&shape))
        return point_poly_sdist({pose.x, pose.y}, reg.pts) <= -(d->radius - tol);
    const WBody b = place(shape, pose);
    for (const Pt& p : b.pts)
        if (point_poly_sdist(p, reg.pts) > tol) return false;
    return true;
}

std::string pair_name(const WBody& a, const WBody& b) {
    auto name = [](const WBody& w) {
        if (w.robot > 0 && w.movable > 0)
            return "held m" + std::to_string(w.movable) + " of r" + std::to_string(w.robot);
        if (w.robot > 0) return "r" + std::to_string(w.robot);
        if (w.movable > 0) return "m" + std::to_string(w.movable);
        return std::string("fixed");
    };
    return name(a) + " vs " + name(b);
}

}  // namespace

ValidationReport validate_solution(const Scenario& scene, const TaskPlan& plan,
                                   const Solution& sol) {
    ValidationReport rep;
    auto fail = [&](const std::string& msg) { rep.violations.push_back(msg); };

    const size_t nr = scene.robots.size();
    if (sol.composite.waypoints.empty()) {
        fail("empty composite path");
        return rep;
    }
    for (size_t wi = 0; wi < sol.composite.waypoints.size(); ++wi)
        if (sol.composite.waypoints[wi].configs.size() != nr) {
            fail("waypoint " + std::to_string(wi) + ": wrong robot count");
            return rep;
        }

    OrderingSet prec = plan.prec;
    for (const auto& [b, a] : sol.induced) {
        try {
            prec = prec.with_edge(b, a);
        } catch (const CycleError&) {
            fail("induced orderings create a cycle: " + b + " -> " + a);
            return rep;
        }
    }
    const PrecClosure closure(prec);

    // --- replayed state ---
    std::vector<geom::Pose2> movable_pose = scene.initial.movable_poses;
    std::vector<int> held_by(scene.movables.size(), 0);       // robot id or 0
    std::vector<std::optional<HeldGrasp>> holding(nr);        // per robot index
    std::set<std::string> fired;
    std::vector<size_t> next_idx(nr, 0);

    for (size_t ri = 0; ri < nr; ++ri) {
        const geom::Pose2& q0 = sol.composite.waypoints[0].configs[ri];
        const geom::Pose2& s0 = scene.initial.robot_configs[ri];
        if (metric_dist(q0, s0) > kPoseTol)
            fail("waypoint 0: robot " + std::to_string(ri + 1) + " does not start at s0");
    }

    auto bodies_at = [&](const std::vector<geom::Pose2>& q,
                         const std::vector<bool>& moving) {
        std::vector<WBody> out;
        for (size_t ri = 0; ri < nr; ++ri) {
            WBody b = place(scene.robots[ri].body, q[ri]);
            b.robot = static_cast<int>(ri) + 1;
            b.moving = moving[ri];
            out.push_back(std::move(b));
            if (holding[ri]) {
                WBody h = place(scene.movable(holding[ri]->movable).body,
                                mul(q[ri], holding[ri]->gamma));
                h.robot = static_cast<int>(ri) + 1;
                h.movable = holding[ri]->movable;
                h.moving = moving[ri];
                out.push_back(std::move(h));
            }
        }
        for (size_t mi = 0; mi < scene.movables.size(); ++mi) {
            if (held_by[mi] != 0) continue;
            WBody b = place(scene.movables[mi].body, movable_pose[mi]);
            b.movable = static_cast<int>(mi) + 1;
            out.push_back(std::move(b));
        }
        for (const FixedObject& f : scene.fixed) out.push_back(place(f.shape, f.pose));
        return out;
    };

    auto check_bodies = [&](const std::vector<WBody>& bodies, const std::string& where) {
        for (size_t i = 0; i < bodies.size(); ++i)
            for (size_t j = i + 1; j < bodies.size(); ++j) {
                const WBody& a = bodies[i];
                const WBody& b = bodies[j];
                if (!a.moving && !b.moving) continue;
                if (a.robot != 0 && a.robot == b.robot) continue;  // robot vs own held
                if (penetration(a, b) > kSlack) {
                    fail(where + ": collision " + pair_name(a, b));
                    return false;
                }
            }
        return true;
    };

    double total = 0.0;
    for (size_t wi = 0; wi < sol.composite.waypoints.size(); ++wi) {
        const Waypoint& wp = sol.composite.waypoints[wi];
        const std::string where = "waypoint " + std::to_string(wi);

        if (wi > 0) {
            const Waypoint& prev = sol.composite.waypoints[size_t(wi - 1)];
            std::vector<double> dist(nr);
            std::vector<bool> moving(nr);
            double max_disp = 0.0;
            for (size_t ri = 0; ri < nr; ++ri) {
                dist[ri] = metric_dist(prev.configs[ri], wp.configs[ri]);
                moving[ri] = dist[ri] > 0.0;
                if (dist[ri] > wp.duration + 1e-9)
                    fail(where + ": robot " + std::to_string(ri + 1) +
                         " exceeds unit speed (needs " + std::to_string(dist[ri]) + " in " +
                         std::to_string(wp.duration) + ")");
                double lever = body_radius(scene.robots[ri].body);
                if (holding[ri])
                    lever = std::max(lever,
                                     std::hypot(holding[ri]->gamma.x, holding[ri]->gamma.y) +
                                         body_radius(scene.movable(holding[ri]->movable).body));
                const double trans =
                    std::hypot(wp.configs[ri].x - prev.configs[ri].x,
                               wp.configs[ri].y - prev.configs[ri].y);
                const double rot =
                    std::abs(ang_diff(prev.configs[ri].theta, wp.configs[ri].theta));
                max_disp = std::max(max_disp, trans + rot * lever);
            }
            const int steps = std::max(1, static_cast<int>(std::ceil(max_disp / kSweep)));
            bool segment_ok = true;
            for (int k = 0; k <= steps && segment_ok; ++k) {
                const double t = wp.duration * k / steps;
                std::vector<geom::Pose2> q(nr);
                for (size_t ri = 0; ri < nr; ++ri)
                    q[ri] = dist[ri] <= 0.0
                                ? wp.configs[ri]
                                : lerp_pose(prev.configs[ri], wp.configs[ri],
                                            std::min(1.0, t / dist[ri]));
                segment_ok = check_bodies(bodies_at(q, moving), where);
            }
            total += wp.duration;
        }

        // --- fire the listed transitions at this waypoint, in order ---
        for (const std::string& id : wp.fired) {
            if (!plan.index_of.count(id)) {
                fail(where + ": unknown action " + id);
                continue;
            }
            const AbstractAction& a = plan.action(id);
            const size_t ri = size_t(a.r - 1);
            if (fired.count(id)) {
                fail(where + ": action " + id + " fired twice");
                continue;
            }
            if (next_idx[ri] >= plan.per_robot[ri].size() ||
                plan.actions[size_t(plan.per_robot[ri][next_idx[ri]])].id != id)
                fail(where + ": action " + id + " out of robot order");
            for (const auto& [before, after] : prec.edges())
                if (after == id && !fired.count(before))
                    fail(where + ": action " + id + " fired before predecessor " + before);

            const geom::Pose2 q = wp.configs[ri];
            const auto cit = sol.config_of.find(id);
            if (cit == sol.config_of.end())
                fail(where + ": no transition configuration recorded for " + id);
            else if (metric_dist(q, cit->second) > kPoseTol)
                fail(where + ": robot not at the recorded transition configuration of " + id);

            if (a.kind == ActionKind::Transit) {
                if (holding[ri]) fail(where + ": " + id + " picks while already holding");
                if (held_by[size_t(a.m - 1)] != 0)
                    fail(where + ": " + id + " grasps m" + std::to_string(a.m) +
                         " already held by r" + std::to_string(held_by[size_t(a.m - 1)]));
                const geom::Pose2 p = movable_pose[size_t(a.m - 1)];
                if (!contained(scene.movable(a.m).body, p, scene.region(a.w2), 1e-6))
                    fail(where + ": pick target m" + std::to_string(a.m) +
                         " not in region w" + std::to_string(a.w2));
                const geom::Pose2 gamma = mul(inv(q), p);
                if (std::hypot(gamma.x, gamma.y) > scene.robots[ri].reach + 1e-6)
                    fail(where + ": grasp of " + id + " exceeds reach");
                const auto git = sol.grasp_of.find(id);
                if (git == sol.grasp_of.end())
                    fail(where + ": no grasp recorded for " + id);
                else if (metric_dist(gamma, git->second.gamma) > kPoseTol)
                    fail(where + ": kinematics mismatch for grasp of " + id);
                holding[ri] = HeldGrasp{a.m, gamma};
                held_by[size_t(a.m - 1)] = a.r;
            } else {
                if (!holding[ri] || holding[ri]->movable != a.m) {
                    fail(where + ": " + id + " places m" + std::to_string(a.m) +
                         " without holding it");
                } else {
                    const geom::Pose2 p = mul(q, holding[ri]->gamma);
                    if (!contained(scene.movable(a.m).body, p, scene.region(a.w2), 1e-6))
                        fail(where + ": placement of " + id + " not contained in w" +
                             std::to_string(a.w2));
                    const auto pit = sol.pose_of.find(id);
                    if (pit == sol.pose_of.end())
                        fail(where + ": no placement recorded for " + id);
                    else if (metric_dist(p, pit->second) > kPoseTol)
                        fail(where + ": kinematics mismatch for placement of " + id);
                    movable_pose[size_t(a.m - 1)] = p;
                    held_by[size_t(a.m - 1)] = 0;
                    holding[ri].reset();
                }
            }
            fired.insert(id);
            ++next_idx[ri];
        }

        // After any state change, static bodies must still be clear.
        if (!wp.fired.empty() || wi == 0) {
            std::vector<bool> moving(nr, true);  // treat everything as subject to checks
            std::vector<WBody> bodies = bodies_at(wp.configs, moving);
            for (WBody& b : bodies) b.moving = true;
            check_bodies(bodies, where + " (post-transition state)");
        }
        if (rep.violations.size() > 50) {
            fail("... further checks skipped");
            return rep;
        }
    }

    for (const AbstractAction& a : plan.actions)
        if (!fired.count(a.id)) fail("action " + a.id + " never fired");
    if (std::abs(total - sol.makespan) > 1e-6)
        fail("makespan mismatch: recorded " + std::to_string(sol.makespan) +
             ", replayed " + std::to_string(total));
    return rep;
}

}  // namespace mrrefine
