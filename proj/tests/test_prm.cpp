#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <variant>
#include <vector>

#include "mrrefine/prm.hpp"

using namespace mrrefine;
using geom::pose;

namespace {

std::string scn(const char* name) {
    return std::string(MRREFINE_SCENARIO_DIR) + "/" + name;
}

std::vector<Obstacle> walls_box(double xmax, double ymax) {
    // Four walls enclosing [0, xmax] x [0, ymax].
    std::vector<Obstacle> out;
    auto slab = [&](double x0, double y0, double x1, double y1) {
        out.push_back({geom::ConvexPolygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}},
                       pose(0, 0, 0), Obstacle::Fixed, 0});
    };
    slab(-0.5, -0.5, xmax + 0.5, 0.0);
    slab(-0.5, ymax, xmax + 0.5, ymax + 0.5);
    slab(-0.5, 0.0, 0.0, ymax);
    slab(xmax, 0.0, xmax + 0.5, ymax);
    return out;
}

double path_length(const Roadmap& rm, const std::vector<int>& path) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < path.size(); ++i)
        total += geom::se2_distance(rm.vertices[size_t(path[i])], rm.vertices[size_t(path[i + 1])]);
    return total;
}

}  // namespace

TEST_CASE("config_valid and sweep_valid honor the held body") {
    geom::Shape robot = geom::Disc{0.5};
    std::vector<Obstacle> obstacles;
    obstacles.push_back({geom::Disc{0.3}, pose(3.0, 0.9, 0), Obstacle::Movable, 2});

    // Robot alone clears the obstacle...
    CHECK(config_valid(robot, std::nullopt, pose(3.0, 0.0, 0), obstacles));
    // ...but a held disc at +0.9 ahead reaches it when facing up.
    HeldBody held{1, geom::Disc{0.3}, pose(0.9, 0.0, 0.0)};
    CHECK(config_valid(robot, held, pose(3.0, 0.0, 0), obstacles));
    CHECK_FALSE(config_valid(robot, held, pose(3.0, 0.0, geom::kPi / 2.0), obstacles));

    // The held object's own movable id is exempt (it is the cargo itself).
    obstacles[0].id = 1;
    CHECK(config_valid(robot, held, pose(3.0, 0.0, geom::kPi / 2.0), obstacles));
    obstacles[0].id = 2;

    // A pure rotation sweeps the cargo through the obstacle even though the
    // endpoints are free: facing +x and -x are fine, the arc is not.
    CHECK(config_valid(robot, held, pose(3.0, 0.0, 0), obstacles));
    CHECK(config_valid(robot, held, pose(3.0, 0.0, geom::kPi), obstacles));
    CHECK_FALSE(sweep_valid(robot, held, pose(3.0, 0.0, 0), pose(3.0, 0.0, geom::kPi),
                            obstacles, 0.025));
    // The same rotation with nothing nearby is fine.
    CHECK(sweep_valid(robot, held, pose(30.0, 0.0, 0), pose(30.0, 0.0, geom::kPi),
                      obstacles, 0.025));

    // Translation sweep through a blocking disc.
    CHECK_FALSE(sweep_valid(robot, std::nullopt, pose(0, 0.9, 0), pose(6, 0.9, 0), obstacles,
                            0.025));
    CHECK(sweep_valid(robot, std::nullopt, pose(0, -0.9, 0), pose(6, -0.9, 0), obstacles, 0.025));
}

TEST_CASE("build_roadmap connects start and goal in an open box") {
    RobotSpec robot;
    robot.id = 1;
    robot.body = geom::Disc{0.5};
    robot.reach = 1.5;
    auto obstacles = walls_box(10, 6);
    geom::Aabb bounds{-0.5, -0.5, 10.5, 6.5};
    geom::Pose2 start = pose(1, 1, 0), goal = pose(9, 5, 0);

    Rng rng = rng_for(5, "prm", 0, 0);
    Roadmap rm = build_roadmap(robot, start, goal, obstacles, std::nullopt, bounds,
                               PrmParams{}, rng);
    CHECK(rm.connected);
    REQUIRE(rm.vertices.size() >= 2);
    CHECK(rm.vertices[size_t(rm.start_index)].x == doctest::Approx(start.x));
    CHECK(rm.vertices[size_t(rm.goal_index)].x == doctest::Approx(goal.x));

    // Every vertex is collision-free and every edge passes the sweep.
    for (const auto& v : rm.vertices)
        CHECK(config_valid(robot.body, std::nullopt, v, obstacles));
    for (const auto& e : rm.edges) {
        CHECK(sweep_valid(robot.body, std::nullopt, rm.vertices[size_t(e.a)],
                          rm.vertices[size_t(e.b)], obstacles, PrmParams{}.check_step / 2.0));
        CHECK(e.length == doctest::Approx(
                  geom::se2_distance(rm.vertices[size_t(e.a)], rm.vertices[size_t(e.b)])));
    }

    // Adjacency mirrors the edge list symmetrically.
    size_t adj_count = 0;
    for (const auto& nbrs : rm.adjacency) adj_count += nbrs.size();
    CHECK(adj_count == 2 * rm.edges.size());

    // shortest_path walks existing edges from start to goal and is no longer
    // than any single-hop alternative.
    std::vector<int> path = shortest_path(rm);
    REQUIRE(path.size() >= 2);
    CHECK(path.front() == rm.start_index);
    CHECK(path.back() == rm.goal_index);
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        bool adjacent = false;
        for (const auto& [n, len] : rm.adjacency[size_t(path[i])])
            if (n == path[i + 1]) adjacent = true;
        CHECK(adjacent);
    }
    // Optimality within this roadmap: no single edge out of start that hits
    // the goal more cheaply than the returned path.
    for (const auto& [n, len] : rm.adjacency[size_t(rm.start_index)])
        if (n == rm.goal_index) CHECK(path_length(rm, path) <= len + 1e-9);

    // The metric lower bound holds.
    CHECK(path_length(rm, path) >= geom::se2_distance(start, goal) - 1e-9);
}

TEST_CASE("a dividing wall leaves the roadmap disconnected") {
    RobotSpec robot;
    robot.id = 1;
    robot.body = geom::Disc{0.5};
    robot.reach = 1.5;
    auto obstacles = walls_box(10, 6);
    // Full-height wall at x ~ 5.
    obstacles.push_back({geom::ConvexPolygon{{{4.9, 0.0}, {5.1, 0.0}, {5.1, 6.0}, {4.9, 6.0}}},
                         pose(0, 0, 0), Obstacle::Fixed, 0});
    geom::Aabb bounds{-0.5, -0.5, 10.5, 6.5};

    Rng rng = rng_for(5, "prm", 0, 1);
    Roadmap rm = build_roadmap(robot, pose(1, 1, 0), pose(9, 5, 0), obstacles, std::nullopt,
                               bounds, PrmParams{}, rng);
    CHECK_FALSE(rm.connected);
    CHECK(shortest_path(rm).empty());
}

TEST_CASE("action_obstacles excludes the cargo while carrying") {
    Scenario s = load_scenario_file(scn("spacious.scn"));
    TaskPlan p = load_plan_file(scn("spacious.plan"), s);
    PlacementResult pr = solve_placements(s, p, PlaceParams{}, 1);
    REQUIRE(std::holds_alternative<PlacementSolution>(pr));
    const PlacementSolution& placements = std::get<PlacementSolution>(pr);

    // Transit r1a1 sees three movable occupancies: both initial poses, plus
    // m2's future placement — nothing orders r1a1 against r2a2, so the cache
    // must conservatively keep it. m1's own future placement is excluded
    // because r1a1 strictly precedes the transfer that creates it.
    auto pick_ctx = action_obstacles(s, p.action("r1a1"), placements.cache);
    int movable_count = 0;
    int m1_count = 0, m2_count = 0;
    for (const Obstacle& o : pick_ctx) {
        if (o.kind == Obstacle::Movable) {
            ++movable_count;
            (o.id == 1 ? m1_count : m2_count) += 1;
        }
    }
    CHECK(movable_count == 3);
    CHECK(m1_count == 1);
    CHECK(m2_count == 2);
    CHECK(pick_ctx.size() == size_t(movable_count) + s.fixed.size());

    // Transfer r1a2: movable 1 is in hand, so it is not terrain.
    auto carry_ctx = action_obstacles(s, p.action("r1a2"), placements.cache);
    for (const Obstacle& o : carry_ctx) CHECK((o.kind != Obstacle::Movable || o.id != 1));
}

TEST_CASE("plan_individual returns a connected plan per action") {
    Scenario s = load_scenario_file(scn("spacious.scn"));
    TaskPlan p = load_plan_file(scn("spacious.plan"), s);
    PlacementResult pr = solve_placements(s, p, PlaceParams{}, 1);
    const PlacementSolution& placements = std::get<PlacementSolution>(pr);
    TransitionResult tr = solve_transitions(s, p, placements, TransitionParams{}, 1);
    REQUIRE(std::holds_alternative<TransitionSolution>(tr));
    const TransitionSolution& transitions = std::get<TransitionSolution>(tr);

    IndividualResult ir = plan_individual(s, p, placements, transitions, PrmParams{}, 1);
    REQUIRE(std::holds_alternative<IndividualPlan>(ir));
    const IndividualPlan& ip = std::get<IndividualPlan>(ir);
    REQUIRE(ip.per_robot.size() == 2);

    for (size_t ri = 0; ri < ip.per_robot.size(); ++ri) {
        REQUIRE(ip.per_robot[ri].size() == 2);  // transit + transfer
        geom::Pose2 expected_start = s.initial.robot_configs[ri];
        for (const ActionPlan& ap : ip.per_robot[ri]) {
            CHECK(ap.roadmap.connected);
            REQUIRE(!ap.path.empty());
            CHECK(ap.path.front() == ap.roadmap.start_index);
            CHECK(ap.path.back() == ap.roadmap.goal_index);

            // Actions chain: each roadmap starts where the previous ended.
            const geom::Pose2& start_v = ap.roadmap.vertices[size_t(ap.roadmap.start_index)];
            CHECK(start_v.x == doctest::Approx(expected_start.x));
            CHECK(start_v.y == doctest::Approx(expected_start.y));
            expected_start = ap.roadmap.vertices[size_t(ap.roadmap.goal_index)];

            // Transfers carry the manipulated movable, transits carry nothing.
            const AbstractAction& a = p.action(ap.action_id);
            CHECK((a.kind == ActionKind::Transfer) == ap.held.has_value());
            if (ap.held) CHECK(ap.held->movable == a.m);
        }
    }
}
