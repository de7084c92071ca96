#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <utility>
#include <vector>

#include "mrrefine/pipeline.hpp"

using namespace mrrefine;
using geom::pose;

namespace {

std::string scn(const char* name) {
    return std::string(MRREFINE_SCENARIO_DIR) + "/" + name;
}

std::pair<Scenario, TaskPlan> load(const char* base) {
    Scenario s = load_scenario_file(scn((std::string(base) + ".scn").c_str()));
    TaskPlan p = load_plan_file(scn((std::string(base) + ".plan").c_str()), s);
    return {std::move(s), std::move(p)};
}

// See test_transitions: the movable sits in a channel the robot can neither
// enter nor reach into.
const char* kNarrowJson = R"({
  "robots": [{"id": 1, "body": {"disc": 0.5}, "reach": 1.5}],
  "movables": [{"id": 1, "body": {"disc": 0.4}}],
  "fixed": [
    {"shape": {"poly": [[6.0, 1.5], [9.0, 1.5], [9.0, 2.25], [6.0, 2.25]]}, "pose": [0, 0, 0]},
    {"shape": {"poly": [[6.0, 3.15], [9.0, 3.15], [9.0, 4.0], [6.0, 4.0]]}, "pose": [0, 0, 0]}
  ],
  "regions": [
    {"id": 1, "poly": [[1.0, 1.0], [5.0, 1.0], [5.0, 5.0], [1.0, 5.0]], "pose": [0, 0, 0]},
    {"id": 2, "poly": [[6.0, 2.25], [9.0, 2.25], [9.0, 3.15], [6.0, 3.15]], "pose": [0, 0, 0]}
  ],
  "initial": {
    "robots": [[3.0, 3.0, 0.0]],
    "movables": [{"pose": [7.5, 2.7, 0.0], "region": 2}]
  }
})";

}  // namespace

TEST_CASE("mode names round-trip") {
    for (Mode m : {Mode::Full, Mode::Merge12, Mode::Merge123, Mode::Synchronous}) {
        auto back = parse_mode(to_string(m));
        REQUIRE(back.has_value());
        CHECK(*back == m);
    }
    CHECK_FALSE(parse_mode("warp").has_value());
}

TEST_CASE("full pipeline solves the swap and the result replays cleanly") {
    auto [s, p] = load("spacious");
    PipelineParams params;
    params.seed = 1;

    RunReport rep = refine(s, p, params);
    REQUIRE(rep.outcome == Outcome::Solved);
    REQUIRE(rep.solution.has_value());
    const Solution& sol = *rep.solution;

    CHECK(sol.induced.empty());
    CHECK(rep.makespan == doctest::Approx(sol.composite.makespan));
    // Both robots must at least cross between the regions (centers are 7
    // apart, two robots, two carries): crude but safe lower bound.
    CHECK(rep.makespan > 10.0);
    CHECK(rep.planning_time_s > 0.0);

    ValidationReport vr = validate_solution(s, p, sol);
    INFO((vr.violations.empty() ? std::string() : vr.violations.front()));
    CHECK(vr.ok());

    // Serialization round-trip preserves the solution byte-for-byte.
    Solution back = read_solution_string(write_solution(sol));
    CHECK(write_solution(back) == write_solution(sol));
    CHECK(validate_solution(s, p, back).ok());

    // Replayability: an identical run is byte-identical.
    RunReport rep2 = refine(s, p, params);
    REQUIRE(rep2.outcome == Outcome::Solved);
    CHECK(write_solution(*rep2.solution) == write_solution(sol));
}

TEST_CASE("one-slot scenario solves with the forced ordering") {
    auto [s, p] = load("oneslot");
    PipelineParams params;
    params.seed = 1;

    RunReport rep = refine(s, p, params);
    REQUIRE(rep.outcome == Outcome::Solved);
    REQUIRE(rep.solution.has_value());

    REQUIRE(rep.solution->induced.size() == 1);
    CHECK(rep.solution->induced[0] ==
          std::pair<std::string, std::string>{"r2a2", "r1a2"});

    ValidationReport vr = validate_solution(s, p, *rep.solution);
    INFO((vr.violations.empty() ? std::string() : vr.violations.front()));
    CHECK(vr.ok());
}

TEST_CASE("every mode produces a valid solution on the spacious swap") {
    auto [s, p] = load("spacious");
    for (Mode m : {Mode::Full, Mode::Merge12, Mode::Merge123, Mode::Synchronous}) {
        PipelineParams params;
        params.seed = 1;
        params.mode = m;
        RunReport rep = refine(s, p, params);
        INFO("mode ", to_string(m), ": ", rep.detail);
        REQUIRE(rep.outcome == Outcome::Solved);
        // One validator for all modes: the synchronous baseline's output is
        // judged by exactly the same asynchronous replay as the others.
        ValidationReport vr = validate_solution(s, p, *rep.solution);
        INFO((vr.violations.empty() ? std::string() : vr.violations.front()));
        CHECK(vr.ok());
        CHECK(rep.makespan > 0.0);
    }
}

TEST_CASE("an impossible grasp surfaces as Infeasible, not a throw") {
    Scenario s = load_scenario_string(kNarrowJson);
    TaskPlan p = load_plan_string(R"({
      "actions": [
        {"id": "r1a1", "kind": "transit",  "r": 1, "m": 1, "w": 0, "w2": 2},
        {"id": "r1a2", "kind": "transfer", "r": 1, "m": 1, "w": 2, "w2": 1}],
      "prec": []})",
                                  s);
    PipelineParams params;
    params.seed = 1;
    params.time_limit_s = 30.0;

    RunReport rep = refine(s, p, params);
    CHECK(rep.outcome != Outcome::Solved);
    CHECK_FALSE(rep.solution.has_value());
    CHECK(!rep.detail.empty());
}

TEST_CASE("the validator rejects corrupted solutions") {
    auto [s, p] = load("spacious");
    PipelineParams params;
    params.seed = 1;
    RunReport rep = refine(s, p, params);
    REQUIRE(rep.outcome == Outcome::Solved);
    const Solution& good = *rep.solution;

    SUBCASE("placement dragged outside its region") {
        Solution bad = good;
        bad.pose_of.at("r1a2") = pose(7.0, 0.6, 0.0);  // between the regions
        CHECK_FALSE(validate_solution(s, p, bad).ok());
    }
    SUBCASE("waypoint teleported into a wall") {
        Solution bad = good;
        REQUIRE(bad.composite.waypoints.size() >= 3);
        bad.composite.waypoints[1].configs[0] = pose(0.2, 4.0, 0.0);
        CHECK_FALSE(validate_solution(s, p, bad).ok());
    }
    SUBCASE("two robots steered through each other") {
        Solution bad = good;
        REQUIRE(bad.composite.waypoints.size() >= 3);
        bad.composite.waypoints[1].configs[0] = bad.composite.waypoints[1].configs[1];
        CHECK_FALSE(validate_solution(s, p, bad).ok());
    }
    SUBCASE("a firing reordered against prec") {
        Solution bad = good;
        // Claim r1a2 fired before its own pick r1a1.
        for (auto& wp : bad.composite.waypoints) wp.fired.clear();
        bad.composite.waypoints.back().fired = {"r1a2", "r1a1", "r2a1", "r2a2"};
        CHECK_FALSE(validate_solution(s, p, bad).ok());
    }
}
