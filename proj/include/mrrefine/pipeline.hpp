#pragma once

// Orchestration of the four refinement steps with backtracking and time
// limits, the merged-step ablation modes, the synchronous baseline, solution
// file I/O, and the independent solution validator.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrrefine/drrt.hpp"

namespace mrrefine {

enum class Mode { Full, Merge12, Merge123, Synchronous };
enum class Policy { Stop, Backtrack, ExtendSamples };

std::string to_string(Mode m);
std::optional<Mode> parse_mode(const std::string& s);

struct PipelineParams {
    int n_place = 10;
    int n_grasp = 12;
    int n_prm = 200;
    int k_prm = 10;
    double check_step = 0.05;
    double step_time_limit_s = 120.0;
    double time_limit_s = 600.0;
    double drrt_time_limit_s = 30.0;  // per attempt; the iteration cap binds first
    int drrt_iters = 20000;
    double goal_bias = 0.2;
    Policy policy = Policy::Backtrack;
    Mode mode = Mode::Full;
    uint64_t seed = 0;
};

/// Complete variable assignment plus the executable composite path.
struct Solution {
    uint64_t seed = 0;
    Mode mode = Mode::Full;
    std::map<std::string, geom::Pose2> pose_of;    // transfer id -> placement
    std::map<std::string, geom::Pose2> config_of;  // action id -> transition config
    std::map<std::string, Grasp> grasp_of;         // pick transit id -> grasp
    std::vector<std::pair<std::string, std::string>> induced;
    CompositeSolution composite;
    double makespan = 0.0;
    PipelineParams params;
};

std::string write_solution(const Solution& sol);
Solution read_solution(std::istream& in);
Solution read_solution_string(const std::string& text);
Solution read_solution_file(const std::string& path);

enum class Outcome { Solved, Infeasible, Timeout };

struct RunReport {
    Outcome outcome = Outcome::Infeasible;
    std::string detail;
    double planning_time_s = 0.0;
    double step_time_s[4] = {0.0, 0.0, 0.0, 0.0};
    int backtracks = 0;
    double makespan = 0.0;
    std::optional<Solution> solution;
};

/// Runs the configured mode end to end. All failures are encoded in the
/// report outcome; nothing is thrown for planning failures.
RunReport refine(const Scenario& scene, const TaskPlan& plan, const PipelineParams& params);

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Replays a solution against the scenario and task plan using collision,
/// containment and kinematics routines written independently of the
/// planner's geometry kernel. Motion is re-swept densely (0.01 spacing) and
/// collisions count only beyond a 0.03 penetration slack, so planner
/// discretization can never be blamed on the replay.
ValidationReport validate_solution(const Scenario& scene, const TaskPlan& plan,
                                   const Solution& sol);

}  // namespace mrrefine
