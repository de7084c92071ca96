#pragma once

// Step 2: assign grasps and transition configurations for every pick/place
// pair, compatible with the Step-1 poses, ignoring other robots and motion.

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mrrefine/placement.hpp"

namespace mrrefine {

/// gamma maps the robot frame to the object frame: object pose =
/// compose(robot config, gamma). |translation(gamma)| <= robot reach.
struct Grasp {
    int r = 0;
    int m = 0;
    geom::Pose2 gamma;
};

struct TransitionSolution {
    std::map<std::string, Grasp> grasp_of;        // pick transit id -> grasp
    std::map<std::string, geom::Pose2> config_of; // action id -> transition config
    std::map<std::string, int> grasp_index_of;    // pick transit id -> accepted sample index
};

struct StepFailure {
    std::string action_id;
    std::string cause;
    std::vector<int> blockers;  // movable ids observed blocking
    bool timed_out = false;
};

using TransitionResult = std::variant<TransitionSolution, StepFailure>;

struct TransitionParams {
    int n_grasp = 12;
    double time_limit_s = 120.0;
};

/// Contact-to-reach ring sampling: the robot center lands at a distance
/// uniform in [contact, reach] from the object center (contact = sum of
/// bounding radii), approach angle uniform in (-pi, pi], robot facing the
/// object.
std::vector<Grasp> sample_grasps(const RobotSpec& robot, const MovableSpec& movable, Rng& rng,
                                 int n);

/// The unique config q with compose(q, grasp.gamma) = object_pose.
geom::Pose2 solve_kin(const Grasp& grasp, const geom::Pose2& object_pose);

/// Grasp sample indices to skip, keyed by pick transit id (backtracking).
using GraspTabu = std::map<std::string, std::set<int>>;

TransitionResult solve_transitions(const Scenario& scene, const TaskPlan& plan,
                                   const PlacementSolution& placements,
                                   const TransitionParams& params, uint64_t seed,
                                   const GraspTabu* tabu = nullptr);

}  // namespace mrrefine
