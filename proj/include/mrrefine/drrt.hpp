#pragma once

// Step 4: coordinated search over the implicit tensor product of the
// per-action roadmaps. Robots traverse their current roadmap freely;
// completing an action (advancing to the next roadmap) is gated on its
// ordering predecessors and fires atomically at vertex creation.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mrrefine/prm.hpp"

namespace mrrefine {

/// One action of one robot as seen by the coordinated search: a roadmap
/// whose goal vertex is the transition configuration, the ordering
/// predecessors gating its completion, and the body carried while on it.
struct Stage {
    std::string action_id;
    const Roadmap* roadmap = nullptr;
    std::vector<std::string> preds;
    std::optional<HeldBody> held;
    // Static obstacle context of the action; lets the search validate
    // composite segments that do not follow roadmap edges.
    const std::vector<Obstacle>* obstacles = nullptr;
};

struct RobotTrack {
    geom::Shape body;
    std::vector<Stage> stages;
};

struct DrrtParams {
    int max_iters = 20000;  // primary termination criterion; keeps runs replayable
    double goal_bias = 0.2;
    double check_step = 0.05;
    // Safety valve for adversarial inputs where iterations get expensive;
    // generous enough that replayable runs finish well before it binds.
    double time_limit_s = 30.0;
};

struct Waypoint {
    std::vector<geom::Pose2> configs;  // per robot
    std::vector<std::string> fired;    // actions completed on arrival, firing order
    double duration = 0.0;             // travel time from the previous waypoint
};

struct CompositeSolution {
    std::vector<Waypoint> waypoints;
    double makespan = 0.0;  // sum of waypoint durations
};

/// Configuration of a robot given its stage counter and roadmap vertex;
/// a finished robot rests at its last goal configuration.
geom::Pose2 track_config(const RobotTrack& track, int stage, int vertex);

/// True iff the stage's ordering predecessors are all in `progress`.
bool gate_allows(const Stage& stage, const std::set<std::string>& progress);

/// Fires every completable action to a fixpoint: any robot sitting at its
/// current roadmap goal whose gate passes advances to the next stage
/// (entering at that roadmap's start vertex). Returns fired ids in order.
std::vector<std::string> fire_fixpoint(const std::vector<RobotTrack>& tracks,
                                       std::vector<int>& stage, std::vector<int>& vertex,
                                       std::set<std::string>& progress);

/// Direction oracle: per robot, the adjacent roadmap vertex (or the current
/// one) closest to the per-robot target configuration. Finished robots stay.
std::vector<int> oracle_expand(const std::vector<RobotTrack>& tracks,
                               const std::vector<int>& stage, const std::vector<int>& vertex,
                               const std::vector<geom::Pose2>& target);

/// Robot-robot (and held-body) clearance along a synchronized composite
/// move: each robot travels at unit metric speed and then waits, so faster
/// robots park at their destination while slower ones finish.
bool edge_valid_composite(const std::vector<RobotTrack>& tracks, const std::vector<int>& stage,
                          const std::vector<geom::Pose2>& from,
                          const std::vector<geom::Pose2>& to, double check_step);

/// Runs the coordinated search. Returns the first execution reaching the
/// state where every robot has completed all of its stages, or nullopt
/// after max_iters expansions.
std::optional<CompositeSolution> drrt_search(const std::vector<RobotTrack>& tracks,
                                             const geom::Aabb& bounds, const DrrtParams& params,
                                             Rng& rng);

}  // namespace mrrefine
