#pragma once

// Step 3: per-action probabilistic roadmaps with Hold semantics, other
// robots absent, and shortest individual paths.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mrrefine/transitions.hpp"

namespace mrrefine {

struct Obstacle {
    geom::Shape shape;
    geom::Pose2 pose;
    enum Kind { Fixed, Movable } kind = Fixed;
    int id = 0;
};

/// Object rigidly attached to the robot: world pose = compose(config, gamma).
struct HeldBody {
    int movable = 0;
    geom::Shape shape;
    geom::Pose2 gamma;
};

struct Roadmap {
    std::vector<geom::Pose2> vertices;
    struct Edge {
        int a = 0, b = 0;
        double length = 0.0;  // translation + 0.5 * |rotation|
    };
    std::vector<Edge> edges;
    std::vector<std::vector<std::pair<int, double>>> adjacency;  // (vertex, length)
    int start_index = 0;
    int goal_index = 1;
    bool connected = false;
};

/// Conservative swept check of robot body (plus held object) from one pose
/// to another: samples so no body point moves more than max_disp between
/// consecutive checks. The held object's movable id is never an obstacle.
bool sweep_valid(const geom::Shape& body, const std::optional<HeldBody>& held,
                 const geom::Pose2& from, const geom::Pose2& to,
                 const std::vector<Obstacle>& obstacles, double max_disp);

bool config_valid(const geom::Shape& body, const std::optional<HeldBody>& held,
                  const geom::Pose2& q, const std::vector<Obstacle>& obstacles);

struct PrmParams {
    int n_samples = 200;
    int k_neighbors = 10;
    double check_step = 0.05;  // per-body displacement bound is check_step / 2
    double time_limit_s = 120.0;
};

/// Uniform sampling over `bounds` filtered by collision, start and goal
/// included, k-nearest connection attempts. `connected` reports whether
/// start and goal ended up in the same component.
Roadmap build_roadmap(const RobotSpec& robot, const geom::Pose2& start, const geom::Pose2& goal,
                      const std::vector<Obstacle>& obstacles, const std::optional<HeldBody>& held,
                      const geom::Aabb& bounds, const PrmParams& params, Rng& rng);

/// Shortest start-to-goal vertex path by uniform-cost search; empty when
/// disconnected.
std::vector<int> shortest_path(const Roadmap& rm);

struct ActionPlan {
    std::string action_id;
    Roadmap roadmap;
    std::vector<int> path;  // vertex indices, start..goal
    std::optional<HeldBody> held;
    std::vector<Obstacle> obstacles;  // context used to build the roadmap
};

struct IndividualPlan {
    std::vector<std::vector<ActionPlan>> per_robot;
};

using IndividualResult = std::variant<IndividualPlan, StepFailure>;

/// Obstacle context for one action: all fixed shapes plus the cached movable
/// occupancies (the manipulated object is excluded while held).
std::vector<Obstacle> action_obstacles(const Scenario& scene, const AbstractAction& a,
                                       const CollisionCache& cache);

IndividualResult plan_individual(const Scenario& scene, const TaskPlan& plan,
                                 const PlacementSolution& placements,
                                 const TransitionSolution& transitions, const PrmParams& params,
                                 uint64_t seed, uint64_t attempt = 0);

}  // namespace mrrefine
