#pragma once

// Scenario data model, JSON loading, and initial-state validation.
// Immutable after load; freely shareable across threads.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrrefine/geom.hpp"

namespace mrrefine {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RobotSpec {
    int id = 0;           // 1-based
    geom::Shape body;     // disc
    double reach = 0.0;   // max grasp offset length, meters
    double radius() const { return geom::bounding_radius(body); }
};

struct MovableSpec {
    int id = 0;
    geom::Shape body;
};

struct RegionSpec {
    int id = 0;
    geom::ConvexPolygon polygon;
    geom::Pose2 pose;
};

struct FixedObject {
    geom::Shape shape;
    geom::Pose2 pose;
};

struct InitialState {
    std::vector<geom::Pose2> robot_configs;   // by robot index
    std::vector<geom::Pose2> movable_poses;   // by movable index
    std::vector<int> movable_regions;         // declared region id per movable
};

/// A movable held by a robot: gamma maps robot frame -> object frame,
/// so the object pose is compose(robot config, gamma).
struct HeldGrasp {
    int movable = 0;  // id
    geom::Pose2 gamma;
};

struct Scenario {
    std::vector<RobotSpec> robots;
    std::vector<MovableSpec> movables;
    std::vector<FixedObject> fixed;
    std::vector<RegionSpec> regions;
    InitialState initial;

    const RobotSpec& robot(int id) const { return robots.at(size_t(id - 1)); }
    const MovableSpec& movable(int id) const { return movables.at(size_t(id - 1)); }
    const RegionSpec& region(int id) const { return regions.at(size_t(id - 1)); }

    /// Envelope of fixed shapes and region polygons; sampling domain for
    /// placements and roadmaps.
    geom::Aabb bounds() const;
};

/// Parses and fully validates a scenario. Throws ParseError on malformed or
/// unknown-key input, ValidationError (naming entities) on invariant breaks.
Scenario load_scenario(std::istream& in);
Scenario load_scenario_string(const std::string& text);
Scenario load_scenario_file(const std::string& path);

/// Serializes back to the file format; load(write(s)) round-trips.
std::string write_scenario(const Scenario& s);

/// Composite free-space test: no pairwise collision among robot bodies,
/// held objects (posed rigidly with their robot), unheld movables, and fixed
/// shapes; each robot is exempt from collision with its own held object.
/// `held` maps robot id -> grasp and must be injective over movables.
bool in_free_space(const Scenario& scene, std::span<const geom::Pose2> robot_configs,
                   std::span<const geom::Pose2> movable_poses,
                   const std::map<int, HeldGrasp>& held,
                   std::string* first_violation = nullptr);

}  // namespace mrrefine
