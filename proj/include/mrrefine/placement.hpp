#pragma once

// Step 1: assign all placement pose variables by region-wise sampling,
// induce minimal extra orderings, and build the collision cache used by
// the later steps.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "mrrefine/rng.hpp"
#include "mrrefine/task.hpp"

namespace mrrefine {

struct NoSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One movable occupancy relevant to an action, at its context pose.
struct CacheEntry {
    int movable = 0;  // id
    geom::Pose2 pose;
    int epoch_seq = 0;
};

/// Per action id: the movable occupancies that can be co-present with the
/// action under the final orderings (conservative superset). Fixed shapes
/// are always relevant and are implicit.
struct CollisionCache {
    std::map<std::string, std::vector<CacheEntry>> relevant;
};

struct PlacementSolution {
    std::map<std::string, geom::Pose2> pose_of;  // transfer action id -> placement
    std::vector<std::pair<std::string, std::string>> induced;
    CollisionCache cache;
    /// Chosen sample indices per region id (tabu key for backtracking).
    std::map<int, std::vector<int>> chosen;
};

struct Infeasible {
    std::string reason;
    bool timed_out = false;
};

using PlacementResult = std::variant<PlacementSolution, Infeasible>;

struct PlaceParams {
    int n_place = 10;
    double time_limit_s = 120.0;
    bool extend_samples = false;  // double n_place on exhaustion, up to the limit
};

/// Uniform rejection sampling of contained poses: translation uniform over
/// the region interior, theta uniform in (-pi, pi] for polygons and 0 for
/// discs. Throws NoSamples after 100*n failed trials.
std::vector<geom::Pose2> sample_placement(const RegionSpec& region, const geom::Shape& body,
                                          Rng& rng, int n);

/// Previously failed sample-index combinations, keyed by region id.
using PlacementTabu = std::map<int, std::set<std::vector<int>>>;

PlacementResult solve_placements(const Scenario& scene, const TaskPlan& plan,
                                 const PlaceParams& params, uint64_t seed,
                                 const PlacementTabu* tabu = nullptr);

// ---- internals shared with the merged ablation modes ----

/// A placement variable: the transfer that adds a movable`s epoch to a region.
struct RegionVar {
    const Epoch* epoch = nullptr;
    std::string add_action;
    std::vector<geom::Pose2> samples;
    std::vector<char> clear_of_fixed;  // per sample
};

struct RegionProblem {
    int region = 0;  // id
    std::vector<RegionVar> vars;
    std::vector<const Epoch*> initial;  // occupants from s0, poses fixed
};

/// Builds the per-region subproblems (samples drawn deterministically from
/// the seed). Throws NoSamples when some variable cannot be sampled.
std::vector<RegionProblem> build_region_problems(const Scenario& scene, const TaskPlan& plan,
                                                 const std::vector<Epoch>& epochs,
                                                 int n_place, uint64_t seed);

struct ComboOutcome {
    bool workable = false;  // all violations can be ordered away
    std::vector<std::pair<std::string, std::string>> edges;
};

/// Evaluates one sample-index combination for a region: finds co-presence
/// collisions under `prec` and, if any, the first acyclic remove-before-add
/// edge set resolving all of them.
ComboOutcome evaluate_combination(const Scenario& scene, const RegionProblem& rp,
                                  const std::vector<int>& combo, const OrderingSet& prec);

/// Collision cache from final orderings (given + induced) and chosen poses.
CollisionCache build_cache(const Scenario& scene, const TaskPlan& plan,
                           const std::vector<Epoch>& epochs, const OrderingSet& prec_final,
                           const std::map<std::string, geom::Pose2>& pose_of);

/// Pose of an epoch: s0 pose for initial occupancy, otherwise the assigned
/// placement of its add action.
geom::Pose2 epoch_pose(const Scenario& scene, const Epoch& e,
                       const std::map<std::string, geom::Pose2>& pose_of);

}  // namespace mrrefine
