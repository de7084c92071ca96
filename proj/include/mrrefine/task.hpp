#pragma once

// Abstract actions, the partial-order constraint DAG, per-region event
// sequences and per-movable occupancy epochs.

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrrefine/scene.hpp"

namespace mrrefine {

struct CycleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ActionKind { Transit, Transfer };

/// Ground mode instance. Transit: robot r moves from w to w2 with an empty
/// hand to grasp m located in w2. Transfer: robot r holding m in w moves to
/// place it in w2. Transit ids use w = 0 for "robot start".
struct AbstractAction {
    std::string id;
    ActionKind kind = ActionKind::Transit;
    int r = 0;
    int m = 0;
    int w = 0;
    int w2 = 0;
};

/// Immutable DAG over action ids.
class OrderingSet {
  public:
    OrderingSet() = default;
    explicit OrderingSet(std::set<std::string> nodes) : nodes_(std::move(nodes)) {}

    const std::set<std::pair<std::string, std::string>>& edges() const { return edges_; }
    const std::set<std::string>& nodes() const { return nodes_; }

    /// True iff `to` is reachable from `from` along edges.
    bool reaches(const std::string& from, const std::string& to) const;

    /// Returns a new set with the edge added; throws CycleError when the edge
    /// would create a cycle. Adding an already-implied edge is accepted.
    OrderingSet with_edge(const std::string& before, const std::string& after) const;

  private:
    std::set<std::string> nodes_;
    std::set<std::pair<std::string, std::string>> edges_;
};

inline OrderingSet add_ordering(const OrderingSet& prec, const std::string& before,
                                const std::string& after) {
    return prec.with_edge(before, after);
}

/// Precomputed reachability over the ordering closure; cheap repeated queries.
class PrecClosure {
  public:
    PrecClosure() = default;
    explicit PrecClosure(const OrderingSet& prec);
    /// Strictly-precedes under the transitive closure.
    bool precedes(const std::string& a, const std::string& b) const;

  private:
    std::map<std::string, int> idx_;
    std::vector<std::vector<bool>> reach_;
};

struct TaskPlan {
    std::vector<AbstractAction> actions;
    std::map<std::string, int> index_of;
    std::vector<std::vector<int>> per_robot;  // action indices in robot order
    OrderingSet prec;                         // input edges plus per-robot chains

    const AbstractAction& action(const std::string& id) const {
        return actions.at(size_t(index_of.at(id)));
    }
};

/// Parses a plan file and validates it against a scenario: strict alternation
/// of transit/transfer per robot, pick/place pairing on the same movable,
/// region continuity of each movable's timeline, DAG-ness of prec.
TaskPlan load_plan(std::istream& in, const Scenario& scene);
TaskPlan load_plan_string(const std::string& text, const Scenario& scene);
TaskPlan load_plan_file(const std::string& path, const Scenario& scene);

std::string write_plan(const TaskPlan& plan);

/// Actions whose prec predecessors are all completed and that are next in
/// their robot's own list. `completed` must be downward-closed under prec.
std::set<std::string> ready_actions(const TaskPlan& plan,
                                    const std::set<std::string>& completed);

/// One contiguous stay of a movable inside a region: starts at the add
/// transfer (or initially, from s0) and ends when the transfer carrying it
/// away completes (or never).
struct Epoch {
    int movable = 0;                        // id
    int region = 0;                         // id
    int seq = 0;                            // index in the movable's timeline
    std::optional<std::string> add_action;  // transfer id; nullopt = initial occupancy
    std::optional<std::string> remove_action;  // transfer that carries it away; nullopt = stays
};

/// Full occupancy timeline for every movable, in timeline order per movable.
std::vector<Epoch> movable_epochs(const TaskPlan& plan, const Scenario& scene);

struct RegionEvent {
    enum Type { Initial, Add, Remove } type = Initial;
    int movable = 0;
    std::string action_id;  // empty for Initial
};

/// Per-movable alternating add/remove event sequences for region w,
/// including initial occupancy from s0. Keyed by movable id.
std::map<int, std::vector<RegionEvent>> region_sequences(const TaskPlan& plan,
                                                         const Scenario& scene, int w);

}  // namespace mrrefine
