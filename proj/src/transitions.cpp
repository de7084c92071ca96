#include "mrrefine/transitions.hpp"

#include <algorithm>
#include <chrono>

namespace mrrefine {

namespace {

/// Static collision context for one transition configuration: the cached
/// movable occupancies (minus the manipulated object) plus all fixed shapes.
bool config_clear(const Scenario& scene, const geom::Shape& body, const geom::Pose2& q,
                  const std::vector<CacheEntry>& cache, int skip_movable,
                  std::vector<int>* blockers) {
    bool ok = true;
    for (const CacheEntry& e : cache) {
        if (e.movable == skip_movable) continue;
        if (geom::collide(body, q, scene.movable(e.movable).body, e.pose)) {
            if (blockers) blockers->push_back(e.movable);
            ok = false;
        }
    }
    for (const auto& f : scene.fixed)
        if (geom::collide(body, q, f.shape, f.pose)) ok = false;
    return ok;
}

}  // namespace

std::vector<Grasp> sample_grasps(const RobotSpec& robot, const MovableSpec& movable, Rng& rng,
                                 int n) {
    if (n < 1) throw std::invalid_argument("grasp count must be >= 1");
    const double contact = robot.radius() + geom::bounding_radius(movable.body);
    if (!(robot.reach > contact))
        throw std::invalid_argument("robot " + std::to_string(robot.id) +
                                    ": reach does not exceed contact distance for movable " +
                                    std::to_string(movable.id));
    std::vector<Grasp> out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        const double dist = rng.uniform(contact, robot.reach);
        const double phi = rng.angle();
        // robot pose expressed in the object frame, facing the object center
        const geom::Pose2 robot_in_obj =
            geom::pose(dist * std::cos(phi), dist * std::sin(phi), phi + geom::kPi);
        out.push_back({robot.id, movable.id, geom::inverse(robot_in_obj)});
    }
    return out;
}

geom::Pose2 solve_kin(const Grasp& grasp, const geom::Pose2& object_pose) {
    return geom::compose(object_pose, geom::inverse(grasp.gamma));
}

TransitionResult solve_transitions(const Scenario& scene, const TaskPlan& plan,
                                   const PlacementSolution& placements,
                                   const TransitionParams& params, uint64_t seed,
                                   const GraspTabu* tabu) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<Epoch> epochs = movable_epochs(plan, scene);
    TransitionSolution sol;

    for (size_t ri = 0; ri < plan.per_robot.size(); ++ri) {
        const auto& list = plan.per_robot[ri];
        for (size_t k = 0; k + 1 < list.size(); k += 2) {
            const AbstractAction& pick = plan.actions[size_t(list[k])];
            const AbstractAction& place = plan.actions[size_t(list[k + 1])];
            const RobotSpec& robot = scene.robot(pick.r);
            const MovableSpec& movable = scene.movable(pick.m);

            // object pose at pick time: the epoch this pick-place pair removes
            geom::Pose2 current_pose;
            bool found_epoch = false;
            for (const Epoch& e : epochs)
                if (e.remove_action && *e.remove_action == place.id) {
                    current_pose = epoch_pose(scene, e, placements.pose_of);
                    found_epoch = true;
                }
            if (!found_epoch) throw std::logic_error("no epoch removed by " + place.id);
            const geom::Pose2 target_pose = placements.pose_of.at(place.id);

            Rng rng = rng_for(seed, "grasp", uint64_t(ri), k / 2);
            const std::vector<Grasp> grasps =
                sample_grasps(robot, movable, rng, params.n_grasp);
            const std::set<int>* skip = nullptr;
            if (tabu) {
                auto it = tabu->find(pick.id);
                if (it != tabu->end()) skip = &it->second;
            }

            bool accepted = false;
            std::vector<int> blockers;
            std::string failing = pick.id;
            for (size_t gi = 0; gi < grasps.size(); ++gi) {
                if (skip && skip->count(static_cast<int>(gi))) continue;
                const Grasp& g = grasps[gi];
                const geom::Pose2 q_pick = solve_kin(g, current_pose);
                const geom::Pose2 q_place = solve_kin(g, target_pose);
                if (!config_clear(scene, robot.body, q_pick,
                                  placements.cache.relevant.at(pick.id), pick.m, &blockers)) {
                    failing = pick.id;
                    continue;
                }
                if (!config_clear(scene, robot.body, q_place,
                                  placements.cache.relevant.at(place.id), pick.m, &blockers)) {
                    failing = place.id;
                    continue;
                }
                sol.grasp_of[pick.id] = g;
                sol.grasp_index_of[pick.id] = static_cast<int>(gi);
                sol.config_of[pick.id] = q_pick;
                sol.config_of[place.id] = q_place;
                accepted = true;
                break;
            }
            if (!accepted) {
                std::sort(blockers.begin(), blockers.end());
                blockers.erase(std::unique(blockers.begin(), blockers.end()), blockers.end());
                return StepFailure{failing, "no collision-free grasp within the sampled set",
                                   blockers};
            }
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (elapsed > params.time_limit_s)
                return StepFailure{pick.id, "transition step time limit exceeded", {}, true};
        }
    }
    return sol;
}

}  // namespace mrrefine
