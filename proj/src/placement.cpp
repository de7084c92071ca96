#include "mrrefine/placement.hpp"

#include <algorithm>
#include <chrono>

namespace mrrefine {

namespace {

using Clock = std::chrono::steady_clock;

/// Epochs never co-present: one is removed before the other is added.
bool separated(const Epoch& gone, const Epoch& arriving, const OrderingSet& prec) {
    return gone.remove_action && arriving.add_action &&
           prec.reaches(*gone.remove_action, *arriving.add_action);
}

bool co_present_possible(const Epoch& a, const Epoch& b, const OrderingSet& prec) {
    if (a.movable == b.movable) return a.seq == b.seq;
    return !separated(a, b, prec) && !separated(b, a, prec);
}

struct Occupant {
    const Epoch* epoch;
    geom::Pose2 pose;
};

// Depth-first search over per-pair edge direction choices; returns the first
// mutually acyclic edge set, trying remove(A)-before-add(B) first.
bool resolve_pairs(const std::vector<std::pair<const Epoch*, const Epoch*>>& pairs, size_t k,
                   OrderingSet working,
                   std::vector<std::pair<std::string, std::string>>& edges) {
    if (k == pairs.size()) return true;
    const Epoch& a = *pairs[k].first;
    const Epoch& b = *pairs[k].second;
    std::vector<std::pair<std::string, std::string>> options;
    if (a.remove_action && b.add_action) options.push_back({*a.remove_action, *b.add_action});
    if (b.remove_action && a.add_action) options.push_back({*b.remove_action, *a.add_action});
    for (const auto& e : options) {
        try {
            OrderingSet next = working.with_edge(e.first, e.second);
            edges.push_back(e);
            if (resolve_pairs(pairs, k + 1, std::move(next), edges)) return true;
            edges.pop_back();
        } catch (const CycleError&) {
        }
    }
    return false;
}

}  // namespace

std::vector<geom::Pose2> sample_placement(const RegionSpec& region, const geom::Shape& body,
                                          Rng& rng, int n) {
    if (n < 1) throw std::invalid_argument("sample count must be >= 1");
    const geom::Aabb box = geom::aabb_of(geom::Shape{region.polygon}, region.pose);
    const bool is_disc = std::holds_alternative<geom::Disc>(body);
    std::vector<geom::Pose2> out;
    const long budget = 100L * n;
    for (long trial = 0; trial < budget && static_cast<int>(out.size()) < n; ++trial) {
        geom::Pose2 p;
        p.x = rng.uniform(box.xmin, box.xmax);
        p.y = rng.uniform(box.ymin, box.ymax);
        p.theta = is_disc ? 0.0 : rng.angle();
        if (geom::contains(geom::Shape{region.polygon}, region.pose, body, p))
            out.push_back(p);
    }
    if (static_cast<int>(out.size()) < n)
        throw NoSamples("region " + std::to_string(region.id) +
                        ": rejection sampling exhausted (object cannot fit)");
    return out;
}

geom::Pose2 epoch_pose(const Scenario& scene, const Epoch& e,
                       const std::map<std::string, geom::Pose2>& pose_of) {
    if (!e.add_action) return scene.initial.movable_poses[size_t(e.movable - 1)];
    return pose_of.at(*e.add_action);
}

std::vector<RegionProblem> build_region_problems(const Scenario& scene, const TaskPlan& plan,
                                                 const std::vector<Epoch>& epochs,
                                                 int n_place, uint64_t seed) {
    std::vector<RegionProblem> out;
    for (const auto& w : scene.regions) {
        RegionProblem rp;
        rp.region = w.id;
        // variables in plan-action order for determinism
        std::vector<const Epoch*> added;
        for (const Epoch& e : epochs) {
            if (e.region != w.id) continue;
            if (e.add_action)
                added.push_back(&e);
            else
                rp.initial.push_back(&e);
        }
        std::sort(added.begin(), added.end(), [&](const Epoch* a, const Epoch* b) {
            return plan.index_of.at(*a->add_action) < plan.index_of.at(*b->add_action);
        });
        for (size_t vi = 0; vi < added.size(); ++vi) {
            RegionVar var;
            var.epoch = added[vi];
            var.add_action = *added[vi]->add_action;
            Rng rng = rng_for(seed, "place", uint64_t(w.id), vi);
            var.samples =
                sample_placement(w, scene.movable(added[vi]->movable).body, rng, n_place);
            for (const geom::Pose2& p : var.samples) {
                bool clear = true;
                for (const auto& f : scene.fixed)
                    if (geom::collide(scene.movable(added[vi]->movable).body, p, f.shape,
                                      f.pose)) {
                        clear = false;
                        break;
                    }
                var.clear_of_fixed.push_back(clear ? 1 : 0);
            }
            rp.vars.push_back(std::move(var));
        }
        if (!rp.vars.empty() || !rp.initial.empty()) out.push_back(std::move(rp));
    }
    return out;
}

ComboOutcome evaluate_combination(const Scenario& scene, const RegionProblem& rp,
                                  const std::vector<int>& combo, const OrderingSet& prec) {
    ComboOutcome out;
    std::vector<Occupant> occ;
    for (size_t i = 0; i < rp.vars.size(); ++i) {
        if (!rp.vars[i].clear_of_fixed[size_t(combo[i])]) return out;  // blocked by fixed
        occ.push_back({rp.vars[i].epoch, rp.vars[i].samples[size_t(combo[i])]});
    }
    for (const Epoch* e : rp.initial)
        occ.push_back({e, epoch_pose(scene, *e, {})});

    std::vector<std::pair<const Epoch*, const Epoch*>> violating;
    for (size_t i = 0; i < occ.size(); ++i)
        for (size_t j = i + 1; j < occ.size(); ++j) {
            const Epoch& a = *occ[i].epoch;
            const Epoch& b = *occ[j].epoch;
            if (a.movable == b.movable) continue;  // timeline-ordered, never co-present
            if (!co_present_possible(a, b, prec)) continue;
            if (geom::collide(scene.movable(a.movable).body, occ[i].pose,
                              scene.movable(b.movable).body, occ[j].pose))
                violating.push_back({&a, &b});
        }
    if (violating.empty()) {
        out.workable = true;
        return out;
    }
    std::vector<std::pair<std::string, std::string>> edges;
    if (resolve_pairs(violating, 0, prec, edges)) {
        // one edge may resolve several pairs
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        out.workable = true;
        out.edges = std::move(edges);
    }
    return out;
}

CollisionCache build_cache(const Scenario& scene, const TaskPlan& plan,
                           const std::vector<Epoch>& epochs, const OrderingSet& prec_final,
                           const std::map<std::string, geom::Pose2>& pose_of) {
    PrecClosure closure(prec_final);
    CollisionCache cache;
    for (const AbstractAction& a : plan.actions) {
        auto& entries = cache.relevant[a.id];
        for (const Epoch& e : epochs) {
            if (e.remove_action && closure.precedes(*e.remove_action, a.id)) continue;
            if (e.add_action && closure.precedes(a.id, *e.add_action)) continue;
            entries.push_back({e.movable, epoch_pose(scene, e, pose_of), e.seq});
        }
    }
    return cache;
}

PlacementResult solve_placements(const Scenario& scene, const TaskPlan& plan,
                                 const PlaceParams& params, uint64_t seed,
                                 const PlacementTabu* tabu) {
    const auto t0 = Clock::now();
    auto expired = [&] {
        return std::chrono::duration<double>(Clock::now() - t0).count() > params.time_limit_s;
    };
    const std::vector<Epoch> epochs = movable_epochs(plan, scene);

    PlacementSolution sol;
    OrderingSet prec_acc = plan.prec;

    int n_place = params.n_place;
    std::vector<RegionProblem> problems;
    try {
        problems = build_region_problems(scene, plan, epochs, n_place, seed);
    } catch (const NoSamples& e) {
        return Infeasible{e.what()};
    }

    for (size_t pi = 0; pi < problems.size(); ++pi) {
        RegionProblem* rp = &problems[pi];
        const std::set<std::vector<int>>* region_tabu = nullptr;
        if (tabu) {
            auto it = tabu->find(rp->region);
            if (it != tabu->end()) region_tabu = &it->second;
        }
        if (rp->vars.empty()) continue;

        std::vector<RegionProblem> extended;  // storage for resampled problems
        bool solved = false;
        for (int attempt = 0; !solved; ++attempt) {
            // valid sample indices per variable (clear of fixed shapes)
            std::vector<std::vector<int>> valid(rp->vars.size());
            bool dead_var = false;
            for (size_t vi = 0; vi < rp->vars.size(); ++vi) {
                for (size_t si = 0; si < rp->vars[vi].samples.size(); ++si)
                    if (rp->vars[vi].clear_of_fixed[si])
                        valid[vi].push_back(static_cast<int>(si));
                if (valid[vi].empty()) dead_var = true;
            }

            bool found = false;
            std::vector<int> best_combo;
            std::vector<std::pair<std::string, std::string>> best_edges;
            size_t best_edge_count = SIZE_MAX;
            if (!dead_var) {
                std::vector<size_t> od(rp->vars.size(), 0);  // odometer over valid lists
                long evaluated = 0;
                for (;;) {
                    std::vector<int> combo(rp->vars.size());
                    for (size_t vi = 0; vi < od.size(); ++vi)
                        combo[vi] = valid[vi][od[vi]];
                    if (!region_tabu || !region_tabu->count(combo)) {
                        ComboOutcome oc = evaluate_combination(scene, *rp, combo, prec_acc);
                        if (oc.workable && oc.edges.size() < best_edge_count) {
                            best_edge_count = oc.edges.size();
                            best_combo = combo;
                            best_edges = oc.edges;
                            found = true;
                            if (best_edge_count == 0) break;  // least commitment satisfied
                        }
                    }
                    if (++evaluated % 256 == 0 && expired())
                        return Infeasible{"placement step time limit exceeded", true};
                    // advance odometer
                    size_t vi = 0;
                    while (vi < od.size() && ++od[vi] == valid[vi].size()) od[vi++] = 0;
                    if (vi == od.size()) break;
                }
            }
            if (found) {
                for (size_t vi = 0; vi < rp->vars.size(); ++vi)
                    sol.pose_of[rp->vars[vi].add_action] =
                        rp->vars[vi].samples[size_t(best_combo[vi])];
                for (const auto& e : best_edges) {
                    prec_acc = prec_acc.with_edge(e.first, e.second);
                    sol.induced.push_back(e);
                }
                sol.chosen[rp->region] = best_combo;
                solved = true;
                break;
            }
            if (!params.extend_samples || attempt >= 5 || expired())
                return Infeasible{"region " + std::to_string(rp->region) +
                                  ": no valid placement assignment within the drawn samples"};
            // draw a doubled batch of fresh samples and retry this region
            n_place *= 2;
            try {
                extended = build_region_problems(
                    scene, plan, epochs, n_place,
                    detail::splitmix64(seed + uint64_t(attempt) + 1));
            } catch (const NoSamples& e) {
                return Infeasible{e.what()};
            }
            for (auto& erp : extended)
                if (erp.region == rp->region) rp = &erp;
        }
    }

    sol.cache = build_cache(scene, plan, epochs, prec_acc, sol.pose_of);
    return sol;
}

}  // namespace mrrefine
