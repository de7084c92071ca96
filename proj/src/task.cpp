#include "mrrefine/task.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mrrefine {

using nlohmann::json;

bool OrderingSet::reaches(const std::string& from, const std::string& to) const {
    if (from == to) return true;
    std::deque<std::string> queue{from};
    std::set<std::string> seen{from};
    while (!queue.empty()) {
        const std::string cur = queue.front();
        queue.pop_front();
        for (const auto& [a, b] : edges_) {
            if (a != cur || seen.count(b)) continue;
            if (b == to) return true;
            seen.insert(b);
            queue.push_back(b);
        }
    }
    return false;
}

OrderingSet OrderingSet::with_edge(const std::string& before, const std::string& after) const {
    if (!nodes_.count(before) || !nodes_.count(after))
        throw std::invalid_argument("ordering edge references unknown action id");
    if (before == after || reaches(after, before))
        throw CycleError("ordering edge " + before + " < " + after + " would create a cycle");
    OrderingSet out = *this;
    out.edges_.insert({before, after});
    return out;
}

PrecClosure::PrecClosure(const OrderingSet& prec) {
    int n = 0;
    for (const auto& id : prec.nodes()) idx_[id] = n++;
    reach_.assign(size_t(n), std::vector<bool>(size_t(n), false));
    for (const auto& [a, b] : prec.edges()) reach_[size_t(idx_.at(a))][size_t(idx_.at(b))] = true;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            if (reach_[size_t(i)][size_t(k)])
                for (int j = 0; j < n; ++j)
                    if (reach_[size_t(k)][size_t(j)]) reach_[size_t(i)][size_t(j)] = true;
}

bool PrecClosure::precedes(const std::string& a, const std::string& b) const {
    return reach_[size_t(idx_.at(a))][size_t(idx_.at(b))];
}

namespace {

ActionKind parse_kind(const std::string& k) {
    if (k == "transit") return ActionKind::Transit;
    if (k == "transfer") return ActionKind::Transfer;
    throw ParseError("plan: unknown action kind '" + k + "'");
}

void validate_plan(TaskPlan& plan, const Scenario& scene) {
    const int R = static_cast<int>(scene.robots.size());
    for (const auto& a : plan.actions) {
        if (a.r < 1 || a.r > R)
            throw ValidationError("action " + a.id + ": unknown robot " + std::to_string(a.r));
        if (a.m < 1 || a.m > static_cast<int>(scene.movables.size()))
            throw ValidationError("action " + a.id + ": unknown movable " + std::to_string(a.m));
        if (a.w2 < 1 || a.w2 > static_cast<int>(scene.regions.size()))
            throw ValidationError("action " + a.id + ": unknown region " + std::to_string(a.w2));
    }
    // Strict transit/transfer alternation and pick/place pairing per robot.
    for (int r = 1; r <= R; ++r) {
        const auto& list = plan.per_robot[size_t(r - 1)];
        if (list.size() % 2 != 0)
            throw ValidationError("robot " + std::to_string(r) +
                                  ": actions must form transit/transfer pairs");
        for (size_t k = 0; k + 1 < list.size(); k += 2) {
            const AbstractAction& pick = plan.actions[size_t(list[k])];
            const AbstractAction& place = plan.actions[size_t(list[k + 1])];
            if (pick.kind != ActionKind::Transit || place.kind != ActionKind::Transfer)
                throw ValidationError("robot " + std::to_string(r) +
                                      ": expected transit then transfer at pair " +
                                      std::to_string(k / 2 + 1));
            if (pick.m != place.m)
                throw ValidationError("pair " + pick.id + "/" + place.id +
                                      ": pick and place must manipulate the same movable");
            if (pick.w2 != place.w)
                throw ValidationError("pair " + pick.id + "/" + place.id +
                                      ": transfer must start where the transit grasped");
        }
    }
    // Per-movable timeline: picks/places of one movable are chained by prec
    // and the region sequence is continuous starting from s0.
    for (size_t mi = 0; mi < scene.movables.size(); ++mi) {
        const int m = static_cast<int>(mi) + 1;
        std::vector<int> pairs;  // index of pick action
        for (size_t i = 0; i < plan.actions.size(); ++i)
            if (plan.actions[i].kind == ActionKind::Transit && plan.actions[i].m == m)
                pairs.push_back(static_cast<int>(i));
        for (size_t a = 0; a < pairs.size(); ++a)
            for (size_t b = a + 1; b < pairs.size(); ++b) {
                const std::string& ia = plan.actions[size_t(pairs[a])].id;
                const std::string& ib = plan.actions[size_t(pairs[b])].id;
                if (!plan.prec.reaches(ia, ib) && !plan.prec.reaches(ib, ia))
                    throw ValidationError("movable " + std::to_string(m) +
                                          ": its manipulations are not totally ordered by prec");
            }
        // topological position = number of earlier picks of the same movable
        std::sort(pairs.begin(), pairs.end(), [&](int a, int b) {
            int ca = 0, cb = 0;
            for (int p : pairs) {
                if (p != a &&
                    plan.prec.reaches(plan.actions[size_t(p)].id, plan.actions[size_t(a)].id))
                    ++ca;
                if (p != b &&
                    plan.prec.reaches(plan.actions[size_t(p)].id, plan.actions[size_t(b)].id))
                    ++cb;
            }
            return ca < cb;
        });
        int cur = scene.initial.movable_regions[mi];
        for (int pi : pairs) {
            const AbstractAction& pick = plan.actions[size_t(pi)];
            if (pick.w2 != cur)
                throw ValidationError("action " + pick.id + ": movable " + std::to_string(m) +
                                      " is in region " + std::to_string(cur) + ", not " +
                                      std::to_string(pick.w2));
            // the paired transfer directly follows in the robot list
            const auto& list = plan.per_robot[size_t(pick.r - 1)];
            auto it = std::find(list.begin(), list.end(), pi);
            cur = plan.actions[size_t(*(it + 1))].w2;
        }
    }
}

}  // namespace

TaskPlan load_plan(std::istream& in, const Scenario& scene) {
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("plan: ") + e.what());
    }
    if (!root.is_object() || !root.contains("actions") || !root.contains("prec") ||
        root.size() != 2)
        throw ParseError("plan: expected exactly the keys 'actions' and 'prec'");

    TaskPlan plan;
    plan.per_robot.assign(scene.robots.size(), {});
    std::set<std::string> ids;
    for (const auto& ja : root["actions"]) {
        for (auto it = ja.begin(); it != ja.end(); ++it) {
            const std::string k = it.key();
            if (k != "id" && k != "kind" && k != "r" && k != "m" && k != "w" && k != "w2")
                throw ParseError("plan action: unknown key '" + k + "'");
        }
        AbstractAction a;
        a.id = ja.at("id").get<std::string>();
        a.kind = parse_kind(ja.at("kind").get<std::string>());
        a.r = ja.at("r").get<int>();
        a.m = ja.at("m").get<int>();
        a.w = ja.at("w").get<int>();
        a.w2 = ja.at("w2").get<int>();
        if (!ids.insert(a.id).second) throw ValidationError("plan: duplicate action id " + a.id);
        plan.index_of[a.id] = static_cast<int>(plan.actions.size());
        if (a.r < 1 || a.r > static_cast<int>(scene.robots.size()))
            throw ValidationError("action " + a.id + ": unknown robot " + std::to_string(a.r));
        plan.per_robot[size_t(a.r - 1)].push_back(static_cast<int>(plan.actions.size()));
        plan.actions.push_back(std::move(a));
    }
    plan.prec = OrderingSet(ids);
    // Each robot's own list order is embedded in prec.
    for (const auto& list : plan.per_robot)
        for (size_t k = 0; k + 1 < list.size(); ++k)
            plan.prec = plan.prec.with_edge(plan.actions[size_t(list[k])].id,
                                            plan.actions[size_t(list[k + 1])].id);
    for (const auto& je : root["prec"]) {
        if (!je.is_array() || je.size() != 2)
            throw ParseError("plan: prec entries must be [before_id, after_id]");
        plan.prec = plan.prec.with_edge(je[0].get<std::string>(), je[1].get<std::string>());
    }
    validate_plan(plan, scene);
    return plan;
}

TaskPlan load_plan_string(const std::string& text, const Scenario& scene) {
    std::istringstream in(text);
    return load_plan(in, scene);
}

TaskPlan load_plan_file(const std::string& path, const Scenario& scene) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open plan file: " + path);
    return load_plan(in, scene);
}

std::string write_plan(const TaskPlan& plan) {
    json actions = json::array();
    for (const auto& a : plan.actions)
        actions.push_back({{"id", a.id},
                           {"kind", a.kind == ActionKind::Transit ? "transit" : "transfer"},
                           {"r", a.r},
                           {"m", a.m},
                           {"w", a.w},
                           {"w2", a.w2}});
    json prec = json::array();
    for (const auto& [a, b] : plan.prec.edges()) prec.push_back(json::array({a, b}));
    return json{{"actions", actions}, {"prec", prec}}.dump(2) + "\n";
}

std::set<std::string> ready_actions(const TaskPlan& plan,
                                    const std::set<std::string>& completed) {
    std::set<std::string> ready;
    for (const auto& list : plan.per_robot) {
        for (int ai : list) {
            const std::string& id = plan.actions[size_t(ai)].id;
            if (completed.count(id)) continue;
            bool ok = true;
            for (const auto& [a, b] : plan.prec.edges())
                if (b == id && !completed.count(a)) ok = false;
            if (ok) ready.insert(id);
            break;  // only the next action in the robot's own list
        }
    }
    return ready;
}

std::vector<Epoch> movable_epochs(const TaskPlan& plan, const Scenario& scene) {
    std::vector<Epoch> epochs;
    for (size_t mi = 0; mi < scene.movables.size(); ++mi) {
        const int m = static_cast<int>(mi) + 1;
        // picks of m, in prec order (validated total order)
        std::vector<int> picks;
        for (size_t i = 0; i < plan.actions.size(); ++i)
            if (plan.actions[i].kind == ActionKind::Transit && plan.actions[i].m == m)
                picks.push_back(static_cast<int>(i));
        std::sort(picks.begin(), picks.end(), [&](int a, int b) {
            int ca = 0, cb = 0;
            for (int p : picks) {
                if (p != a &&
                    plan.prec.reaches(plan.actions[size_t(p)].id, plan.actions[size_t(a)].id))
                    ++ca;
                if (p != b &&
                    plan.prec.reaches(plan.actions[size_t(p)].id, plan.actions[size_t(b)].id))
                    ++cb;
            }
            return ca < cb;
        });
        Epoch cur;
        cur.movable = m;
        cur.region = scene.initial.movable_regions[mi];
        cur.seq = 0;
        for (int pi : picks) {
            const AbstractAction& pick = plan.actions[size_t(pi)];
            const auto& list = plan.per_robot[size_t(pick.r - 1)];
            auto it = std::find(list.begin(), list.end(), pi);
            const AbstractAction& place = plan.actions[size_t(*(it + 1))];
            // The slot is only vacated once the carry away from the region
            // completes, so removal is credited to the transfer, not the pick.
            cur.remove_action = place.id;
            epochs.push_back(cur);
            cur = Epoch{m, place.w2, cur.seq + 1, place.id, std::nullopt};
        }
        epochs.push_back(cur);
    }
    return epochs;
}

std::map<int, std::vector<RegionEvent>> region_sequences(const TaskPlan& plan,
                                                         const Scenario& scene, int w) {
    std::map<int, std::vector<RegionEvent>> out;
    for (const Epoch& e : movable_epochs(plan, scene)) {
        if (e.region != w) continue;
        auto& seq = out[e.movable];
        if (e.add_action)
            seq.push_back({RegionEvent::Add, e.movable, *e.add_action});
        else
            seq.push_back({RegionEvent::Initial, e.movable, ""});
        if (e.remove_action) seq.push_back({RegionEvent::Remove, e.movable, *e.remove_action});
    }
    return out;
}

}  // namespace mrrefine
