#include "navcbn/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "navcbn/dataset.hpp"
#include "navcbn/errors.hpp"

namespace navcbn {

const char* to_string(SearchPhase phase) {
    return phase == SearchPhase::FixedInitialRotation ? "fixed_initial_rotation" : "relaxed";
}

std::vector<Parameterization> neighbors(const Parameterization& p, const std::vector<int>& cards,
                                        const std::vector<bool>& frozen,
                                        const std::vector<int>& order) {
    const std::size_t n = p.size();
    if (cards.size() != n) throw std::invalid_argument("neighbors: cards size mismatch");
    if (!frozen.empty() && frozen.size() != n) {
        throw std::invalid_argument("neighbors: frozen size mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] < 0 || p[i] >= cards[i]) {
            throw std::invalid_argument("neighbors: index out of range at position " +
                                        std::to_string(i));
        }
    }
    std::vector<int> expand = order;
    if (expand.empty()) {
        expand.resize(n);
        for (std::size_t i = 0; i < n; ++i) expand[i] = static_cast<int>(i);
    }
    std::vector<Parameterization> out;
    for (int idx : expand) {
        if (!frozen.empty() && frozen[idx]) continue;
        if (p[idx] - 1 >= 0) {
            Parameterization q = p;
            --q[idx];
            out.push_back(std::move(q));
        }
        if (p[idx] + 1 < cards[idx]) {
            Parameterization q = p;
            ++q[idx];
            out.push_back(std::move(q));
        }
    }
    return out;
}

namespace {

const std::array<const char*, 4> kDefaultPriority = {
    "robot_pos_change", "robot_rotation_change", "total_robot_rotation",
    "initial_robot_rotation"};

} // namespace

std::optional<CounterfactualSolution> search(const CbnModel& model,
                                             const std::map<std::string, int>& start,
                                             const std::string& target, double epsilon,
                                             std::int64_t m, const SearchOptions& opts) {
    const auto it = model.cpts.find(target);
    if (it == model.cpts.end()) throw std::invalid_argument("search: unknown target " + target);
    const CptTable& table = it->second;
    if (table.node_card != 2) {
        throw std::invalid_argument("search: target must be binary, " + target + " has " +
                                    std::to_string(table.node_card) + " states");
    }
    if (table.parents.empty()) throw std::invalid_argument("search: target has no parents");
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("search: epsilon must be in (0, 1)");
    }
    if (m < 0) throw std::invalid_argument("search: m must be >= 0");

    const std::vector<std::string>& vars = table.parents;
    const std::vector<int>& cards = table.parent_cards;
    const std::size_t n = vars.size();

    Parameterization start_p(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto vit = start.find(vars[i]);
        if (vit == start.end()) {
            throw std::invalid_argument("search: start is missing " + vars[i]);
        }
        if (vit->second < 0 || vit->second >= cards[i]) {
            throw std::invalid_argument("search: start index out of range for " + vars[i]);
        }
        start_p[i] = vit->second;
    }

    // Child expansion order: the task priority by default, unlisted parents
    // keep their relative parent order.
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    std::vector<std::string> priority(opts.priority);
    if (priority.empty()) priority.assign(kDefaultPriority.begin(), kDefaultPriority.end());
    const auto rank = [&](int var_idx) {
        const auto pit = std::find(priority.begin(), priority.end(), vars[var_idx]);
        return pit == priority.end() ? priority.size() : static_cast<std::size_t>(pit - priority.begin());
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rank(a) < rank(b); });

    int frozen_idx = -1;
    if (opts.frozen_variable) {
        const auto fit = std::find(vars.begin(), vars.end(), *opts.frozen_variable);
        if (fit == vars.end()) {
            throw std::invalid_argument("search: frozen variable " + *opts.frozen_variable +
                                        " is not a parent of " + target);
        }
        frozen_idx = static_cast<int>(fit - vars.begin());
    } else if (opts.freeze_default) {
        const auto fit = std::find(vars.begin(), vars.end(), "initial_robot_rotation");
        if (fit != vars.end()) frozen_idx = static_cast<int>(fit - vars.begin());
    }

    const auto encode = [&](const Parameterization& p) { return table.config_index(p); };
    const auto eligible = [&](std::uint64_t cfg) { return table.count(cfg) > m; };
    const auto success_p = [&](std::uint64_t cfg) { return table.row(cfg).probs[1]; };

    const std::uint64_t start_cfg = encode(start_p);

    const auto make_solution = [&](const Parameterization& sol, double p, int depth,
                                   std::vector<Parameterization> path, SearchPhase phase) {
        CounterfactualSolution s;
        s.variables = vars;
        s.solution = sol;
        s.p_solution = p;
        s.depth = depth;
        s.path = std::move(path);
        s.phase = phase;
        return s;
    };

    const SearchPhase start_phase =
        frozen_idx >= 0 ? SearchPhase::FixedInitialRotation : SearchPhase::Relaxed;

    // Degenerate call: the start already satisfies both thresholds.
    if (eligible(start_cfg) && success_p(start_cfg) > epsilon) {
        return make_solution(start_p, success_p(start_cfg), 0, {start_p}, start_phase);
    }

    std::unordered_set<std::uint64_t> seen;

    const auto run_phase = [&](bool freeze,
                               SearchPhase phase) -> std::optional<CounterfactualSolution> {
        std::vector<bool> frozen_mask;
        if (freeze && frozen_idx >= 0) {
            frozen_mask.assign(n, false);
            frozen_mask[frozen_idx] = true;
        }
        std::deque<std::uint64_t> queue{start_cfg};
        std::unordered_map<std::uint64_t, std::uint64_t> parent_of;
        std::unordered_map<std::uint64_t, int> depth{{start_cfg, 0}};
        seen.insert(start_cfg);
        while (!queue.empty()) {
            const std::uint64_t node_cfg = queue.front();
            queue.pop_front();
            const Parameterization node = table.config_values(node_cfg);
            for (const Parameterization& child : neighbors(node, cards, frozen_mask, order)) {
                const std::uint64_t cfg = encode(child);
                if (seen.count(cfg)) continue;
                // Only parameterizations with sufficient training support are
                // success-tested or expanded.
                if (!eligible(cfg)) continue;
                const int d = depth[node_cfg] + 1;
                const double p = success_p(cfg);
                if (p > epsilon) {
                    std::vector<Parameterization> path{child};
                    std::uint64_t cursor = node_cfg;
                    for (;;) {
                        path.push_back(table.config_values(cursor));
                        const auto pit = parent_of.find(cursor);
                        if (pit == parent_of.end()) break;
                        cursor = pit->second;
                    }
                    std::reverse(path.begin(), path.end());
                    return make_solution(child, p, d, std::move(path), phase);
                }
                seen.insert(cfg);
                depth[cfg] = d;
                parent_of[cfg] = node_cfg;
                queue.push_back(cfg);
            }
        }
        return std::nullopt;
    };

    if (frozen_idx >= 0) {
        if (auto sol = run_phase(true, SearchPhase::FixedInitialRotation)) return sol;
        return run_phase(false, SearchPhase::Relaxed);
    }
    return run_phase(false, SearchPhase::Relaxed);
}

RealizedTrajectory realize_trajectory(const CounterfactualSolution& sol,
                                      const DiscretizationModel& disc, const Pose2& start,
                                      const Vec2& goal) {
    const auto index_of = [&](const std::string& name) {
        const auto it = std::find(sol.variables.begin(), sol.variables.end(), name);
        if (it == sol.variables.end()) {
            throw std::invalid_argument("realize_trajectory: solution has no " + name);
        }
        return sol.solution[static_cast<std::size_t>(it - sol.variables.begin())];
    };
    const int pos_idx = index_of("robot_pos_change");
    const int rot_idx = index_of("robot_rotation_change");

    const auto& pos_centroids = disc.variable("robot_pos_change").time_series.centroids;
    const auto& rot_centroids = disc.variable("robot_rotation_change").time_series.centroids;
    if (pos_idx < 0 || pos_idx >= static_cast<int>(pos_centroids.size()) || rot_idx < 0 ||
        rot_idx >= static_cast<int>(rot_centroids.size())) {
        throw std::invalid_argument("realize_trajectory: cluster index out of range");
    }
    const Series& c_pos = pos_centroids[pos_idx];
    const Series& c_rot = rot_centroids[rot_idx];

    const double dx = goal.x - start.x;
    const double dy = goal.y - start.y;
    const double dist0 = std::hypot(dx, dy);
    if (dist0 < 1e-6) throw std::domain_error("realize_trajectory: goal coincides with start");
    const double ux = dx / dist0;
    const double uy = dy / dist0;

    RealizedTrajectory traj;
    traj.variables = sol.variables;
    traj.solution = sol.solution;
    for (int t = 0; t < kSeriesLen; ++t) {
        // The centroid stores distance change; negate to get travel toward
        // the goal, clamped so the robot never overshoots it.
        const double travel = std::min(-c_pos[t], dist0);
        traj.positions[t] = {start.x + travel * ux, start.y + travel * uy};
    }

    const double theta_need = wrap_angle(std::atan2(dy, dx) - start.theta);
    double max_rot = 0.0;
    for (double v : c_rot) max_rot = std::max(max_rot, std::abs(v));
    const double scale = max_rot == 0.0 ? 1.0 : std::min(1.0, std::abs(theta_need) / max_rot);
    for (int t = 0; t < kSeriesLen; ++t) traj.headings[t] = start.theta + scale * c_rot[t];
    return traj;
}

RawSample trajectory_to_raw_sample(const RealizedTrajectory& traj, const Vec2& goal) {
    RawSample raw;
    raw.participant_id = "counterfactual";
    raw.scenario_id = "realized";
    raw.competence_likert = 5;
    raw.intention_likert = 5;
    for (int t = 0; t < kSeriesLen; ++t) {
        const double gx = goal.x - traj.positions[t].x;
        const double gy = goal.y - traj.positions[t].y;
        const double c = std::cos(-traj.headings[t]);
        const double s = std::sin(-traj.headings[t]);
        raw.goal_rel.push_back({c * gx - s * gy, s * gx + c * gy});
        raw.human_rel.push_back({-1.5, 0.0, 0.0}); // fixed trailing follower
    }
    return raw;
}

void write_trajectory_csv(const std::string& path, const RealizedTrajectory& traj) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write CSV: " + path);
    out << "t,x,y,heading\n";
    for (int t = 0; t < kSeriesLen; ++t) {
        out << t << ',' << format_double(traj.positions[t].x) << ','
            << format_double(traj.positions[t].y) << ',' << format_double(traj.headings[t])
            << '\n';
    }
}

} // namespace navcbn
