#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "navcbn/cbn.hpp"
#include "navcbn/discretization.hpp"
#include "navcbn/features.hpp"

namespace navcbn {

// Indices into the canonical discretization order, aligned with a variable
// list carried alongside (the target's parent order unless stated).
using Parameterization = std::vector<int>;

// All parameterizations differing from p in exactly one non-frozen variable
// by one canonical step. Children are emitted following `order` (defaults to
// index order), -1 before +1; boundary indices yield only the inward move.
std::vector<Parameterization> neighbors(const Parameterization& p,
                                        const std::vector<int>& cards,
                                        const std::vector<bool>& frozen = {},
                                        const std::vector<int>& order = {});

enum class SearchPhase { FixedInitialRotation, Relaxed };

const char* to_string(SearchPhase phase);

struct CounterfactualSolution {
    std::vector<std::string> variables; // target's parent order
    Parameterization solution;
    double p_solution = 0.0;
    int depth = 0;
    std::vector<Parameterization> path; // start .. solution
    SearchPhase phase = SearchPhase::FixedInitialRotation;
};

struct SearchOptions {
    // Variable held fixed during phase 1. Defaults to initial_robot_rotation
    // when it is among the target's parents; set freeze_default = false for a
    // single-phase search on models without that variable.
    std::optional<std::string> frozen_variable;
    bool freeze_default = true;
    // Child expansion order (highest priority first). Defaults to
    // robot_pos_change, robot_rotation_change, total_robot_rotation,
    // initial_robot_rotation; unlisted parents keep their parent order.
    std::vector<std::string> priority;
};

// Two-phase breadth-first search over the parent-parameterization lattice.
// A node is success-tested and enqueued only when its raw training count
// exceeds m; the first node with P(target = 1 | u) > epsilon is returned.
// Phase 2 relaxes the frozen variable and carries the visited set over.
// A start node already satisfying both thresholds is returned at depth 0.
std::optional<CounterfactualSolution> search(const CbnModel& model,
                                             const std::map<std::string, int>& start,
                                             const std::string& target, double epsilon,
                                             std::int64_t m, const SearchOptions& opts = {});

struct RealizedTrajectory {
    std::array<Vec2, kSeriesLen> positions; // world frame
    std::array<double, kSeriesLen> headings;
    std::vector<std::string> variables;
    Parameterization solution;
};

// Applies the solution's centroids from a given start pose: positions move
// along the straight line to the goal by the negated position centroid
// (clamped at the goal); headings follow the rotation centroid scaled by
// s = min(1, |needed rotation| / max |centroid|), never scaled up.
RealizedTrajectory realize_trajectory(const CounterfactualSolution& sol,
                                      const DiscretizationModel& disc, const Pose2& start,
                                      const Vec2& goal);

// Re-expresses a realized trajectory as a RawSample (goal rotated into the
// robot frame per step) so it can be featurized and re-assigned. The
// follower series is a fixed trailing pose; Likert fields are placeholders.
RawSample trajectory_to_raw_sample(const RealizedTrajectory& traj, const Vec2& goal);

void write_trajectory_csv(const std::string& path, const RealizedTrajectory& traj);

} // namespace navcbn
