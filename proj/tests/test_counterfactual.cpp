#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numbers>
#include <set>

#include "navcbn/counterfactual.hpp"
#include "navcbn/errors.hpp"
#include "navcbn/rng.hpp"

using namespace navcbn;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent level-set BFS oracle over the parent lattice, mirroring the
// phase discipline: count-gated expansion, success tested on generation,
// visited carried from phase 1 into phase 2.
struct OracleOutcome {
    bool found = false;
    int depth = -1;
    SearchPhase phase = SearchPhase::FixedInitialRotation;
};

OracleOutcome oracle_search(const CbnModel& model, const std::vector<int>& start,
                            const std::string& target, double eps, std::int64_t m,
                            int frozen_idx) {
    const CptTable& t = model.cpts.at(target);
    const auto eligible = [&](const std::vector<int>& p) {
        return t.count(t.config_index(p)) > m;
    };
    const auto satisfies = [&](const std::vector<int>& p) {
        return t.row(t.config_index(p)).probs[1] > eps;
    };
    const SearchPhase start_phase =
        frozen_idx >= 0 ? SearchPhase::FixedInitialRotation : SearchPhase::Relaxed;
    if (eligible(start) && satisfies(start)) return {true, 0, start_phase};

    std::set<std::vector<int>> seen;
    const auto run = [&](bool freeze, SearchPhase phase) -> OracleOutcome {
        std::vector<std::vector<int>> level{start};
        seen.insert(start);
        int depth = 0;
        while (!level.empty()) {
            ++depth;
            std::vector<std::vector<int>> next;
            for (const auto& node : level) {
                for (std::size_t i = 0; i < node.size(); ++i) {
                    if (freeze && static_cast<int>(i) == frozen_idx) continue;
                    for (int step : {-1, +1}) {
                        std::vector<int> child = node;
                        child[i] += step;
                        if (child[i] < 0 || child[i] >= t.parent_cards[i]) continue;
                        if (seen.count(child)) continue;
                        if (!eligible(child)) continue;
                        if (satisfies(child)) return {true, depth, phase};
                        seen.insert(child);
                        next.push_back(std::move(child));
                    }
                }
            }
            level = std::move(next);
        }
        return {};
    };
    if (frozen_idx >= 0) {
        const OracleOutcome r = run(true, SearchPhase::FixedInitialRotation);
        if (r.found) return r;
        return run(false, SearchPhase::Relaxed);
    }
    return run(false, SearchPhase::Relaxed);
}

CbnModel toy_model(Rng& rng, const LambdaConfig& lambda, int samples) {
    const DagSpec dag = default_dag(lambda);
    std::vector<DiscreteSample> data;
    for (int i = 0; i < samples; ++i) {
        DiscreteSample d;
        d.participant_id = "p";
        d.scenario_id = std::to_string(i);
        for (const DagNode& n : dag.nodes) {
            d.values[n.name] = static_cast<int>(rng.next_below(n.cardinality));
        }
        // Bias the label so high-probability pockets exist.
        const int pos = d.values["robot_pos_change"];
        d.values["competence"] = rng.next_double() < (pos + 1.0) / (lambda.robot_pos_change + 1.0)
                                     ? 1
                                     : 0;
        data.push_back(std::move(d));
    }
    return fit_parameters(dag, data, 1.0);
}

} // namespace

TEST_CASE("neighbors reproduces the two-variable worked example") {
    // Node (x1, y4) on a 4x4 lattice expands to (x2, y4) and (x1, y3) only.
    const auto out = neighbors({0, 3}, {4, 4});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == Parameterization{1, 3});
    CHECK(out[1] == Parameterization{0, 2});
    // Interval skipping is never produced.
    for (const auto& p : out) CHECK(p != Parameterization{2, 3});
}

TEST_CASE("neighbors at an all-zero corner") {
    const auto out = neighbors({0, 0, 0, 0}, {4, 4, 4, 4});
    CHECK(out.size() == 4);
    for (const auto& p : out) {
        int sum = 0;
        for (int v : p) sum += v;
        CHECK(sum == 1);
    }
}

TEST_CASE("neighbors honors frozen variables and expansion order") {
    const auto out = neighbors({1, 1}, {3, 3}, {true, false});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == Parameterization{1, 0}); // -1 before +1
    CHECK(out[1] == Parameterization{1, 2});

    const auto ordered = neighbors({1, 1}, {3, 3}, {}, {1, 0});
    REQUIRE(ordered.size() == 4);
    CHECK(ordered[0] == Parameterization{1, 0});
    CHECK(ordered[1] == Parameterization{1, 2});
    CHECK(ordered[2] == Parameterization{0, 1});
    CHECK(ordered[3] == Parameterization{2, 1});
}

TEST_CASE("neighbors validates inputs") {
    CHECK_THROWS_AS(neighbors({5}, {3}), std::invalid_argument);
    CHECK_THROWS_AS(neighbors({0, 0}, {3}), std::invalid_argument);
}

TEST_CASE("the transition graph is symmetric, bounded, and loop-free") {
    Rng rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(3));
        std::vector<int> cards(n);
        Parameterization p(n);
        for (int i = 0; i < n; ++i) {
            cards[i] = 2 + static_cast<int>(rng.next_below(4));
            p[i] = static_cast<int>(rng.next_below(cards[i]));
        }
        const auto out = neighbors(p, cards);
        CHECK(out.size() <= 2 * static_cast<std::size_t>(n));
        for (const auto& q : out) {
            CHECK(q != p);
            const auto back = neighbors(q, cards);
            CHECK(std::find(back.begin(), back.end(), p) != back.end());
        }
    }
}

namespace {

// Model over two generic parents whose only well-supported high-probability
// cell is one step from the start.
CbnModel two_variable_model() {
    DagSpec dag;
    dag.nodes = {{"a", 3}, {"b", 3}, {"competence", 2}};
    dag.edges = {{"a", "competence"}, {"b", "competence"}};
    std::vector<DiscreteSample> data;
    const auto add = [&](int a, int b, int label, int copies) {
        for (int i = 0; i < copies; ++i) {
            DiscreteSample d;
            d.values = {{"a", a}, {"b", b}, {"competence", label}};
            data.push_back(std::move(d));
        }
    };
    add(0, 0, 0, 10);           // start: low probability, well supported
    add(1, 0, 1, 21);           // the solution cell
    add(1, 0, 0, 1);            // p = 22/24 with alpha=1 -> 0.9167
    add(0, 1, 1, 3);            // high ratio but count 3 <= m
    add(2, 0, 1, 30);           // also satisfying but two steps away
    return fit_parameters(dag, data, 1.0);
}

} // namespace

TEST_CASE("search finds the adjacent well-supported cell at depth 1") {
    const CbnModel m = two_variable_model();
    const auto sol = search(m, {{"a", 0}, {"b", 0}}, "competence", 0.9, 5);
    REQUIRE(sol.has_value());
    CHECK(sol->solution == Parameterization{1, 0});
    CHECK(sol->depth == 1);
    CHECK(sol->p_solution == doctest::Approx(22.0 / 24.0));
    CHECK(sol->phase == SearchPhase::Relaxed); // no initial_robot_rotation parent
    REQUIRE(sol->path.size() == 2);
    CHECK(sol->path.front() == Parameterization{0, 0});
    CHECK(sol->path.back() == sol->solution);

    // Exhaustive scan of the 3x3 lattice confirms no eligible satisfying
    // cell sits closer.
    const CptTable& t = m.cpts.at("competence");
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const std::uint64_t cfg = t.config_index(std::vector<int>{a, b});
            if (t.count(cfg) > 5 && t.row(cfg).probs[1] > 0.9) {
                CHECK(std::abs(a - 0) + std::abs(b - 0) >= 1);
            }
        }
    }
}

TEST_CASE("search returns the start at depth 0 when it already satisfies") {
    const CbnModel m = two_variable_model();
    const auto sol = search(m, {{"a", 1}, {"b", 0}}, "competence", 0.9, 5);
    REQUIRE(sol.has_value());
    CHECK(sol->depth == 0);
    CHECK(sol->solution == Parameterization{1, 0});
    CHECK(sol->path.size() == 1);
}

TEST_CASE("search reports no solution when the lattice is exhausted") {
    const CbnModel m = two_variable_model();
    // Impossible threshold: nothing exceeds 0.99.
    const auto sol = search(m, {{"a", 0}, {"b", 0}}, "competence", 0.99, 5);
    CHECK_FALSE(sol.has_value());
}

TEST_CASE("count gating blocks paths through unsupported cells") {
    DagSpec dag;
    dag.nodes = {{"a", 3}, {"competence", 2}};
    dag.edges = {{"a", "competence"}};
    std::vector<DiscreteSample> data;
    const auto add = [&](int a, int label, int copies) {
        for (int i = 0; i < copies; ++i) {
            DiscreteSample d;
            d.values = {{"a", a}, {"competence", label}};
            data.push_back(std::move(d));
        }
    };
    add(0, 0, 10);
    add(1, 1, 2);  // satisfying ratio but count 2 <= m: blocks the chain
    add(2, 1, 30); // satisfying and supported, but only reachable through a=1
    const CbnModel m = fit_parameters(dag, data, 0.0);
    CHECK_FALSE(search(m, {{"a", 0}}, "competence", 0.9, 5).has_value());
    // Lowering m opens the path; the nearer eligible cell wins.
    const auto sol = search(m, {{"a", 0}}, "competence", 0.9, 1);
    REQUIRE(sol.has_value());
    CHECK(sol->solution == Parameterization{1});
    CHECK(sol->depth == 1);
}

TEST_CASE("search validates its inputs") {
    const CbnModel m = two_variable_model();
    CHECK_THROWS_AS(search(m, {{"a", 0}, {"b", 0}}, "competence", 1.5, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(search(m, {{"a", 0}, {"b", 0}}, "competence", 0.9, -1),
                    std::invalid_argument);
    CHECK_THROWS_AS(search(m, {{"a", 0}}, "competence", 0.9, 5), std::invalid_argument);
    CHECK_THROWS_AS(search(m, {{"a", 0}, {"b", 9}}, "competence", 0.9, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(search(m, {{"a", 0}, {"b", 0}}, "nope", 0.9, 5), std::invalid_argument);
}

TEST_CASE("phase 1 exhausts the frozen slice before other initial rotations") {
    DagSpec dag;
    dag.nodes = {{"initial_robot_rotation", 3}, {"robot_pos_change", 4}, {"competence", 2}};
    dag.edges = {{"initial_robot_rotation", "competence"}, {"robot_pos_change", "competence"}};
    std::vector<DiscreteSample> data;
    const auto add = [&](int init, int pos, int label, int copies) {
        for (int i = 0; i < copies; ++i) {
            DiscreteSample d;
            d.values = {{"initial_robot_rotation", init}, {"robot_pos_change", pos},
                        {"competence", label}};
            data.push_back(std::move(d));
        }
    };
    // Start slice (init=0): satisfying cell at pos=3 (depth 3).
    add(0, 0, 0, 10);
    add(0, 1, 0, 10);
    add(0, 2, 0, 10);
    add(0, 3, 1, 40);
    // Different slice (init=1): satisfying cell right next to the start.
    add(1, 0, 1, 40);

    const CbnModel m = fit_parameters(dag, data, 0.0);
    SUBCASE("in-slice solution wins despite larger depth") {
        const auto sol = search(
            m, {{"initial_robot_rotation", 0}, {"robot_pos_change", 0}}, "competence", 0.9, 5);
        REQUIRE(sol.has_value());
        CHECK(sol->phase == SearchPhase::FixedInitialRotation);
        CHECK(sol->depth == 3);
        // Phase soundness: initial rotation unchanged.
        const auto idx = std::find(sol->variables.begin(), sol->variables.end(),
                                   "initial_robot_rotation") -
                         sol->variables.begin();
        CHECK(sol->solution[idx] == 0);
        // Path moves one variable by one step each hop.
        for (std::size_t i = 1; i < sol->path.size(); ++i) {
            int diff = 0;
            for (std::size_t v = 0; v < sol->path[i].size(); ++v) {
                diff += std::abs(sol->path[i][v] - sol->path[i - 1][v]);
            }
            CHECK(diff == 1);
        }
    }
    SUBCASE("an m above every count exhausts both phases") {
        const auto sol = search(
            m, {{"initial_robot_rotation", 0}, {"robot_pos_change", 0}}, "competence", 0.9, 41);
        CHECK_FALSE(sol.has_value());
    }
}

TEST_CASE("phase 2 finds solutions outside the start slice") {
    DagSpec dag;
    dag.nodes = {{"initial_robot_rotation", 2}, {"robot_pos_change", 2}, {"competence", 2}};
    dag.edges = {{"initial_robot_rotation", "competence"}, {"robot_pos_change", "competence"}};
    std::vector<DiscreteSample> data;
    const auto add = [&](int init, int pos, int label, int copies) {
        for (int i = 0; i < copies; ++i) {
            DiscreteSample d;
            d.values = {{"initial_robot_rotation", init}, {"robot_pos_change", pos},
                        {"competence", label}};
            data.push_back(std::move(d));
        }
    };
    add(0, 0, 0, 10);
    add(0, 1, 0, 10); // slice exhausted, nothing satisfies
    add(1, 0, 1, 20);
    const CbnModel m = fit_parameters(dag, data, 0.0);
    const auto sol = search(m, {{"initial_robot_rotation", 0}, {"robot_pos_change", 0}},
                            "competence", 0.9, 5);
    REQUIRE(sol.has_value());
    CHECK(sol->phase == SearchPhase::Relaxed);
    CHECK(sol->depth == 1);
    CHECK(sol->solution == Parameterization{1, 0});
}

TEST_CASE("search matches the brute-force phase-aware oracle on random models") {
    Rng rng(4242);
    int found = 0;
    for (int trial = 0; trial < 40; ++trial) {
        LambdaConfig lambda;
        lambda.initial_robot_rotation = 2 + static_cast<int>(rng.next_below(2));
        lambda.total_robot_rotation = 2 + static_cast<int>(rng.next_below(2));
        lambda.robot_pos_change = 3 + static_cast<int>(rng.next_below(2));
        lambda.robot_rotation_change = 3 + static_cast<int>(rng.next_below(2));
        lambda.human_pos_change = 2;
        const CbnModel m = toy_model(rng, lambda, 150 + static_cast<int>(rng.next_below(200)));
        const CptTable& t = m.cpts.at("competence");
        const double eps = 0.55 + 0.1 * static_cast<double>(rng.next_below(4));
        const std::int64_t mm = static_cast<std::int64_t>(rng.next_below(3));

        std::map<std::string, int> start;
        std::vector<int> start_vec;
        for (const std::string& p : t.parents) {
            const int v = static_cast<int>(rng.next_below(m.dag.cardinality(p)));
            start[p] = v;
            start_vec.push_back(v);
        }
        const int frozen_idx = static_cast<int>(
            std::find(t.parents.begin(), t.parents.end(), "initial_robot_rotation") -
            t.parents.begin());

        const auto sol = search(m, start, "competence", eps, mm);
        const OracleOutcome expected =
            oracle_search(m, start_vec, "competence", eps, mm, frozen_idx);
        REQUIRE(sol.has_value() == expected.found);
        if (!sol) continue;
        ++found;
        CHECK(sol->depth == expected.depth);
        CHECK(sol->phase == expected.phase);
        // Returned artifacts re-check against the model.
        const std::uint64_t cfg = t.config_index(sol->solution);
        CHECK(t.count(cfg) > mm);
        CHECK(t.row(cfg).probs[1] > eps);
        CHECK(sol->path.front() == start_vec);
        CHECK(sol->path.back() == sol->solution);
        CHECK(static_cast<int>(sol->path.size()) == sol->depth + 1);
        for (std::size_t i = 1; i < sol->path.size(); ++i) {
            int diff = 0;
            for (std::size_t v = 0; v < sol->path[i].size(); ++v) {
                diff += std::abs(sol->path[i][v] - sol->path[i - 1][v]);
            }
            CHECK(diff == 1);
        }
        if (sol->phase == SearchPhase::FixedInitialRotation) {
            CHECK(sol->solution[frozen_idx] == start_vec[frozen_idx]);
        }
    }
    CHECK(found > 5); // the ensemble must exercise the solution path
}

namespace {

DiscretizationModel realize_disc(const Series& pos_centroid, const Series& rot_centroid) {
    DiscretizationModel disc;
    VariableModel pos;
    pos.spec = {"robot_pos_change", VariableKind::TimeSeries, 1};
    pos.time_series.centroids = {pos_centroid};
    VariableModel rot;
    rot.spec = {"robot_rotation_change", VariableKind::TimeSeries, 1};
    rot.time_series.centroids = {rot_centroid};
    disc.variables.push_back(pos);
    disc.variables.push_back(rot);
    return disc;
}

CounterfactualSolution solution_for(int pos_idx, int rot_idx) {
    CounterfactualSolution sol;
    sol.variables = {"initial_robot_rotation", "total_robot_rotation", "robot_rotation_change",
                     "robot_pos_change"};
    sol.solution = {0, 0, rot_idx, pos_idx};
    sol.p_solution = 0.95;
    sol.depth = 1;
    sol.phase = SearchPhase::FixedInitialRotation;
    return sol;
}

Series constant_series(double v) {
    Series s;
    s.fill(v);
    return s;
}

} // namespace

TEST_CASE("an all-zero position centroid keeps the robot in place") {
    const auto disc = realize_disc(constant_series(0.0), constant_series(0.0));
    const auto traj = realize_trajectory(solution_for(0, 0), disc, {1.0, 2.0, 0.3}, {5.0, 2.0});
    for (int t = 0; t < kSeriesLen; ++t) {
        CHECK(traj.positions[t].x == doctest::Approx(1.0));
        CHECK(traj.positions[t].y == doctest::Approx(2.0));
        CHECK(traj.headings[t] == doctest::Approx(0.3));
    }
}

TEST_CASE("a -4 m terminal centroid lands 4 m along the goal line") {
    Series pos{};
    for (int t = 0; t < kSeriesLen; ++t) pos[t] = -4.0 * t / 8.0;
    const auto disc = realize_disc(pos, constant_series(0.0));
    const auto traj = realize_trajectory(solution_for(0, 0), disc, {0.0, 0.0, 0.0}, {6.0, 0.0});
    CHECK(traj.positions[8].x == doctest::Approx(4.0));
    CHECK(traj.positions[8].y == doctest::Approx(0.0));
    // Never overshoots a closer goal.
    const auto clamped = realize_trajectory(solution_for(0, 0), disc, {0.0, 0.0, 0.0}, {3.0, 0.0});
    CHECK(clamped.positions[8].x == doctest::Approx(3.0));
    for (int t = 0; t < kSeriesLen; ++t) CHECK(clamped.positions[t].x <= 3.0 + 1e-12);
}

TEST_CASE("rotations are down-scaled to the needed rotation, never up") {
    Series rot{};
    for (int t = 0; t < kSeriesLen; ++t) rot[t] = (kPi / 2.0) * t / 8.0; // peak 90 degrees
    Series pos{};
    for (int t = 0; t < kSeriesLen; ++t) pos[t] = -2.0 * t / 8.0;
    const auto disc = realize_disc(pos, rot);
    // Goal bearing 45 degrees from the start heading.
    const auto traj =
        realize_trajectory(solution_for(0, 0), disc, {0.0, 0.0, 0.0}, {4.0, 4.0});
    for (int t = 0; t < kSeriesLen; ++t) {
        CHECK(traj.headings[t] == doctest::Approx(0.5 * rot[t])); // s = 0.5
    }
    // Needed rotation larger than the centroid peak: applied unscaled.
    const auto unscaled =
        realize_trajectory(solution_for(0, 0), disc, {0.0, 0.0, -2.0}, {0.0, 4.0});
    for (int t = 0; t < kSeriesLen; ++t) {
        CHECK(unscaled.headings[t] == doctest::Approx(-2.0 + rot[t]));
    }
}

TEST_CASE("realize_trajectory rejects a degenerate goal") {
    const auto disc = realize_disc(constant_series(0.0), constant_series(0.0));
    CHECK_THROWS_AS(
        realize_trajectory(solution_for(0, 0), disc, {1.0, 1.0, 0.0}, {1.0, 1.0 + 1e-9}),
        std::domain_error);
}

TEST_CASE("re-featurizing a realized trajectory recovers the position cluster") {
    // Two distinct position centroids and two rotation centroids.
    Series approach{};
    Series stall{};
    Series rot_flat = constant_series(0.0);
    Series rot_turn{};
    for (int t = 0; t < kSeriesLen; ++t) {
        approach[t] = -3.0 * t / 8.0;
        rot_turn[t] = 0.8 * std::sin(kPi * t / 8.0);
    }
    DiscretizationModel disc;
    VariableModel pos;
    pos.spec = {"robot_pos_change", VariableKind::TimeSeries, 2};
    pos.time_series.centroids = {approach, stall};
    VariableModel rot;
    rot.spec = {"robot_rotation_change", VariableKind::TimeSeries, 2};
    rot.time_series.centroids = {rot_flat, rot_turn};
    disc.variables.push_back(pos);
    disc.variables.push_back(rot);

    CounterfactualSolution sol = solution_for(0, 1);
    const Pose2 start{2.0, -1.0, 0.4};
    const Vec2 goal{8.0, 1.5};
    const auto traj = realize_trajectory(sol, disc, start, goal);
    const RawSample raw = trajectory_to_raw_sample(traj, goal);
    const FeatureSample f = compute_features(raw);
    CHECK(nearest_centroid(pos.time_series.centroids, f.robot_pos_change) == 0);
}

TEST_CASE("trajectory CSV export has one row per step") {
    const auto disc = realize_disc(constant_series(0.0), constant_series(0.0));
    const auto traj = realize_trajectory(solution_for(0, 0), disc, {0, 0, 0}, {2, 0});
    const std::string path = "test_traj.csv";
    write_trajectory_csv(path, traj);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 1 + kSeriesLen);
    std::remove(path.c_str());
}
