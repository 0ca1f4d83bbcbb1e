#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "navcbn/discretization.hpp"
#include "navcbn/errors.hpp"
#include "navcbn/rng.hpp"

#include <nlohmann/json.hpp>

using namespace navcbn;

namespace {

Series ramp_to(double terminal) {
    Series s{};
    for (int t = 0; t < kSeriesLen; ++t) s[t] = terminal * t / 8.0;
    return s;
}

std::vector<Series> random_series(Rng& rng, int n, double lo = -5.0, double hi = 5.0) {
    std::vector<Series> out(n);
    for (Series& s : out) {
        for (double& v : s) v = rng.uniform(lo, hi);
    }
    return out;
}

// Feature samples whose three series are all drawn from the given bundles.
FeatureSample feature_from(const Series& pos, const Series& rot, double initial, double total,
                           int comp, int inten) {
    FeatureSample f;
    f.participant_id = "p0";
    f.scenario_id = "s0";
    f.robot_pos_change = pos;
    f.robot_rotation_change = rot;
    f.human_pos_change = pos;
    f.initial_robot_rotation = initial;
    f.total_robot_rotation = total;
    f.competence = comp;
    f.intention = inten;
    return f;
}

} // namespace

TEST_CASE("kmeans with k=1 returns the element-wise mean") {
    Rng rng(3);
    const auto series = random_series(rng, 40);
    const KmeansResult res = kmeans(series, 1, 99);
    REQUIRE(res.centroids.size() == 1);
    for (int t = 0; t < kSeriesLen; ++t) {
        double mean = 0.0;
        for (const Series& s : series) mean += s[t];
        mean /= series.size();
        CHECK(res.centroids[0][t] == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("kmeans with k=n and distinct inputs isolates every point") {
    Rng rng(5);
    const auto series = random_series(rng, 12);
    const KmeansResult res = kmeans(series, 12, 7);
    CHECK(res.inertia == doctest::Approx(0.0));
    std::set<int> labels(res.labels.begin(), res.labels.end());
    CHECK(labels.size() == 12);
}

TEST_CASE("kmeans separates two well-separated bundles") {
    Rng rng(11);
    std::vector<Series> series;
    std::vector<int> truth;
    for (int i = 0; i < 60; ++i) {
        Series s{};
        const bool ramp = i % 2 == 0;
        for (int t = 0; t < kSeriesLen; ++t) {
            s[t] = (ramp ? -4.0 * t / 8.0 : 0.0) + rng.uniform(-0.05, 0.05);
        }
        series.push_back(s);
        truth.push_back(ramp ? 1 : 0);
    }
    const KmeansResult res = kmeans(series, 2, 123);

    // Brute-force oracle: bundle means and nearest-mean assignment.
    std::array<Series, 2> bundle_mean{};
    std::array<int, 2> bundle_count{};
    for (std::size_t i = 0; i < series.size(); ++i) {
        for (int t = 0; t < kSeriesLen; ++t) bundle_mean[truth[i]][t] += series[i][t];
        ++bundle_count[truth[i]];
    }
    for (int b = 0; b < 2; ++b) {
        for (int t = 0; t < kSeriesLen; ++t) bundle_mean[b][t] /= bundle_count[b];
    }
    // Each centroid is within 0.1 of one bundle mean and separation is exact.
    for (int b = 0; b < 2; ++b) {
        const int c = nearest_centroid(res.centroids, bundle_mean[b]);
        for (int t = 0; t < kSeriesLen; ++t) {
            CHECK(std::abs(res.centroids[c][t] - bundle_mean[b][t]) < 0.1);
        }
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (truth[i] == b) CHECK(res.labels[i] == c);
        }
    }
}

TEST_CASE("kmeans rejects invalid arguments") {
    Rng rng(1);
    const auto series = random_series(rng, 5);
    CHECK_THROWS_AS(kmeans(series, 6, 0), std::domain_error);
    CHECK_THROWS_AS(kmeans(series, 0, 0), std::domain_error);
    CHECK_THROWS_AS(kmeans({}, 1, 0), std::domain_error);
}

TEST_CASE("kmeans inertia trace is non-increasing") {
    Rng rng(17);
    const auto series = random_series(rng, 300);
    const KmeansResult res = kmeans(series, 8, 42);
    REQUIRE(res.inertia_trace.size() >= 1);
    for (std::size_t i = 1; i < res.inertia_trace.size(); ++i) {
        CHECK(res.inertia_trace[i] <= res.inertia_trace[i - 1] + 1e-9);
    }
}

TEST_CASE("kmeans is bit-deterministic per seed") {
    Rng rng(23);
    const auto series = random_series(rng, 100);
    const KmeansResult a = kmeans(series, 5, 1234);
    const KmeansResult b = kmeans(series, 5, 1234);
    CHECK(a.labels == b.labels);
    for (std::size_t j = 0; j < a.centroids.size(); ++j) {
        for (int t = 0; t < kSeriesLen; ++t) CHECK(a.centroids[j][t] == b.centroids[j][t]);
    }
}

TEST_CASE("quantile_edges matches linear-interpolation quantiles") {
    CHECK(quantile_edges({1, 2, 3, 4}, 2) == std::vector<double>{2.5});
    const auto edges = quantile_edges({1, 2, 3, 4, 5, 6, 7, 8}, 4);
    REQUIRE(edges.size() == 3);
    CHECK(edges[0] == doctest::Approx(2.75));
    CHECK(edges[1] == doctest::Approx(4.5));
    CHECK(edges[2] == doctest::Approx(6.25));
}

TEST_CASE("quantile_edges error paths") {
    CHECK_THROWS_AS(quantile_edges({5, 5, 5, 5}, 2), DegenerateEdgesError);
    CHECK_THROWS_AS(quantile_edges({1, 2}, 3), std::domain_error);
    CHECK_THROWS_AS(quantile_edges({1, 1, 1, 1, 1, 2}, 3), DegenerateEdgesError);
}

TEST_CASE("quantile bins on distinct training data are balanced") {
    Rng rng(31);
    for (int k : {2, 3, 4, 5}) {
        std::vector<double> values;
        for (int i = 0; i < 103; ++i) values.push_back(rng.uniform(-10.0, 10.0));
        const auto edges = quantile_edges(values, k);
        std::vector<int> bins(k, 0);
        for (double v : values) {
            const auto it = std::upper_bound(edges.begin(), edges.end(), v);
            ++bins[it - edges.begin()];
        }
        const auto [lo, hi] = std::minmax_element(bins.begin(), bins.end());
        CHECK(*hi - *lo <= 1);
    }
}

namespace {

std::vector<FeatureSample> archetype_dataset(int per_bundle) {
    // Three known series archetypes; labels alternate so categoricals see
    // both values.
    std::vector<FeatureSample> data;
    Rng rng(71);
    const std::array<Series, 3> pos{ramp_to(-4.0), ramp_to(0.0), ramp_to(3.0)};
    const std::array<Series, 3> rot{ramp_to(0.5), ramp_to(-0.5), ramp_to(2.0)};
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < per_bundle; ++i) {
            Series p = pos[b];
            Series r = rot[b];
            for (int t = 1; t < kSeriesLen; ++t) {
                p[t] += rng.uniform(-0.03, 0.03);
                r[t] += rng.uniform(-0.03, 0.03);
            }
            FeatureSample f = feature_from(p, r, rng.uniform(-3.0, 3.0), rng.uniform(0.0, 12.0),
                                           i % 2, (i + b) % 2);
            data.push_back(f);
        }
    }
    return data;
}

} // namespace

TEST_CASE("fit_discretization recovers known archetype means") {
    const auto data = archetype_dataset(30);
    LambdaConfig lambda;
    lambda.initial_robot_rotation = 3;
    lambda.total_robot_rotation = 3;
    lambda.robot_pos_change = 3;
    lambda.robot_rotation_change = 3;
    lambda.human_pos_change = 3;
    const DiscretizationModel model =
        fit_discretization(data, default_variable_specs(lambda), 0);

    const auto& centroids = model.variable("robot_pos_change").time_series.centroids;
    REQUIRE(centroids.size() == 3);
    // Canonical order sorts by terminal value: -4, 0, 3.
    const std::array<double, 3> terminals{-4.0, 0.0, 3.0};
    for (int b = 0; b < 3; ++b) {
        for (int t = 0; t < kSeriesLen; ++t) {
            CHECK(std::abs(centroids[b][t] - terminals[b] * t / 8.0) < 0.1);
        }
    }
    // Categorical passthrough ignores lambda.
    CHECK(model.variable("competence").categorical.categories == std::vector<int>{0, 1});
    CHECK(model.variable("intention").categorical.categories == std::vector<int>{0, 1});
    CHECK(model.cardinality("competence") == 2);
}

TEST_CASE("paper cluster configuration fits on a large enough dataset") {
    std::vector<FeatureSample> data;
    Rng rng(101);
    for (int i = 0; i < 250; ++i) {
        Series p{}, r{};
        for (int t = 0; t < kSeriesLen; ++t) {
            p[t] = rng.uniform(-5.0, 2.0) * t / 8.0;
            r[t] = rng.uniform(-2.0, 2.0) * t / 8.0;
        }
        data.push_back(feature_from(p, r, rng.uniform(-3.1, 3.1), rng.uniform(0.0, 15.0),
                                    i % 2, (i / 2) % 2));
    }
    const DiscretizationModel model =
        fit_discretization(data, default_variable_specs(LambdaConfig{}), 7);
    CHECK(model.variable("initial_robot_rotation").continuous.edges.size() == 3);
    CHECK(model.variable("total_robot_rotation").continuous.edges.size() == 3);
    CHECK(model.variable("robot_pos_change").time_series.centroids.size() == 10);
    CHECK(model.variable("robot_rotation_change").time_series.centroids.size() == 11);

    // Canonical ordering: ascending terminal values.
    const auto& cents = model.variable("robot_pos_change").time_series.centroids;
    for (std::size_t i = 1; i < cents.size(); ++i) CHECK(cents[i - 1][8] <= cents[i][8]);
}

TEST_CASE("fit errors are tagged with the variable name") {
    std::vector<FeatureSample> data;
    for (int i = 0; i < 10; ++i) {
        data.push_back(feature_from(ramp_to(-1.0), ramp_to(0.5), 0.25 + 0.1 * i, 1.0, i % 2, i % 2));
    }
    // total_robot_rotation is constant -> degenerate quantile edges.
    try {
        fit_discretization(data, default_variable_specs(LambdaConfig{2, 2, 2, 2, 2}), 0);
        FAIL("expected DegenerateEdgesError");
    } catch (const DegenerateEdgesError& e) {
        CHECK(std::string(e.what()).find("total_robot_rotation") != std::string::npos);
    }
}

TEST_CASE("assign returns the fixed point of every centroid") {
    const auto data = archetype_dataset(20);
    LambdaConfig lambda{2, 2, 3, 3, 3};
    const DiscretizationModel model =
        fit_discretization(data, default_variable_specs(lambda), 5);
    const auto& cents = model.variable("robot_pos_change").time_series.centroids;
    for (std::size_t j = 0; j < cents.size(); ++j) {
        CHECK(nearest_centroid(cents, cents[j]) == static_cast<int>(j));
    }
}

TEST_CASE("assign clamps out-of-range continuous values") {
    const auto data = archetype_dataset(20);
    LambdaConfig lambda{3, 3, 3, 3, 3};
    const DiscretizationModel model =
        fit_discretization(data, default_variable_specs(lambda), 5);
    FeatureSample probe = data[0];
    probe.initial_robot_rotation = -100.0;
    CHECK(assign(model, probe).values.at("initial_robot_rotation") == 0);
    probe.initial_robot_rotation = 100.0;
    CHECK(assign(model, probe).values.at("initial_robot_rotation") == 2);
    // Value exactly on the last edge lands in the last bin.
    probe.initial_robot_rotation = model.variable("initial_robot_rotation").continuous.edges.back();
    CHECK(assign(model, probe).values.at("initial_robot_rotation") == 2);

    probe.competence = 7; // unseen category
    CHECK_THROWS_AS(assign(model, probe), std::domain_error);
}

TEST_CASE("assign agrees with an exhaustive nearest-centroid scan") {
    const auto data = archetype_dataset(25);
    LambdaConfig lambda{3, 3, 4, 4, 4};
    const DiscretizationModel model =
        fit_discretization(data, default_variable_specs(lambda), 29);
    Rng rng(301);
    const auto probes = random_series(rng, 50);
    const auto& cents = model.variable("robot_pos_change").time_series.centroids;
    for (const Series& s : probes) {
        FeatureSample probe = data[0];
        probe.robot_pos_change = s;
        // Exhaustive scan with explicit squared distances.
        int best = -1;
        double best_d = 1e300;
        for (std::size_t j = 0; j < cents.size(); ++j) {
            double d = 0.0;
            for (int t = 0; t < kSeriesLen; ++t) d += (cents[j][t] - s[t]) * (cents[j][t] - s[t]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(j);
            }
        }
        CHECK(assign(model, probe).values.at("robot_pos_change") == best);
    }
}

TEST_CASE("training series assign back to their kmeans labels") {
    Rng rng(37);
    auto series = random_series(rng, 200);
    const KmeansResult res = kmeans(series, 6, 99);
    const std::vector<int> order = canonical_order(res.centroids);
    std::vector<Series> reordered;
    for (int old_idx : order) reordered.push_back(res.centroids[old_idx]);
    std::vector<int> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < series.size(); ++i) {
        CHECK(nearest_centroid(reordered, series[i]) == rank[res.labels[i]]);
    }
}

TEST_CASE("fit_discretization is deterministic per seed") {
    const auto data = archetype_dataset(30);
    LambdaConfig lambda{3, 3, 3, 3, 3};
    const auto a = fit_discretization(data, default_variable_specs(lambda), 77);
    const auto b = fit_discretization(data, default_variable_specs(lambda), 77);
    CHECK(discretization_to_json(a).dump() == discretization_to_json(b).dump());
}

TEST_CASE("discretization JSON round-trips") {
    const auto data = archetype_dataset(20);
    LambdaConfig lambda{2, 3, 3, 3, 3};
    const auto model = fit_discretization(data, default_variable_specs(lambda), 13);
    const auto restored = discretization_from_json(discretization_to_json(model));
    CHECK(discretization_to_json(restored) == discretization_to_json(model));
    // Assignments agree after the round trip.
    for (const FeatureSample& f : data) {
        CHECK(assign(model, f).values == assign(restored, f).values);
    }
}
