#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "navcbn/features.hpp"

#include <nlohmann/json_fwd.hpp>

namespace navcbn {

using Series = std::array<double, kSeriesLen>;

enum class VariableKind { TimeSeries, Continuous, Categorical };

const char* to_string(VariableKind kind);
VariableKind variable_kind_from_string(const std::string& s);

struct VariableSpec {
    std::string name;
    VariableKind kind = VariableKind::Continuous;
    int cardinality = 2; // ignored for categorical variables
};

// Cluster/interval counts per variable. Defaults follow the selected
// configuration: four intervals for the two rotation scalars, ten position
// clusters and eleven rotation clusters.
struct LambdaConfig {
    int initial_robot_rotation = 4;
    int total_robot_rotation = 4;
    int robot_pos_change = 10;
    int robot_rotation_change = 11;
    int human_pos_change = 10;
};

std::vector<VariableSpec> default_variable_specs(const LambdaConfig& lambda = {});

struct KmeansResult {
    std::vector<Series> centroids; // in raw (unsorted) order
    std::vector<int> labels;
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> inertia_trace; // one entry per assignment pass
};

// Lloyd's algorithm with k-means++ seeding. Deterministic per seed. Stops on
// stable assignments or after max_iter passes. Empty clusters are re-seeded
// at the point farthest from its current centroid.
KmeansResult kmeans(const std::vector<Series>& series, int k, std::uint64_t seed,
                    int max_iter = 300);

int nearest_centroid(const std::vector<Series>& centroids, const Series& s);

// Permutation (new index -> old index) placing centroids in canonical order:
// ascending terminal value c[8], ties by c[4], then by mean.
std::vector<int> canonical_order(const std::vector<Series>& centroids);

// Linear-interpolation quantiles of the sorted values at (j+1)/k,
// j = 0..k-2. Throws DegenerateEdgesError when the edges are not strictly
// ascending or the input is constant.
std::vector<double> quantile_edges(std::vector<double> values, int k);

struct TimeSeriesModel {
    std::vector<Series> centroids; // canonical order
    std::uint64_t seed = 0;
    int iterations = 0;
    double inertia = 0.0;
};

struct ContinuousModel {
    std::vector<double> edges; // strictly ascending, cardinality - 1 entries
};

struct CategoricalModel {
    std::vector<int> categories; // distinct, ascending
};

struct VariableModel {
    VariableSpec spec;
    TimeSeriesModel time_series;
    ContinuousModel continuous;
    CategoricalModel categorical;
};

struct DiscretizationModel {
    std::uint64_t seed = 0;
    std::vector<VariableModel> variables; // canonical variable order

    const VariableModel& variable(const std::string& name) const;
    bool has_variable(const std::string& name) const;
    int cardinality(const std::string& name) const;
};

// One fully discretized observation: per-variable 0-based indices.
struct DiscreteSample {
    std::string participant_id;
    std::string scenario_id;
    std::map<std::string, int> values;

    int competence() const { return values.at("competence"); }
    int intention() const { return values.at("intention"); }
};

// Fits one model per variable spec: k-means for time series, quantile edges
// for continuous scalars, distinct-value passthrough for categoricals.
// Clustering errors are re-thrown tagged with the variable name.
DiscretizationModel fit_discretization(const std::vector<FeatureSample>& data,
                                       const std::vector<VariableSpec>& specs,
                                       std::uint64_t seed);

// Nearest centroid for time series (ties to the lowest canonical index),
// edge binning with clamping for continuous values, exact lookup for
// categoricals (unseen value -> std::domain_error).
DiscreteSample assign(const DiscretizationModel& model, const FeatureSample& f);

int assign_variable(const DiscretizationModel& model, const std::string& name,
                    const FeatureSample& f);

nlohmann::json discretization_to_json(const DiscretizationModel& model);
DiscretizationModel discretization_from_json(const nlohmann::json& j);

// CSV of cluster means (cluster,t0..t8) for one time-series variable.
void write_cluster_means_csv(const std::string& path, const DiscretizationModel& model,
                             const std::string& variable);

} // namespace navcbn
