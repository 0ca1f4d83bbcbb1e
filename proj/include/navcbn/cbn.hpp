#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "navcbn/discretization.hpp"

#include <nlohmann/json_fwd.hpp>

namespace navcbn {

struct DagNode {
    std::string name;
    int cardinality = 2;
};

struct DagSpec {
    std::vector<DagNode> nodes;
    std::vector<std::pair<std::string, std::string>> edges; // parent -> child

    int node_index(const std::string& name) const; // -1 when absent
    int cardinality(const std::string& name) const;
    std::vector<std::string> parents(const std::string& name) const;  // edge order
    std::vector<std::string> children(const std::string& name) const; // edge order
};

struct DagValidation {
    bool ok = false;
    std::vector<std::string> topo_order; // filled when ok
    std::vector<std::string> cycle;      // one concrete cycle when not ok
    std::string message;
};

DagValidation validate_dag(const DagSpec& dag);

// The Robot-Following graph: initial rotation drives the rotation series,
// rotation constrains position, all four motion variables drive competence
// and intention, and human movement follows position and both perceptions.
DagSpec default_dag(const LambdaConfig& lambda = {});

nlohmann::json dag_to_json(const DagSpec& dag);
DagSpec dag_from_json(const nlohmann::json& j);
LambdaConfig lambda_from_dag(const DagSpec& dag);

struct CptRow {
    std::vector<double> probs;
    std::int64_t count = 0; // raw training rows with this parent configuration
};

// Multinomial conditional probability table. Only parent configurations seen
// in training are stored; absent rows read back as uniform with count 0.
struct CptTable {
    std::string node;
    int node_card = 0;
    std::vector<std::string> parents;
    std::vector<int> parent_cards;
    std::map<std::uint64_t, CptRow> rows;

    std::uint64_t num_configs() const;
    std::uint64_t config_index(std::span<const int> parent_values) const;
    std::vector<int> config_values(std::uint64_t index) const;
    CptRow row(std::uint64_t config) const;
    std::int64_t count(std::uint64_t config) const;
};

struct CbnModel {
    DagSpec dag;
    std::map<std::string, CptTable> cpts;
    double alpha = 1.0;
    std::optional<DiscretizationModel> discretization;

    // Pipeline defaults persisted with the model.
    double epsilon = 0.9;
    std::int64_t count_threshold = 5;
    TotalRotationMode total_rotation_mode = TotalRotationMode::AsWritten;
    LambdaConfig lambda;
};

// theta_{x|u} = (count(x,u) + alpha) / (n(u) + alpha * |states|); raw counts
// stored unsmoothed. Samples must assign every DAG node a value within its
// cardinality (SchemaError otherwise).
CbnModel fit_parameters(const DagSpec& dag, const std::vector<DiscreteSample>& data,
                        double alpha);

struct InferenceResult {
    std::vector<double> posterior;     // empty when impossible
    double evidence_likelihood = 0.0;  // P(evidence) under the model
    bool impossible = false;
};

// Exact posterior by enumeration over completions of the non-evidence
// variables. When the evidence covers the query's parents and touches none
// of its descendants, the posterior is the CPT row itself (bit-for-bit).
InferenceResult infer(const CbnModel& model, const std::map<std::string, int>& evidence,
                      const std::string& query);

// Product of local probabilities for one full assignment (Eq. of the joint
// factorization); exposed for enumeration-style checks.
double joint_probability(const CbnModel& model, const std::map<std::string, int>& assignment);

struct Prediction {
    double p_competence = 0.0;
    double p_intention = 0.0;
    int competence_label = 0; // 1 iff p >= 0.5
    int intention_label = 0;
};

// Conditions each target on its parent configuration only.
Prediction predict(const CbnModel& model, const DiscreteSample& d);

nlohmann::json model_to_json(const CbnModel& model);
CbnModel model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const CbnModel& model);
CbnModel load_model(const std::string& path);

inline constexpr int kModelFormatVersion = 1;

} // namespace navcbn
