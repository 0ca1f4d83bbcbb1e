#include "navcbn/cbn.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <stdexcept>

#include "navcbn/errors.hpp"

#include <nlohmann/json.hpp>

namespace navcbn {

using nlohmann::json;

int DagSpec::node_index(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

int DagSpec::cardinality(const std::string& name) const {
    const int idx = node_index(name);
    if (idx < 0) throw std::invalid_argument("dag has no node: " + name);
    return nodes[idx].cardinality;
}

std::vector<std::string> DagSpec::parents(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [from, to] : edges) {
        if (to == name) out.push_back(from);
    }
    return out;
}

std::vector<std::string> DagSpec::children(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [from, to] : edges) {
        if (from == name) out.push_back(to);
    }
    return out;
}

DagValidation validate_dag(const DagSpec& dag) {
    DagValidation result;
    std::set<std::string> names;
    for (const DagNode& n : dag.nodes) {
        if (!names.insert(n.name).second) {
            result.message = "duplicate node: " + n.name;
            return result;
        }
        if (n.cardinality < 1) {
            result.message = "node " + n.name + " has cardinality < 1";
            return result;
        }
    }
    std::set<std::pair<std::string, std::string>> seen_edges;
    for (const auto& e : dag.edges) {
        if (!names.count(e.first) || !names.count(e.second)) {
            result.message = "edge references undeclared node: " + e.first + " -> " + e.second;
            return result;
        }
        if (e.first == e.second) {
            result.message = "self loop on " + e.first;
            return result;
        }
        if (!seen_edges.insert(e).second) {
            result.message = "duplicate edge: " + e.first + " -> " + e.second;
            return result;
        }
    }

    // Kahn's algorithm for the topological order.
    std::map<std::string, int> indegree;
    for (const DagNode& n : dag.nodes) indegree[n.name] = 0;
    for (const auto& e : dag.edges) ++indegree[e.second];
    std::deque<std::string> ready;
    for (const DagNode& n : dag.nodes) {
        if (indegree[n.name] == 0) ready.push_back(n.name);
    }
    while (!ready.empty()) {
        std::string node = ready.front();
        ready.pop_front();
        result.topo_order.push_back(node);
        for (const std::string& child : dag.children(node)) {
            if (--indegree[child] == 0) ready.push_back(child);
        }
    }
    if (result.topo_order.size() == dag.nodes.size()) {
        result.ok = true;
        return result;
    }

    // Extract one concrete cycle: every node left unresolved by Kahn's
    // algorithm has an unresolved parent, so walking backwards must repeat.
    result.topo_order.clear();
    std::string cursor;
    for (const DagNode& n : dag.nodes) {
        if (indegree[n.name] > 0) {
            cursor = n.name;
            break;
        }
    }
    std::vector<std::string> walk;
    std::map<std::string, int> pos;
    while (!pos.count(cursor)) {
        pos[cursor] = static_cast<int>(walk.size());
        walk.push_back(cursor);
        for (const auto& e : dag.edges) {
            if (e.second == cursor && indegree[e.first] > 0) {
                cursor = e.first;
                break;
            }
        }
    }
    result.cycle.assign(walk.begin() + pos[cursor], walk.end());
    std::reverse(result.cycle.begin(), result.cycle.end()); // edge direction order
    result.message = "cycle detected: ";
    for (const std::string& n : result.cycle) result.message += n + " -> ";
    result.message += result.cycle.front();
    return result;
}

DagSpec default_dag(const LambdaConfig& lambda) {
    DagSpec d;
    d.nodes = {{"initial_robot_rotation", lambda.initial_robot_rotation},
               {"total_robot_rotation", lambda.total_robot_rotation},
               {"robot_rotation_change", lambda.robot_rotation_change},
               {"robot_pos_change", lambda.robot_pos_change},
               {"competence", 2},
               {"intention", 2},
               {"human_pos_change", lambda.human_pos_change}};
    d.edges = {
        {"initial_robot_rotation", "robot_rotation_change"},
        {"robot_rotation_change", "robot_pos_change"},
        {"initial_robot_rotation", "competence"},
        {"total_robot_rotation", "competence"},
        {"robot_rotation_change", "competence"},
        {"robot_pos_change", "competence"},
        {"initial_robot_rotation", "intention"},
        {"total_robot_rotation", "intention"},
        {"robot_rotation_change", "intention"},
        {"robot_pos_change", "intention"},
        {"robot_pos_change", "human_pos_change"},
        {"competence", "human_pos_change"},
        {"intention", "human_pos_change"},
    };
    return d;
}

json dag_to_json(const DagSpec& dag) {
    json nodes = json::array();
    for (const DagNode& n : dag.nodes) {
        nodes.push_back(json{{"name", n.name}, {"cardinality", n.cardinality}});
    }
    json edges = json::array();
    for (const auto& e : dag.edges) edges.push_back(json::array({e.first, e.second}));
    return json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

DagSpec dag_from_json(const json& j) {
    DagSpec d;
    for (const json& n : j.at("nodes")) {
        d.nodes.push_back({n.at("name").get<std::string>(), n.at("cardinality").get<int>()});
    }
    for (const json& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw SchemaError("dag edge must be [from, to]");
        d.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return d;
}

LambdaConfig lambda_from_dag(const DagSpec& dag) {
    LambdaConfig lambda;
    lambda.initial_robot_rotation = dag.cardinality("initial_robot_rotation");
    lambda.total_robot_rotation = dag.cardinality("total_robot_rotation");
    lambda.robot_pos_change = dag.cardinality("robot_pos_change");
    lambda.robot_rotation_change = dag.cardinality("robot_rotation_change");
    lambda.human_pos_change = dag.cardinality("human_pos_change");
    return lambda;
}

std::uint64_t CptTable::num_configs() const {
    std::uint64_t n = 1;
    for (int c : parent_cards) n *= static_cast<std::uint64_t>(c);
    return n;
}

std::uint64_t CptTable::config_index(std::span<const int> parent_values) const {
    if (parent_values.size() != parent_cards.size()) {
        throw std::invalid_argument("config_index: wrong number of parent values for " + node);
    }
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < parent_cards.size(); ++i) {
        if (parent_values[i] < 0 || parent_values[i] >= parent_cards[i]) {
            throw std::invalid_argument("config_index: parent value out of range for " + node);
        }
        idx = idx * static_cast<std::uint64_t>(parent_cards[i]) +
              static_cast<std::uint64_t>(parent_values[i]);
    }
    return idx;
}

std::vector<int> CptTable::config_values(std::uint64_t index) const {
    std::vector<int> values(parent_cards.size());
    for (std::size_t i = parent_cards.size(); i-- > 0;) {
        values[i] = static_cast<int>(index % static_cast<std::uint64_t>(parent_cards[i]));
        index /= static_cast<std::uint64_t>(parent_cards[i]);
    }
    return values;
}

CptRow CptTable::row(std::uint64_t config) const {
    const auto it = rows.find(config);
    if (it != rows.end()) return it->second;
    // Unseen configuration: uniform with zero support.
    return CptRow{std::vector<double>(node_card, 1.0 / node_card), 0};
}

std::int64_t CptTable::count(std::uint64_t config) const {
    const auto it = rows.find(config);
    return it == rows.end() ? 0 : it->second.count;
}

CbnModel fit_parameters(const DagSpec& dag, const std::vector<DiscreteSample>& data,
                        double alpha) {
    const DagValidation v = validate_dag(dag);
    if (!v.ok) throw std::invalid_argument("fit_parameters: " + v.message);
    if (data.empty()) throw std::domain_error("fit_parameters: empty dataset");
    if (alpha < 0.0) throw std::invalid_argument("fit_parameters: alpha must be >= 0");

    CbnModel model;
    model.dag = dag;
    model.alpha = alpha;

    for (const DagNode& n : dag.nodes) {
        CptTable t;
        t.node = n.name;
        t.node_card = n.cardinality;
        t.parents = dag.parents(n.name);
        for (const std::string& p : t.parents) t.parent_cards.push_back(dag.cardinality(p));
        model.cpts.emplace(n.name, std::move(t));
    }

    // Accumulate per-configuration state counts.
    std::map<std::string, std::map<std::uint64_t, std::vector<std::int64_t>>> counts;
    std::vector<int> parent_values;
    for (const DiscreteSample& sample : data) {
        for (const DagNode& n : dag.nodes) {
            const auto it = sample.values.find(n.name);
            if (it == sample.values.end()) {
                throw SchemaError("sample " + sample.participant_id + "/" + sample.scenario_id +
                                  " is not fully observed: missing " + n.name);
            }
            if (it->second < 0 || it->second >= n.cardinality) {
                throw SchemaError("sample value " + std::to_string(it->second) + " for " +
                                  n.name + " exceeds cardinality " +
                                  std::to_string(n.cardinality));
            }
        }
        for (auto& [name, table] : model.cpts) {
            parent_values.clear();
            for (const std::string& p : table.parents) parent_values.push_back(sample.values.at(p));
            const std::uint64_t cfg = table.config_index(parent_values);
            auto& state_counts = counts[name][cfg];
            if (state_counts.empty()) state_counts.assign(table.node_card, 0);
            ++state_counts[sample.values.at(name)];
        }
    }

    for (auto& [name, table] : model.cpts) {
        for (const auto& [cfg, state_counts] : counts[name]) {
            CptRow row;
            row.count = 0;
            for (std::int64_t c : state_counts) row.count += c;
            row.probs.resize(table.node_card);
            const double denom = static_cast<double>(row.count) + alpha * table.node_card;
            for (int x = 0; x < table.node_card; ++x) {
                row.probs[x] = (static_cast<double>(state_counts[x]) + alpha) / denom;
            }
            table.rows.emplace(cfg, std::move(row));
        }
    }
    return model;
}

namespace {

// Nodes reachable from `name` following edges forward.
std::set<std::string> descendants(const DagSpec& dag, const std::string& name) {
    std::set<std::string> out;
    std::deque<std::string> frontier{name};
    while (!frontier.empty()) {
        const std::string node = frontier.front();
        frontier.pop_front();
        for (const std::string& child : dag.children(node)) {
            if (out.insert(child).second) frontier.push_back(child);
        }
    }
    return out;
}

double local_probability(const CptTable& table, const std::vector<int>& full,
                         const std::vector<int>& parent_slots, int value,
                         std::vector<int>& scratch) {
    scratch.clear();
    for (int slot : parent_slots) scratch.push_back(full[slot]);
    return table.row(table.config_index(scratch)).probs[value];
}

} // namespace

double joint_probability(const CbnModel& model, const std::map<std::string, int>& assignment) {
    double prod = 1.0;
    std::vector<int> parent_values;
    for (const DagNode& n : model.dag.nodes) {
        const auto it = assignment.find(n.name);
        if (it == assignment.end()) {
            throw std::invalid_argument("joint_probability: missing value for " + n.name);
        }
        const CptTable& table = model.cpts.at(n.name);
        parent_values.clear();
        for (const std::string& p : table.parents) parent_values.push_back(assignment.at(p));
        prod *= table.row(table.config_index(parent_values)).probs[it->second];
    }
    return prod;
}

InferenceResult infer(const CbnModel& model, const std::map<std::string, int>& evidence,
                      const std::string& query) {
    const int query_idx = model.dag.node_index(query);
    if (query_idx < 0) throw std::invalid_argument("infer: unknown query variable " + query);
    if (evidence.count(query)) {
        throw std::invalid_argument("infer: query variable must not be in the evidence");
    }
    for (const auto& [name, value] : evidence) {
        const int idx = model.dag.node_index(name);
        if (idx < 0) throw std::invalid_argument("infer: unknown evidence variable " + name);
        if (value < 0 || value >= model.dag.nodes[idx].cardinality) {
            throw std::invalid_argument("infer: evidence value out of range for " + name);
        }
    }

    const std::size_t num_nodes = model.dag.nodes.size();
    std::vector<const CptTable*> tables(num_nodes);
    std::vector<std::vector<int>> parent_slots(num_nodes);
    for (std::size_t i = 0; i < num_nodes; ++i) {
        tables[i] = &model.cpts.at(model.dag.nodes[i].name);
        for (const std::string& p : tables[i]->parents) {
            parent_slots[i].push_back(model.dag.node_index(p));
        }
    }

    // Enumerate completions of the non-evidence variables; accumulates both
    // the evidence likelihood and the per-query-state mass.
    std::vector<int> full(num_nodes, 0);
    std::vector<int> free_slots;
    for (std::size_t i = 0; i < num_nodes; ++i) {
        const auto it = evidence.find(model.dag.nodes[i].name);
        if (it != evidence.end()) {
            full[i] = it->second;
        } else {
            free_slots.push_back(static_cast<int>(i));
        }
    }
    const int query_card = model.dag.nodes[query_idx].cardinality;
    std::vector<double> mass(query_card, 0.0);
    double total = 0.0;
    std::vector<int> scratch;
    for (;;) {
        double prod = 1.0;
        for (std::size_t i = 0; i < num_nodes; ++i) {
            prod *= local_probability(*tables[i], full, parent_slots[i], full[i], scratch);
            if (prod == 0.0) break;
        }
        mass[full[query_idx]] += prod;
        total += prod;
        // Odometer over the free variables.
        std::size_t k = 0;
        for (; k < free_slots.size(); ++k) {
            const int slot = free_slots[k];
            if (++full[slot] < model.dag.nodes[slot].cardinality) break;
            full[slot] = 0;
        }
        if (k == free_slots.size()) break;
    }

    InferenceResult result;
    result.evidence_likelihood = total;
    if (total <= 0.0) {
        result.impossible = true;
        return result;
    }

    // With all parents observed and no descendant in the evidence, the local
    // Markov property makes the posterior the CPT row itself; returning the
    // row avoids any enumeration round-off.
    const CptTable& qt = *tables[query_idx];
    bool parents_covered = true;
    std::vector<int> parent_values;
    for (const std::string& p : qt.parents) {
        const auto it = evidence.find(p);
        if (it == evidence.end()) {
            parents_covered = false;
            break;
        }
        parent_values.push_back(it->second);
    }
    if (parents_covered) {
        const std::set<std::string> desc = descendants(model.dag, query);
        bool clean = true;
        for (const auto& [name, value] : evidence) {
            if (desc.count(name)) {
                clean = false;
                break;
            }
        }
        if (clean) {
            result.posterior = qt.row(qt.config_index(parent_values)).probs;
            return result;
        }
    }

    result.posterior.resize(query_card);
    for (int x = 0; x < query_card; ++x) result.posterior[x] = mass[x] / total;
    return result;
}

Prediction predict(const CbnModel& model, const DiscreteSample& d) {
    Prediction out;
    for (const char* target : {"competence", "intention"}) {
        const CptTable& table = model.cpts.at(target);
        std::vector<int> parent_values;
        for (const std::string& p : table.parents) {
            const auto it = d.values.find(p);
            if (it == d.values.end()) {
                throw SchemaError(std::string("predict: sample is missing parent ") + p);
            }
            parent_values.push_back(it->second);
        }
        const double p = table.row(table.config_index(parent_values)).probs[1];
        if (std::string(target) == "competence") {
            out.p_competence = p;
            out.competence_label = p >= 0.5 ? 1 : 0;
        } else {
            out.p_intention = p;
            out.intention_label = p >= 0.5 ? 1 : 0;
        }
    }
    return out;
}

json model_to_json(const CbnModel& model) {
    json cpts = json::object();
    for (const auto& [name, table] : model.cpts) {
        json rows = json::array();
        for (const auto& [cfg, row] : table.rows) {
            rows.push_back(json{{"u", table.config_values(cfg)},
                                {"n", row.count},
                                {"p", row.probs}});
        }
        cpts[name] = json{{"parents", table.parents}, {"rows", std::move(rows)}};
    }
    json j{{"version", kModelFormatVersion},
           {"alpha", model.alpha},
           {"epsilon", model.epsilon},
           {"m", model.count_threshold},
           {"total_rotation_mode", to_string(model.total_rotation_mode)},
           {"lambda",
            json{{"initial_robot_rotation", model.lambda.initial_robot_rotation},
                 {"total_robot_rotation", model.lambda.total_robot_rotation},
                 {"robot_pos_change", model.lambda.robot_pos_change},
                 {"robot_rotation_change", model.lambda.robot_rotation_change},
                 {"human_pos_change", model.lambda.human_pos_change}}},
           {"dag", dag_to_json(model.dag)},
           {"cpts", std::move(cpts)}};
    if (model.discretization) {
        j["discretization"] = discretization_to_json(*model.discretization);
    } else {
        j["discretization"] = nullptr;
    }
    return j;
}

CbnModel model_from_json(const json& j) {
    if (!j.contains("version") || j.at("version").get<int>() != kModelFormatVersion) {
        throw SchemaError("model: missing or unsupported format version");
    }
    CbnModel model;
    model.alpha = j.at("alpha").get<double>();
    model.epsilon = j.value("epsilon", 0.9);
    model.count_threshold = j.value("m", std::int64_t{5});
    model.total_rotation_mode =
        total_rotation_mode_from_string(j.value("total_rotation_mode", "as_written"));
    if (j.contains("lambda")) {
        const json& l = j.at("lambda");
        model.lambda.initial_robot_rotation = l.at("initial_robot_rotation").get<int>();
        model.lambda.total_robot_rotation = l.at("total_robot_rotation").get<int>();
        model.lambda.robot_pos_change = l.at("robot_pos_change").get<int>();
        model.lambda.robot_rotation_change = l.at("robot_rotation_change").get<int>();
        model.lambda.human_pos_change = l.at("human_pos_change").get<int>();
    }
    model.dag = dag_from_json(j.at("dag"));
    const DagValidation v = validate_dag(model.dag);
    if (!v.ok) throw SchemaError("model: " + v.message);
    for (const DagNode& n : model.dag.nodes) {
        CptTable t;
        t.node = n.name;
        t.node_card = n.cardinality;
        t.parents = model.dag.parents(n.name);
        for (const std::string& p : t.parents) t.parent_cards.push_back(model.dag.cardinality(p));
        const json& jt = j.at("cpts").at(n.name);
        const auto parents = jt.at("parents").get<std::vector<std::string>>();
        if (parents != t.parents) throw SchemaError("model: parent order mismatch for " + n.name);
        for (const json& jr : jt.at("rows")) {
            CptRow row;
            row.count = jr.at("n").get<std::int64_t>();
            row.probs = jr.at("p").get<std::vector<double>>();
            if (row.probs.size() != static_cast<std::size_t>(t.node_card)) {
                throw SchemaError("model: probability vector length mismatch for " + n.name);
            }
            const auto u = jr.at("u").get<std::vector<int>>();
            t.rows.emplace(t.config_index(u), std::move(row));
        }
        model.cpts.emplace(n.name, std::move(t));
    }
    if (j.contains("discretization") && !j.at("discretization").is_null()) {
        model.discretization = discretization_from_json(j.at("discretization"));
    }
    return model;
}

void save_model(const std::string& path, const CbnModel& model) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write model: " + path);
    out << model_to_json(model).dump(2) << '\n';
}

CbnModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open model: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("model " + path + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace navcbn
