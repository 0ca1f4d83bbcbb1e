#include "navcbn/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "navcbn/dataset.hpp"
#include "navcbn/errors.hpp"
#include "navcbn/rng.hpp"

#include <nlohmann/json.hpp>

namespace navcbn {

using nlohmann::json;

const char* to_string(VariableKind kind) {
    switch (kind) {
    case VariableKind::TimeSeries: return "time_series";
    case VariableKind::Continuous: return "continuous";
    case VariableKind::Categorical: return "categorical";
    }
    return "?";
}

VariableKind variable_kind_from_string(const std::string& s) {
    if (s == "time_series") return VariableKind::TimeSeries;
    if (s == "continuous") return VariableKind::Continuous;
    if (s == "categorical") return VariableKind::Categorical;
    throw std::invalid_argument("unknown variable kind: " + s);
}

std::vector<VariableSpec> default_variable_specs(const LambdaConfig& lambda) {
    return {
        {"initial_robot_rotation", VariableKind::Continuous, lambda.initial_robot_rotation},
        {"total_robot_rotation", VariableKind::Continuous, lambda.total_robot_rotation},
        {"robot_rotation_change", VariableKind::TimeSeries, lambda.robot_rotation_change},
        {"robot_pos_change", VariableKind::TimeSeries, lambda.robot_pos_change},
        {"human_pos_change", VariableKind::TimeSeries, lambda.human_pos_change},
        {"competence", VariableKind::Categorical, 2},
        {"intention", VariableKind::Categorical, 2},
    };
}

namespace {

double dist2(const Series& a, const Series& b) {
    double d = 0.0;
    for (int i = 0; i < kSeriesLen; ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

double series_mean(const Series& s) {
    return std::accumulate(s.begin(), s.end(), 0.0) / kSeriesLen;
}

} // namespace

int nearest_centroid(const std::vector<Series>& centroids, const Series& s) {
    if (centroids.empty()) throw std::domain_error("nearest_centroid: no centroids");
    int best = 0;
    double best_d = dist2(centroids[0], s);
    for (int j = 1; j < static_cast<int>(centroids.size()); ++j) {
        const double d = dist2(centroids[j], s);
        if (d < best_d) { // ties keep the lowest index
            best_d = d;
            best = j;
        }
    }
    return best;
}

KmeansResult kmeans(const std::vector<Series>& series, int k, std::uint64_t seed,
                    int max_iter) {
    const int n = static_cast<int>(series.size());
    if (n == 0) throw std::domain_error("kmeans: empty input");
    if (k < 1) throw std::domain_error("kmeans: k must be >= 1");
    if (k > n) {
        throw std::domain_error("kmeans: k (" + std::to_string(k) +
                                ") exceeds number of series (" + std::to_string(n) + ")");
    }

    Rng rng(seed);
    KmeansResult res;
    res.centroids.reserve(k);

    // k-means++ seeding.
    res.centroids.push_back(series[rng.next_below(static_cast<std::uint64_t>(n))]);
    std::vector<double> d2(n, std::numeric_limits<double>::max());
    while (static_cast<int>(res.centroids.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], dist2(series[i], res.centroids.back()));
            total += d2[i];
        }
        int pick;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
        } else {
            const double r = rng.next_double() * total;
            double cum = 0.0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > r) {
                    pick = i;
                    break;
                }
            }
        }
        res.centroids.push_back(series[pick]);
    }

    std::vector<int> labels(n, -1);
    for (int iter = 0;; ++iter) {
        // Assignment pass; inertia recorded against the current centroids.
        std::vector<int> new_labels(n);
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            new_labels[i] = nearest_centroid(res.centroids, series[i]);
            inertia += dist2(res.centroids[new_labels[i]], series[i]);
        }
        res.inertia_trace.push_back(inertia);
        if (new_labels == labels || iter >= max_iter) {
            labels = std::move(new_labels);
            break;
        }
        labels = std::move(new_labels);

        // Means update with empty-cluster repair.
        std::vector<int> counts(k, 0);
        for (int label : labels) ++counts[label];
        for (int j = 0; j < k; ++j) {
            if (counts[j] > 0) continue;
            // Re-seed the empty cluster at the point farthest from its
            // assigned centroid, excluding sole members of their cluster.
            int steal = -1;
            double worst = -1.0;
            for (int i = 0; i < n; ++i) {
                if (counts[labels[i]] <= 1) continue;
                const double d = dist2(res.centroids[labels[i]], series[i]);
                if (d > worst) {
                    worst = d;
                    steal = i;
                }
            }
            if (steal < 0) continue;
            --counts[labels[steal]];
            labels[steal] = j;
            ++counts[j];
        }
        std::vector<Series> sums(k, Series{});
        for (int i = 0; i < n; ++i) {
            for (int t = 0; t < kSeriesLen; ++t) sums[labels[i]][t] += series[i][t];
        }
        for (int j = 0; j < k; ++j) {
            if (counts[j] == 0) continue; // keep the stale centroid
            for (int t = 0; t < kSeriesLen; ++t) res.centroids[j][t] = sums[j][t] / counts[j];
        }
    }

    res.labels = std::move(labels);
    res.inertia = res.inertia_trace.back();
    res.iterations = static_cast<int>(res.inertia_trace.size());
    return res;
}

std::vector<int> canonical_order(const std::vector<Series>& centroids) {
    std::vector<int> order(centroids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Series& ca = centroids[a];
        const Series& cb = centroids[b];
        if (ca[8] != cb[8]) return ca[8] < cb[8];
        if (ca[4] != cb[4]) return ca[4] < cb[4];
        const double ma = series_mean(ca);
        const double mb = series_mean(cb);
        if (ma != mb) return ma < mb;
        return a < b;
    });
    return order;
}

std::vector<double> quantile_edges(std::vector<double> values, int k) {
    if (k < 2) throw std::domain_error("quantile_edges: k must be >= 2");
    if (static_cast<int>(values.size()) < k) {
        throw std::domain_error("quantile_edges: fewer values (" +
                                std::to_string(values.size()) + ") than intervals (" +
                                std::to_string(k) + ")");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::vector<double> edges(k - 1);
    for (int j = 0; j < k - 1; ++j) {
        const double p = static_cast<double>(j + 1) / k;
        const double h = p * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(h);
        const double frac = h - static_cast<double>(lo);
        const std::size_t hi = std::min(lo + 1, n - 1);
        edges[j] = values[lo] + frac * (values[hi] - values[lo]);
    }
    if (values.front() == values.back()) {
        throw DegenerateEdgesError("quantile_edges: constant input");
    }
    for (int j = 1; j < k - 1; ++j) {
        if (!(edges[j] > edges[j - 1])) {
            throw DegenerateEdgesError("quantile_edges: edges not strictly ascending");
        }
    }
    return edges;
}

const VariableModel& DiscretizationModel::variable(const std::string& name) const {
    for (const VariableModel& v : variables) {
        if (v.spec.name == name) return v;
    }
    throw std::invalid_argument("discretization model has no variable: " + name);
}

bool DiscretizationModel::has_variable(const std::string& name) const {
    for (const VariableModel& v : variables) {
        if (v.spec.name == name) return true;
    }
    return false;
}

int DiscretizationModel::cardinality(const std::string& name) const {
    const VariableModel& v = variable(name);
    if (v.spec.kind == VariableKind::Categorical) {
        return static_cast<int>(v.categorical.categories.size());
    }
    return v.spec.cardinality;
}

namespace {

const Series& series_of(const FeatureSample& f, const std::string& name) {
    if (name == "robot_rotation_change") return f.robot_rotation_change;
    if (name == "robot_pos_change") return f.robot_pos_change;
    if (name == "human_pos_change") return f.human_pos_change;
    throw std::invalid_argument("not a time-series variable: " + name);
}

double scalar_of(const FeatureSample& f, const std::string& name) {
    if (name == "initial_robot_rotation") return f.initial_robot_rotation;
    if (name == "total_robot_rotation") return f.total_robot_rotation;
    throw std::invalid_argument("not a continuous variable: " + name);
}

int categorical_of(const FeatureSample& f, const std::string& name) {
    if (name == "competence") return f.competence;
    if (name == "intention") return f.intention;
    throw std::invalid_argument("not a categorical variable: " + name);
}

VariableKind natural_kind(const std::string& name) {
    if (name == "initial_robot_rotation" || name == "total_robot_rotation") {
        return VariableKind::Continuous;
    }
    if (name == "competence" || name == "intention") return VariableKind::Categorical;
    if (name == "robot_rotation_change" || name == "robot_pos_change" ||
        name == "human_pos_change") {
        return VariableKind::TimeSeries;
    }
    throw std::invalid_argument("unknown variable: " + name);
}

} // namespace

DiscretizationModel fit_discretization(const std::vector<FeatureSample>& data,
                                       const std::vector<VariableSpec>& specs,
                                       std::uint64_t seed) {
    if (data.empty()) throw std::domain_error("fit_discretization: empty dataset");
    if (specs.size() != kVariableNames.size()) {
        throw std::invalid_argument("fit_discretization: specs must cover exactly the " +
                                    std::to_string(kVariableNames.size()) +
                                    " task variables");
    }
    // Reorder specs into canonical variable order and check kinds.
    std::vector<VariableSpec> ordered;
    for (const char* name : kVariableNames) {
        auto it = std::find_if(specs.begin(), specs.end(),
                               [&](const VariableSpec& s) { return s.name == name; });
        if (it == specs.end()) {
            throw std::invalid_argument(std::string("fit_discretization: missing spec for ") +
                                        name);
        }
        if (it->kind != natural_kind(name)) {
            throw std::invalid_argument("fit_discretization: wrong kind for " + it->name);
        }
        if (it->kind != VariableKind::Categorical && it->cardinality < 2) {
            throw std::invalid_argument("fit_discretization: cardinality must be >= 2 for " +
                                        it->name);
        }
        ordered.push_back(*it);
    }

    DiscretizationModel model;
    model.seed = seed;
    for (const VariableSpec& spec : ordered) {
        VariableModel vm;
        vm.spec = spec;
        try {
            switch (spec.kind) {
            case VariableKind::TimeSeries: {
                std::vector<Series> series;
                series.reserve(data.size());
                for (const FeatureSample& f : data) series.push_back(series_of(f, spec.name));
                const std::uint64_t var_seed = derive_seed(seed, spec.name);
                KmeansResult km = kmeans(series, spec.cardinality, var_seed);
                const std::vector<int> order = canonical_order(km.centroids);
                vm.time_series.centroids.reserve(order.size());
                for (int old_idx : order) vm.time_series.centroids.push_back(km.centroids[old_idx]);
                vm.time_series.seed = var_seed;
                vm.time_series.iterations = km.iterations;
                vm.time_series.inertia = km.inertia;
                break;
            }
            case VariableKind::Continuous: {
                std::vector<double> values;
                values.reserve(data.size());
                for (const FeatureSample& f : data) values.push_back(scalar_of(f, spec.name));
                vm.continuous.edges = quantile_edges(std::move(values), spec.cardinality);
                break;
            }
            case VariableKind::Categorical: {
                std::set<int> distinct;
                for (const FeatureSample& f : data) distinct.insert(categorical_of(f, spec.name));
                vm.categorical.categories.assign(distinct.begin(), distinct.end());
                break;
            }
            }
        } catch (const DegenerateEdgesError& e) {
            throw DegenerateEdgesError("variable '" + spec.name + "': " + e.what());
        } catch (const std::domain_error& e) {
            throw std::domain_error("variable '" + spec.name + "': " + e.what());
        }
        model.variables.push_back(std::move(vm));
    }
    return model;
}

int assign_variable(const DiscretizationModel& model, const std::string& name,
                    const FeatureSample& f) {
    const VariableModel& vm = model.variable(name);
    switch (vm.spec.kind) {
    case VariableKind::TimeSeries:
        return nearest_centroid(vm.time_series.centroids, series_of(f, name));
    case VariableKind::Continuous: {
        const double v = scalar_of(f, name);
        const auto& edges = vm.continuous.edges;
        // Bin = number of edges <= v; values off either end clamp into the
        // extreme bins.
        const auto it = std::upper_bound(edges.begin(), edges.end(), v);
        return static_cast<int>(it - edges.begin());
    }
    case VariableKind::Categorical: {
        const int v = categorical_of(f, name);
        const auto& cats = vm.categorical.categories;
        const auto it = std::find(cats.begin(), cats.end(), v);
        if (it == cats.end()) {
            throw std::domain_error("assign: unseen categorical value " + std::to_string(v) +
                                    " for " + name);
        }
        return static_cast<int>(it - cats.begin());
    }
    }
    throw std::logic_error("unreachable");
}

DiscreteSample assign(const DiscretizationModel& model, const FeatureSample& f) {
    DiscreteSample d;
    d.participant_id = f.participant_id;
    d.scenario_id = f.scenario_id;
    for (const VariableModel& vm : model.variables) {
        d.values[vm.spec.name] = assign_variable(model, vm.spec.name, f);
    }
    return d;
}

json discretization_to_json(const DiscretizationModel& model) {
    json vars = json::array();
    for (const VariableModel& vm : model.variables) {
        json v{{"name", vm.spec.name},
               {"kind", to_string(vm.spec.kind)},
               {"cardinality", vm.spec.cardinality}};
        switch (vm.spec.kind) {
        case VariableKind::TimeSeries: {
            json cents = json::array();
            for (const Series& c : vm.time_series.centroids) {
                cents.push_back(json(std::vector<double>(c.begin(), c.end())));
            }
            v["centroids"] = std::move(cents);
            v["seed"] = vm.time_series.seed;
            v["iterations"] = vm.time_series.iterations;
            v["inertia"] = vm.time_series.inertia;
            break;
        }
        case VariableKind::Continuous:
            v["edges"] = vm.continuous.edges;
            break;
        case VariableKind::Categorical:
            v["categories"] = vm.categorical.categories;
            break;
        }
        vars.push_back(std::move(v));
    }
    return json{{"version", 1}, {"seed", model.seed}, {"variables", std::move(vars)}};
}

DiscretizationModel discretization_from_json(const json& j) {
    if (!j.contains("version")) throw SchemaError("discretization model: missing version");
    DiscretizationModel model;
    model.seed = j.at("seed").get<std::uint64_t>();
    for (const json& v : j.at("variables")) {
        VariableModel vm;
        vm.spec.name = v.at("name").get<std::string>();
        vm.spec.kind = variable_kind_from_string(v.at("kind").get<std::string>());
        vm.spec.cardinality = v.at("cardinality").get<int>();
        switch (vm.spec.kind) {
        case VariableKind::TimeSeries: {
            for (const json& c : v.at("centroids")) {
                auto vals = c.get<std::vector<double>>();
                if (vals.size() != static_cast<std::size_t>(kSeriesLen)) {
                    throw SchemaError("centroid length != 9 in " + vm.spec.name);
                }
                Series s;
                std::copy(vals.begin(), vals.end(), s.begin());
                vm.time_series.centroids.push_back(s);
            }
            vm.time_series.seed = v.value("seed", std::uint64_t{0});
            vm.time_series.iterations = v.value("iterations", 0);
            vm.time_series.inertia = v.value("inertia", 0.0);
            break;
        }
        case VariableKind::Continuous:
            vm.continuous.edges = v.at("edges").get<std::vector<double>>();
            break;
        case VariableKind::Categorical:
            vm.categorical.categories = v.at("categories").get<std::vector<int>>();
            break;
        }
        model.variables.push_back(std::move(vm));
    }
    return model;
}

void write_cluster_means_csv(const std::string& path, const DiscretizationModel& model,
                             const std::string& variable) {
    const VariableModel& vm = model.variable(variable);
    if (vm.spec.kind != VariableKind::TimeSeries) {
        throw std::invalid_argument("write_cluster_means_csv: " + variable +
                                    " is not a time-series variable");
    }
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write CSV: " + path);
    out << "cluster";
    for (int t = 0; t < kSeriesLen; ++t) out << ",t" << t;
    out << '\n';
    for (std::size_t i = 0; i < vm.time_series.centroids.size(); ++i) {
        out << i;
        for (double v : vm.time_series.centroids[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

} // namespace navcbn
