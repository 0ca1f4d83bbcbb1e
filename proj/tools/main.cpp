// navcbn: perceived-competence prediction and counterfactual behavior
// generation for robot social navigation.
//
// Subcommands wire the pipeline end to end:
//   synth -> featurize -> fit -> evaluate / tune -> predict ->
//   counterfactual -> realize -> export-clusters
//
// Machine-readable output is a single JSON document on stdout; logs go to
// stderr. Exit codes: 0 success, 2 usage error, 3 data/schema error,
// 4 counterfactual search exhausted.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "navcbn/cbn.hpp"
#include "navcbn/counterfactual.hpp"
#include "navcbn/dataset.hpp"
#include "navcbn/discretization.hpp"
#include "navcbn/errors.hpp"
#include "navcbn/evaluation.hpp"
#include "navcbn/synthdata.hpp"

#include <nlohmann/json.hpp>

using namespace navcbn;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "navcbn 1.0.0 (model format 1)";

std::vector<double> parse_doubles(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string token;
    while (std::getline(ss, token, ',')) {
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("cannot parse ") + what + ": " + csv);
        }
    }
    if (out.empty()) throw std::invalid_argument(std::string("empty ") + what);
    return out;
}

std::vector<int> parse_ints(const std::string& csv, const char* what) {
    std::vector<int> out;
    for (double v : parse_doubles(csv, what)) out.push_back(static_cast<int>(v));
    return out;
}

// Lambda tuples follow the reporting order: initial, total, position
// clusters, rotation clusters, optional human clusters.
LambdaConfig parse_lambda(const std::string& csv, int human_default) {
    const auto v = parse_ints(csv, "lambda");
    if (v.size() != 4 && v.size() != 5) {
        throw std::invalid_argument("--lambda expects 4 or 5 integers: "
                                    "initial,total,pos,rot[,human]");
    }
    LambdaConfig l;
    l.initial_robot_rotation = v[0];
    l.total_robot_rotation = v[1];
    l.robot_pos_change = v[2];
    l.robot_rotation_change = v[3];
    l.human_pos_change = v.size() == 5 ? v[4] : human_default;
    return l;
}

std::vector<LambdaConfig> parse_grid(const std::string& spec, int human_default) {
    std::vector<LambdaConfig> grid;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ';')) {
        if (!token.empty()) grid.push_back(parse_lambda(token, human_default));
    }
    if (grid.empty()) throw std::invalid_argument("--grid produced no candidates");
    return grid;
}

json solution_to_json(const CounterfactualSolution& sol) {
    json named = json::object();
    for (std::size_t i = 0; i < sol.variables.size(); ++i) {
        named[sol.variables[i]] = sol.solution[i];
    }
    json path = json::array();
    for (const Parameterization& p : sol.path) path.push_back(p);
    return json{{"found", true},
                {"solution", named},
                {"solution_indices", sol.solution},
                {"variables", sol.variables},
                {"p_solution", sol.p_solution},
                {"depth", sol.depth},
                {"phase", to_string(sol.phase)},
                {"path", std::move(path)}};
}

void emit(const json& doc) { std::cout << doc.dump(2) << '\n'; }

struct CommonModelArgs {
    std::string model_path;
    CbnModel load() const { return load_model(model_path); }
};

// start parameterization for the counterfactual/realize commands, either
// given explicitly or taken from a dataset row.
std::map<std::string, int> resolve_start(const CbnModel& model, const std::string& target,
                                         const std::string& state_csv,
                                         const std::string& data_path, int index) {
    const CptTable& table = model.cpts.at(target);
    std::map<std::string, int> start;
    if (!state_csv.empty()) {
        const auto v = parse_ints(state_csv, "state");
        // Documented order: initial, total, rotation clusters, position.
        const std::vector<std::string> order{"initial_robot_rotation", "total_robot_rotation",
                                             "robot_rotation_change", "robot_pos_change"};
        if (v.size() != order.size()) {
            throw std::invalid_argument("--state expects 4 indices: initial,total,rot,pos");
        }
        for (std::size_t i = 0; i < order.size(); ++i) start[order[i]] = v[i];
        return start;
    }
    if (data_path.empty()) {
        throw std::invalid_argument("provide either --state or --data with --index");
    }
    if (!model.discretization) {
        throw SchemaError("model has no embedded discretization; cannot featurize --data");
    }
    const auto samples = load_raw_jsonl(data_path);
    if (index < 0 || index >= static_cast<int>(samples.size())) {
        throw std::invalid_argument("--index out of range (dataset has " +
                                    std::to_string(samples.size()) + " samples)");
    }
    const FeatureSample f = compute_features(samples[index], model.total_rotation_mode);
    const DiscreteSample d = assign(*model.discretization, f);
    for (const std::string& p : table.parents) start[p] = d.values.at(p);
    return start;
}

int run(int argc, char** argv) {
    CLI::App app{"Causal model of perceived robot navigation competence"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "Config file (key=value; [subcommand] sections)");
    app.require_subcommand(1);

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset (JSONL)");
    std::string synth_out;
    GeneratorConfig gen;
    OracleConfig oracle;
    std::string mix_csv;
    synth->add_option("--out", synth_out, "Output JSONL path")->required();
    synth->add_option("--participants", gen.participants, "Participant count");
    synth->add_option("--samples-per-participant", gen.samples_per_participant,
                      "Samples per participant");
    synth->add_option("--mix", mix_csv,
                      "Archetype weights: direct,curved,spin,retreat,stall,overshoot");
    synth->add_option("--pos-sigma", gen.noise.pos_sigma, "Per-step position noise (m)");
    synth->add_option("--rot-sigma", gen.noise.rot_sigma, "Per-step bearing noise (rad)");
    synth->add_option("--eta", gen.label_noise, "Label flip probability");
    synth->add_option("--seed", gen.seed, "Generator seed");
    synth->add_option("--delta-pos", oracle.delta_pos, "Oracle approach threshold (m)");
    synth->add_option("--delta-rot", oracle.delta_rot, "Oracle rotation budget (rad)");
    synth->add_option("--delta-align", oracle.delta_align, "Oracle alignment tolerance (rad)");

    // ---- featurize ------------------------------------------------------
    auto* featurize = app.add_subcommand("featurize", "Export the variable set as CSV");
    std::string feat_data, feat_out, feat_mode = "as_written";
    bool feat_resample = false;
    featurize->add_option("--data", feat_data, "Input JSONL dataset")->required();
    featurize->add_option("--out", feat_out, "Output CSV path")->required();
    featurize->add_option("--total-rotation-mode", feat_mode, "as_written | path_length");
    featurize->add_flag("--resample", feat_resample, "Linearly resample series to 9 steps");

    // ---- fit ------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "Fit discretization and CPTs; persist the model");
    std::string fit_data, fit_model, fit_lambda = "4,4,10,11", fit_mode = "as_written";
    std::string fit_dag;
    int fit_lambda_human = 10;
    double fit_alpha = 1.0, fit_epsilon = 0.9;
    std::int64_t fit_m = 5;
    std::uint64_t fit_seed = 0;
    bool fit_resample = false;
    fit->add_option("--data", fit_data, "Training JSONL dataset")->required();
    fit->add_option("--model", fit_model, "Output model path")->required();
    fit->add_option("--lambda", fit_lambda, "Intervals: initial,total,pos,rot[,human]");
    fit->add_option("--lambda-human", fit_lambda_human, "Clusters for human_pos_change");
    fit->add_option("--alpha", fit_alpha, "Laplace smoothing constant");
    fit->add_option("--epsilon", fit_epsilon, "Default counterfactual success threshold");
    fit->add_option("--m", fit_m, "Default counterfactual support threshold");
    fit->add_option("--seed", fit_seed, "Clustering seed");
    fit->add_option("--total-rotation-mode", fit_mode, "as_written | path_length");
    fit->add_option("--dag", fit_dag, "JSON DAG file overriding structure and cardinalities");
    fit->add_flag("--resample", fit_resample, "Linearly resample series to 9 steps");

    // ---- evaluate -------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "Participant-held-out LOOCV metrics");
    std::string eval_data, eval_lambda = "4,4,10,11", eval_mode = "as_written";
    std::string eval_f1 = "positive";
    int eval_lambda_human = 10;
    double eval_alpha = 1.0;
    std::uint64_t eval_seed = 0;
    evaluate->add_option("--data", eval_data, "JSONL dataset")->required();
    evaluate->add_option("--lambda", eval_lambda, "Intervals: initial,total,pos,rot[,human]");
    evaluate->add_option("--lambda-human", eval_lambda_human, "Clusters for human_pos_change");
    evaluate->add_option("--alpha", eval_alpha, "Laplace smoothing constant");
    evaluate->add_option("--seed", eval_seed, "Fold seed");
    evaluate->add_option("--f1-mode", eval_f1, "positive | macro-class");
    evaluate->add_option("--total-rotation-mode", eval_mode, "as_written | path_length");

    // ---- tune -----------------------------------------------------------
    auto* tune = app.add_subcommand("tune", "Nested LOOCV hyperparameter search");
    std::string tune_data, tune_grid, tune_mode = "as_written", tune_f1 = "positive";
    int tune_lambda_human = 10;
    double tune_alpha = 1.0;
    std::uint64_t tune_seed = 0;
    tune->add_option("--data", tune_data, "JSONL dataset")->required();
    tune->add_option("--grid", tune_grid,
                     "Semicolon-separated lambda tuples, e.g. \"2,2,4,4;4,4,10,11\"");
    tune->add_option("--lambda-human", tune_lambda_human, "Clusters for human_pos_change");
    tune->add_option("--alpha", tune_alpha, "Laplace smoothing constant");
    tune->add_option("--seed", tune_seed, "Fold seed");
    tune->add_option("--f1-mode", tune_f1, "positive | macro-class");
    tune->add_option("--total-rotation-mode", tune_mode, "as_written | path_length");

    // ---- predict --------------------------------------------------------
    auto* predict_cmd = app.add_subcommand("predict", "Predict perceived competence/intention");
    CommonModelArgs predict_model;
    std::string predict_data;
    bool predict_resample = false;
    predict_cmd->add_option("--model", predict_model.model_path, "Model JSON")->required();
    predict_cmd->add_option("--data", predict_data, "JSONL dataset")->required();
    predict_cmd->add_flag("--resample", predict_resample, "Linearly resample series to 9 steps");

    // ---- counterfactual -------------------------------------------------
    auto* cf = app.add_subcommand("counterfactual",
                                  "Search for a minimal-change behavior above epsilon");
    CommonModelArgs cf_model;
    std::string cf_data, cf_state, cf_target = "competence";
    int cf_index = 0;
    double cf_epsilon = -1.0; // negative = take the model default
    std::int64_t cf_m = -1;
    cf->add_option("--model", cf_model.model_path, "Model JSON")->required();
    cf->add_option("--data", cf_data, "JSONL dataset supplying the start state");
    cf->add_option("--index", cf_index, "Row index into --data");
    cf->add_option("--state", cf_state, "Start indices: initial,total,rot,pos");
    cf->add_option("--target", cf_target, "competence | intention");
    cf->add_option("--epsilon", cf_epsilon, "Success threshold (default: from model)");
    cf->add_option("--m", cf_m, "Support threshold (default: from model)");

    // ---- realize --------------------------------------------------------
    auto* realize = app.add_subcommand("realize", "Turn a solution into a world trajectory");
    CommonModelArgs rz_model;
    std::string rz_state, rz_solution_file, rz_start, rz_goal, rz_out;
    realize->add_option("--model", rz_model.model_path, "Model JSON")->required();
    realize->add_option("--state", rz_state, "Solution indices: initial,total,rot,pos");
    realize->add_option("--solution", rz_solution_file,
                        "JSON file produced by the counterfactual subcommand");
    realize->add_option("--start", rz_start, "Start pose: x,y,theta")->required();
    realize->add_option("--goal", rz_goal, "Goal position: x,y")->required();
    realize->add_option("--out", rz_out, "Optional trajectory CSV path");

    // ---- export-clusters ------------------------------------------------
    auto* exportc = app.add_subcommand("export-clusters", "Write cluster means as CSV");
    CommonModelArgs ex_model;
    std::string ex_variable = "robot_pos_change", ex_out;
    exportc->add_option("--model", ex_model.model_path, "Model JSON")->required();
    exportc->add_option("--variable", ex_variable, "Time-series variable to export");
    exportc->add_option("--out", ex_out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints help or the parse error
        return code == 0 ? 0 : 2;     // 2 = usage error
    }

    if (*synth) {
        if (!mix_csv.empty()) {
            const auto mix = parse_doubles(mix_csv, "mix");
            if (mix.size() != static_cast<std::size_t>(kArchetypeCount)) {
                throw std::invalid_argument("--mix expects 6 weights");
            }
            for (int i = 0; i < kArchetypeCount; ++i) gen.archetype_mix[i] = mix[i];
        }
        const auto data = generate_dataset(gen, oracle);
        save_raw_jsonl(synth_out, data);
        int positives_c = 0, positives_i = 0;
        for (const RawSample& s : data) {
            positives_c += s.competence_likert >= 4;
            positives_i += s.intention_likert >= 4;
        }
        emit(json{{"path", synth_out},
                  {"samples", data.size()},
                  {"participants", gen.participants},
                  {"competence_positive", positives_c},
                  {"intention_positive", positives_i},
                  {"seed", gen.seed}});
        return 0;
    }

    if (*featurize) {
        const auto data = load_raw_jsonl(feat_data, feat_resample);
        const TotalRotationMode mode = total_rotation_mode_from_string(feat_mode);
        std::vector<FeatureSample> feats;
        feats.reserve(data.size());
        for (const RawSample& s : data) feats.push_back(compute_features(s, mode));
        write_features_csv(feat_out, feats);
        emit(json{{"path", feat_out}, {"samples", feats.size()},
                  {"total_rotation_mode", feat_mode}});
        return 0;
    }

    if (*fit) {
        if (!(fit_epsilon > 0.0 && fit_epsilon < 1.0)) {
            throw std::invalid_argument("--epsilon must be in (0, 1)");
        }
        if (fit_m < 0) throw std::invalid_argument("--m must be >= 0");
        const auto data = load_raw_jsonl(fit_data, fit_resample);
        EvalOptions opts;
        opts.total_rotation_mode = total_rotation_mode_from_string(fit_mode);
        LambdaConfig lambda = parse_lambda(fit_lambda, fit_lambda_human);
        if (!fit_dag.empty()) {
            std::ifstream in(fit_dag);
            if (!in) throw SchemaError("cannot open DAG file: " + fit_dag);
            json j;
            in >> j;
            const DagSpec dag = dag_from_json(j);
            const DagValidation v = validate_dag(dag);
            if (!v.ok) throw SchemaError("DAG file: " + v.message);
            lambda = lambda_from_dag(dag);
            opts.edges = dag.edges;
        }
        CbnModel model = fit_pipeline(data, lambda, fit_alpha, fit_seed, opts);
        model.epsilon = fit_epsilon;
        model.count_threshold = fit_m;
        save_model(fit_model, model);
        emit(json{{"model", fit_model},
                  {"samples", data.size()},
                  {"lambda", lambda_to_json(lambda)},
                  {"alpha", fit_alpha},
                  {"epsilon", fit_epsilon},
                  {"m", fit_m},
                  {"seed", fit_seed},
                  {"total_rotation_mode", fit_mode}});
        return 0;
    }

    if (*evaluate) {
        const auto data = load_raw_jsonl(eval_data);
        EvalOptions opts;
        opts.total_rotation_mode = total_rotation_mode_from_string(eval_mode);
        opts.f1_mode = f1_mode_from_string(eval_f1);
        const LambdaConfig lambda = parse_lambda(eval_lambda, eval_lambda_human);
        const MetricsReport report = loocv(data, lambda, eval_alpha, eval_seed, opts);
        std::cerr << format_report_table(report);
        emit(json{{"lambda", lambda_to_json(lambda)},
                  {"alpha", eval_alpha},
                  {"seed", eval_seed},
                  {"f1_mode", eval_f1},
                  {"report", metrics_report_to_json(report)}});
        return 0;
    }

    if (*tune) {
        const auto data = load_raw_jsonl(tune_data);
        EvalOptions opts;
        opts.total_rotation_mode = total_rotation_mode_from_string(tune_mode);
        opts.f1_mode = f1_mode_from_string(tune_f1);
        const std::vector<LambdaConfig> grid =
            tune_grid.empty() ? default_tune_grid() : parse_grid(tune_grid, tune_lambda_human);
        const TuneResult result = nested_tune(data, grid, tune_alpha, tune_seed, opts);
        for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
        std::cerr << format_report_table(result.outer);
        emit(tune_result_to_json(result));
        return 0;
    }

    if (*predict_cmd) {
        const CbnModel model = predict_model.load();
        if (!model.discretization) {
            throw SchemaError("model has no embedded discretization; refit with `fit`");
        }
        const auto data = load_raw_jsonl(predict_data, predict_resample);
        json rows = json::array();
        for (const RawSample& s : data) {
            const FeatureSample f = compute_features(s, model.total_rotation_mode);
            const DiscreteSample d = assign(*model.discretization, f);
            const Prediction p = predict(model, d);
            rows.push_back(json{{"participant_id", s.participant_id},
                                {"scenario_id", s.scenario_id},
                                {"p_competence", p.p_competence},
                                {"p_intention", p.p_intention},
                                {"competence_pred", p.competence_label},
                                {"intention_pred", p.intention_label},
                                {"competence_label", f.competence},
                                {"intention_label", f.intention}});
        }
        emit(json{{"model", predict_model.model_path}, {"predictions", std::move(rows)}});
        return 0;
    }

    if (*cf) {
        const CbnModel model = cf_model.load();
        if (cf_target != "competence" && cf_target != "intention") {
            throw std::invalid_argument("--target must be competence or intention");
        }
        const double epsilon = cf_epsilon >= 0.0 ? cf_epsilon : model.epsilon;
        const std::int64_t m = cf_m >= 0 ? cf_m : model.count_threshold;
        const auto start = resolve_start(model, cf_target, cf_state, cf_data, cf_index);
        const auto sol = search(model, start, cf_target, epsilon, m);
        json start_json = json::object();
        for (const auto& [k, v] : start) start_json[k] = v;
        if (!sol) {
            emit(json{{"found", false},
                      {"target", cf_target},
                      {"epsilon", epsilon},
                      {"m", m},
                      {"start", start_json}});
            return 4;
        }
        json doc = solution_to_json(*sol);
        doc["target"] = cf_target;
        doc["epsilon"] = epsilon;
        doc["m"] = m;
        doc["start"] = start_json;
        emit(doc);
        return 0;
    }

    if (*realize) {
        const CbnModel model = rz_model.load();
        if (!model.discretization) {
            throw SchemaError("model has no embedded discretization; refit with `fit`");
        }
        CounterfactualSolution sol;
        sol.variables = {"initial_robot_rotation", "total_robot_rotation",
                         "robot_rotation_change", "robot_pos_change"};
        if (!rz_solution_file.empty()) {
            std::ifstream in(rz_solution_file);
            if (!in) throw SchemaError("cannot open solution file: " + rz_solution_file);
            json j;
            in >> j;
            if (!j.value("found", false)) throw SchemaError("solution file has found=false");
            sol.variables = j.at("variables").get<std::vector<std::string>>();
            sol.solution = j.at("solution_indices").get<std::vector<int>>();
        } else if (!rz_state.empty()) {
            sol.solution = parse_ints(rz_state, "state");
            if (sol.solution.size() != 4) {
                throw std::invalid_argument("--state expects 4 indices: initial,total,rot,pos");
            }
        } else {
            throw std::invalid_argument("provide either --solution or --state");
        }
        const auto start_v = parse_doubles(rz_start, "start");
        if (start_v.size() != 3) throw std::invalid_argument("--start expects x,y,theta");
        const auto goal_v = parse_doubles(rz_goal, "goal");
        if (goal_v.size() != 2) throw std::invalid_argument("--goal expects x,y");
        const Pose2 start{start_v[0], start_v[1], start_v[2]};
        const Vec2 goal{goal_v[0], goal_v[1]};
        const RealizedTrajectory traj =
            realize_trajectory(sol, *model.discretization, start, goal);
        if (!rz_out.empty()) write_trajectory_csv(rz_out, traj);
        json positions = json::array();
        json headings = json::array();
        for (int t = 0; t < kSeriesLen; ++t) {
            positions.push_back(json::array({traj.positions[t].x, traj.positions[t].y}));
            headings.push_back(traj.headings[t]);
        }
        json doc{{"positions", std::move(positions)},
                 {"headings", std::move(headings)},
                 {"solution_indices", sol.solution},
                 {"variables", sol.variables}};
        if (!rz_out.empty()) doc["csv"] = rz_out;
        emit(doc);
        return 0;
    }

    if (*exportc) {
        const CbnModel model = ex_model.load();
        if (!model.discretization) {
            throw SchemaError("model has no embedded discretization; refit with `fit`");
        }
        write_cluster_means_csv(ex_out, *model.discretization, ex_variable);
        const auto& centroids =
            model.discretization->variable(ex_variable).time_series.centroids;
        emit(json{{"path", ex_out}, {"variable", ex_variable}, {"clusters", centroids.size()}});
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
