#include "navcbn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "navcbn/errors.hpp"
#include "navcbn/rng.hpp"

#include <nlohmann/json.hpp>

namespace navcbn {

using nlohmann::json;

const char* to_string(F1Mode mode) {
    return mode == F1Mode::Positive ? "positive" : "macro-class";
}

F1Mode f1_mode_from_string(const std::string& s) {
    if (s == "positive") return F1Mode::Positive;
    if (s == "macro-class") return F1Mode::MacroClass;
    throw std::invalid_argument("unknown f1 mode: " + s);
}

namespace {

double f1_for_class(int positive, const std::vector<int>& predictions,
                    const std::vector<int>& labels) {
    long long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred_pos = predictions[i] == positive;
        const bool label_pos = labels[i] == positive;
        if (pred_pos && label_pos) ++tp;
        if (pred_pos && !label_pos) ++fp;
        if (!pred_pos && label_pos) ++fn;
    }
    const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    return (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

} // namespace

Metrics metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                F1Mode mode) {
    if (predictions.empty()) throw std::domain_error("metrics: empty input");
    if (predictions.size() != labels.size()) {
        throw std::domain_error("metrics: predictions and labels differ in length");
    }
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if ((predictions[i] != 0 && predictions[i] != 1) || (labels[i] != 0 && labels[i] != 1)) {
            throw std::domain_error("metrics: values must be binary");
        }
    }
    long long tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == 1 && labels[i] == 1) ++tp;
        if (predictions[i] == 1 && labels[i] == 0) ++fp;
        if (predictions[i] == 0 && labels[i] == 1) ++fn;
        if (predictions[i] == 0 && labels[i] == 0) ++tn;
    }
    Metrics m;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(predictions.size());
    if (mode == F1Mode::Positive) {
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
    } else {
        m.f1 = 0.5 * (f1_for_class(1, predictions, labels) + f1_for_class(0, predictions, labels));
    }
    return m;
}

CbnModel fit_pipeline(const std::vector<RawSample>& train, const LambdaConfig& lambda,
                      double alpha, std::uint64_t seed, const EvalOptions& opts) {
    if (train.empty()) throw std::domain_error("fit_pipeline: empty training set");
    std::vector<FeatureSample> feats;
    feats.reserve(train.size());
    for (const RawSample& s : train) feats.push_back(compute_features(s, opts.total_rotation_mode));

    DiscretizationModel disc = fit_discretization(feats, default_variable_specs(lambda), seed);

    std::vector<DiscreteSample> discretes;
    discretes.reserve(feats.size());
    for (const FeatureSample& f : feats) discretes.push_back(assign(disc, f));

    DagSpec dag = default_dag(lambda);
    if (opts.edges) dag.edges = *opts.edges;
    const DagValidation v = validate_dag(dag);
    if (!v.ok) throw std::invalid_argument("fit_pipeline: " + v.message);

    CbnModel model = fit_parameters(dag, discretes, alpha);
    model.discretization = std::move(disc);
    model.lambda = lambda;
    model.total_rotation_mode = opts.total_rotation_mode;
    return model;
}

namespace {

std::vector<std::string> sorted_participants(const std::vector<RawSample>& data) {
    std::set<std::string> ids;
    for (const RawSample& s : data) ids.insert(s.participant_id);
    return {ids.begin(), ids.end()};
}

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    if (values.empty()) return a;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return a;
}

TargetReport aggregate_target(const std::vector<Metrics>& per_participant) {
    std::vector<double> f1, acc, prec, rec;
    for (const Metrics& m : per_participant) {
        f1.push_back(m.f1);
        acc.push_back(m.accuracy);
        prec.push_back(m.precision);
        rec.push_back(m.recall);
    }
    return {aggregate(f1), aggregate(acc), aggregate(prec), aggregate(rec)};
}

struct FoldOutcome {
    ParticipantMetrics participant;
};

// Fits on everything except `held_out` and evaluates on it.
FoldOutcome run_fold(const std::vector<RawSample>& data, const std::string& held_out,
                     const LambdaConfig& lambda, double alpha, std::uint64_t fold_seed,
                     const EvalOptions& opts) {
    std::vector<RawSample> train;
    std::vector<RawSample> test;
    for (const RawSample& s : data) {
        (s.participant_id == held_out ? test : train).push_back(s);
    }
    const CbnModel model = fit_pipeline(train, lambda, alpha, fold_seed, opts);

    std::vector<int> comp_pred, comp_label, int_pred, int_label;
    for (const RawSample& s : test) {
        const FeatureSample f = compute_features(s, opts.total_rotation_mode);
        const DiscreteSample d = assign(*model.discretization, f);
        const Prediction p = predict(model, d);
        comp_pred.push_back(p.competence_label);
        comp_label.push_back(f.competence);
        int_pred.push_back(p.intention_label);
        int_label.push_back(f.intention);
    }
    FoldOutcome out;
    out.participant.participant_id = held_out;
    out.participant.samples = static_cast<int>(test.size());
    out.participant.competence = metrics(comp_pred, comp_label, opts.f1_mode);
    out.participant.intention = metrics(int_pred, int_label, opts.f1_mode);
    return out;
}

} // namespace

MetricsReport loocv(const std::vector<RawSample>& data, const LambdaConfig& lambda,
                    double alpha, std::uint64_t seed, const EvalOptions& opts) {
    const std::vector<std::string> participants = sorted_participants(data);
    if (participants.size() < 2) {
        throw std::domain_error("loocv: need at least 2 participants, got " +
                                std::to_string(participants.size()));
    }
    MetricsReport report;
    std::vector<Metrics> comp, inten;
    for (const std::string& pid : participants) {
        const FoldOutcome fold =
            run_fold(data, pid, lambda, alpha, derive_seed(seed, pid), opts);
        report.per_participant.push_back(fold.participant);
        comp.push_back(fold.participant.competence);
        inten.push_back(fold.participant.intention);
    }
    report.competence = aggregate_target(comp);
    report.intention = aggregate_target(inten);
    return report;
}

namespace {

int max_lambda(const LambdaConfig& l) {
    return std::max({l.initial_robot_rotation, l.total_robot_rotation, l.robot_pos_change,
                     l.robot_rotation_change, l.human_pos_change});
}

std::string lambda_key(const LambdaConfig& l) {
    std::ostringstream os;
    os << l.initial_robot_rotation << ',' << l.total_robot_rotation << ',' << l.robot_pos_change
       << ',' << l.robot_rotation_change << ',' << l.human_pos_change;
    return os.str();
}

} // namespace

TuneResult nested_tune(const std::vector<RawSample>& data, const std::vector<LambdaConfig>& grid,
                       double alpha, std::uint64_t seed, const EvalOptions& opts) {
    if (grid.empty()) throw std::invalid_argument("nested_tune: empty grid");
    const std::vector<std::string> participants = sorted_participants(data);
    if (participants.size() < 3) {
        throw std::domain_error("nested_tune: need at least 3 participants, got " +
                                std::to_string(participants.size()));
    }
    std::map<std::string, int> samples_per_participant;
    for (const RawSample& s : data) ++samples_per_participant[s.participant_id];

    TuneResult result;
    result.grid = grid;
    result.candidate_mean_scores.assign(grid.size(), 0.0);
    std::vector<int> candidate_fold_counts(grid.size(), 0);
    std::vector<int> winner_votes(grid.size(), 0);

    std::vector<Metrics> comp, inten;
    for (const std::string& test_pid : participants) {
        std::vector<RawSample> inner_data;
        for (const RawSample& s : data) {
            if (s.participant_id != test_pid) inner_data.push_back(s);
        }
        // Smallest inner training set decides which candidates have support.
        int min_inner_train = static_cast<int>(inner_data.size());
        for (const std::string& val_pid : participants) {
            if (val_pid == test_pid) continue;
            min_inner_train = std::min(
                min_inner_train,
                static_cast<int>(inner_data.size()) - samples_per_participant[val_pid]);
        }

        TuneFold fold;
        fold.test_participant = test_pid;
        fold.candidate_scores.assign(grid.size(), -1.0);
        int best = -1;
        for (std::size_t c = 0; c < grid.size(); ++c) {
            if (max_lambda(grid[c]) > min_inner_train) {
                result.warnings.push_back("candidate (" + lambda_key(grid[c]) +
                                          ") skipped for fold " + test_pid +
                                          ": insufficient sample support");
                continue;
            }
            double score_sum = 0.0;
            int score_count = 0;
            bool failed = false;
            for (const std::string& val_pid : participants) {
                if (val_pid == test_pid) continue;
                try {
                    const FoldOutcome inner = run_fold(
                        inner_data, val_pid, grid[c], alpha,
                        derive_seed(seed, test_pid + "/" + val_pid), opts);
                    score_sum += 0.5 * (inner.participant.competence.f1 +
                                        inner.participant.intention.f1);
                    ++score_count;
                } catch (const std::domain_error& e) {
                    result.warnings.push_back("candidate (" + lambda_key(grid[c]) +
                                              ") failed for fold " + test_pid + ": " + e.what());
                    failed = true;
                    break;
                }
            }
            if (failed || score_count == 0) continue;
            fold.candidate_scores[c] = score_sum / score_count;
            result.candidate_mean_scores[c] += fold.candidate_scores[c];
            ++candidate_fold_counts[c];
            if (best < 0 || fold.candidate_scores[c] > fold.candidate_scores[best]) best = static_cast<int>(c);
        }
        if (best < 0) {
            throw std::domain_error("nested_tune: no feasible grid candidate for fold " +
                                    test_pid);
        }
        fold.winner = grid[best];
        ++winner_votes[best];
        result.folds.push_back(fold);

        const FoldOutcome outer =
            run_fold(data, test_pid, grid[best], alpha, derive_seed(seed, test_pid), opts);
        result.outer.per_participant.push_back(outer.participant);
        comp.push_back(outer.participant.competence);
        inten.push_back(outer.participant.intention);
    }

    for (std::size_t c = 0; c < grid.size(); ++c) {
        result.candidate_mean_scores[c] = candidate_fold_counts[c] > 0
                                              ? result.candidate_mean_scores[c] /
                                                    candidate_fold_counts[c]
                                              : -1.0;
    }
    // Headline selection: modal per-fold winner, ties to the earliest entry.
    int selected = 0;
    for (std::size_t c = 1; c < grid.size(); ++c) {
        if (winner_votes[c] > winner_votes[selected]) selected = static_cast<int>(c);
    }
    result.selected = grid[selected];
    result.outer.competence = aggregate_target(comp);
    result.outer.intention = aggregate_target(inten);
    return result;
}

std::vector<LambdaConfig> default_tune_grid() {
    return {
        {2, 2, 4, 4, 4},
        {3, 3, 6, 6, 6},
        {4, 4, 8, 8, 8},
        {4, 4, 10, 11, 10},
        {5, 5, 12, 12, 12},
    };
}

json lambda_to_json(const LambdaConfig& lambda) {
    return json{{"initial_robot_rotation", lambda.initial_robot_rotation},
                {"total_robot_rotation", lambda.total_robot_rotation},
                {"robot_pos_change", lambda.robot_pos_change},
                {"robot_rotation_change", lambda.robot_rotation_change},
                {"human_pos_change", lambda.human_pos_change}};
}

LambdaConfig lambda_from_json(const json& j) {
    LambdaConfig lambda;
    lambda.initial_robot_rotation = j.at("initial_robot_rotation").get<int>();
    lambda.total_robot_rotation = j.at("total_robot_rotation").get<int>();
    lambda.robot_pos_change = j.at("robot_pos_change").get<int>();
    lambda.robot_rotation_change = j.at("robot_rotation_change").get<int>();
    lambda.human_pos_change = j.value("human_pos_change", 10);
    return lambda;
}

namespace {

json aggregate_to_json(const Aggregate& a) {
    return json{{"mean", a.mean}, {"std", a.stddev}};
}

json target_to_json(const TargetReport& t) {
    return json{{"f1", aggregate_to_json(t.f1)},
                {"accuracy", aggregate_to_json(t.accuracy)},
                {"precision", aggregate_to_json(t.precision)},
                {"recall", aggregate_to_json(t.recall)}};
}

json participant_to_json(const ParticipantMetrics& p) {
    const auto one = [](const Metrics& m) {
        return json{{"f1", m.f1},
                    {"accuracy", m.accuracy},
                    {"precision", m.precision},
                    {"recall", m.recall}};
    };
    return json{{"participant_id", p.participant_id},
                {"samples", p.samples},
                {"competence", one(p.competence)},
                {"intention", one(p.intention)}};
}

} // namespace

json metrics_report_to_json(const MetricsReport& report) {
    json per = json::array();
    for (const ParticipantMetrics& p : report.per_participant) per.push_back(participant_to_json(p));
    return json{{"competence", target_to_json(report.competence)},
                {"intention", target_to_json(report.intention)},
                {"per_participant", std::move(per)}};
}

json tune_result_to_json(const TuneResult& result) {
    json grid = json::array();
    for (const LambdaConfig& l : result.grid) grid.push_back(lambda_to_json(l));
    json folds = json::array();
    for (const TuneFold& f : result.folds) {
        folds.push_back(json{{"test_participant", f.test_participant},
                             {"winner", lambda_to_json(f.winner)},
                             {"candidate_scores", f.candidate_scores}});
    }
    return json{{"grid", std::move(grid)},
                {"selected", lambda_to_json(result.selected)},
                {"folds", std::move(folds)},
                {"candidate_mean_scores", result.candidate_mean_scores},
                {"outer_metrics", metrics_report_to_json(result.outer)},
                {"warnings", result.warnings}};
}

std::string format_report_table(const MetricsReport& report) {
    std::ostringstream os;
    const auto row = [&](const char* name, const TargetReport& t) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%-11s | %.3f +/- %.2f | %.3f +/- %.2f | %.3f +/- %.2f | %.3f +/- %.2f\n",
                      name, t.f1.mean, t.f1.stddev, t.accuracy.mean, t.accuracy.stddev,
                      t.precision.mean, t.precision.stddev, t.recall.mean, t.recall.stddev);
        os << buf;
    };
    os << "Target      | F1             | Accuracy       | Precision      | Recall\n";
    os << "------------+----------------+----------------+----------------+---------------\n";
    row("Competence", report.competence);
    row("Intention", report.intention);
    return os.str();
}

} // namespace navcbn
