#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "navcbn/cbn.hpp"
#include "navcbn/dataset.hpp"

#include <nlohmann/json_fwd.hpp>

namespace navcbn {

enum class F1Mode { Positive, MacroClass };

const char* to_string(F1Mode mode);
F1Mode f1_mode_from_string(const std::string& s);

struct Metrics {
    double f1 = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Binary metrics with class 1 positive. Any metric whose denominator is zero
// is 0. MacroClass averages the F1 of both classes; precision and recall stay
// positive-class.
Metrics metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                F1Mode mode = F1Mode::Positive);

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0; // population standard deviation across participants
};

struct TargetReport {
    Aggregate f1, accuracy, precision, recall;
};

struct ParticipantMetrics {
    std::string participant_id;
    int samples = 0;
    Metrics competence;
    Metrics intention;
};

struct MetricsReport {
    TargetReport competence;
    TargetReport intention;
    std::vector<ParticipantMetrics> per_participant; // sorted by participant id
};

struct EvalOptions {
    F1Mode f1_mode = F1Mode::Positive;
    TotalRotationMode total_rotation_mode = TotalRotationMode::AsWritten;
    // Replaces the default DAG edges; node cardinalities still follow lambda.
    std::optional<std::vector<std::pair<std::string, std::string>>> edges;
};

// Featurize -> fit discretization -> assign -> fit CPTs; the model used by
// every LOOCV fold and by the fit subcommand.
CbnModel fit_pipeline(const std::vector<RawSample>& train, const LambdaConfig& lambda,
                      double alpha, std::uint64_t seed, const EvalOptions& opts = {});

// Participant-held-out leave-one-out cross-validation; per-fold seeds derive
// from (seed, participant id) so folds are order-independent.
MetricsReport loocv(const std::vector<RawSample>& data, const LambdaConfig& lambda,
                    double alpha, std::uint64_t seed, const EvalOptions& opts = {});

struct TuneFold {
    std::string test_participant;
    LambdaConfig winner;
    std::vector<double> candidate_scores; // -1 for skipped candidates
};

struct TuneResult {
    std::vector<LambdaConfig> grid;
    LambdaConfig selected; // modal per-fold winner, ties to earliest grid entry
    std::vector<TuneFold> folds;
    std::vector<double> candidate_mean_scores; // mean over folds, -1 when never scored
    MetricsReport outer;                       // outer LOOCV with per-fold winners
    std::vector<std::string> warnings;
};

// Nested LOOCV: for each test participant, an inner LOOCV over the remaining
// participants scores every grid candidate by the mean of the two targets'
// F1; the outer fold is evaluated with that fold's winner. Candidates whose
// cluster counts exceed the available inner support are skipped with a
// warning.
TuneResult nested_tune(const std::vector<RawSample>& data,
                       const std::vector<LambdaConfig>& grid, double alpha,
                       std::uint64_t seed, const EvalOptions& opts = {});

// Default candidate grid, ordered by ascending complexity; includes the
// selected configuration (4, 4, 10, 11).
std::vector<LambdaConfig> default_tune_grid();

nlohmann::json metrics_report_to_json(const MetricsReport& report);
nlohmann::json tune_result_to_json(const TuneResult& result);

// Two-row-per-target table mirroring the published layout (mu +/- sigma).
std::string format_report_table(const MetricsReport& report);

nlohmann::json lambda_to_json(const LambdaConfig& lambda);
LambdaConfig lambda_from_json(const nlohmann::json& j);

} // namespace navcbn
