#pragma once

#include <array>
#include <string>
#include <vector>

namespace navcbn {

// Observation windows are 8 seconds sampled at 1 Hz: t = 0..8.
inline constexpr int kSeriesLen = 9;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

// One observation window: relative poses in the robot frame plus the two
// Likert ratings collected at the end of the window.
struct RawSample {
    std::string participant_id;
    std::string scenario_id;
    std::vector<Vec2> goal_rel;   // goal position in robot frame, 9 steps
    std::vector<Pose2> human_rel; // follower pose in robot frame, 9 steps
    int competence_likert = 1;
    int intention_likert = 1;
};

// How total_robot_rotation is computed. AsWritten sums absolute robot-goal
// angles; PathLength sums absolute wrapped step-to-step angle differences.
enum class TotalRotationMode { AsWritten, PathLength };

const char* to_string(TotalRotationMode mode);
TotalRotationMode total_rotation_mode_from_string(const std::string& s);

struct FeatureSample {
    std::string participant_id;
    std::string scenario_id;
    double initial_robot_rotation = 0.0; // radians in (-pi, pi]
    double total_robot_rotation = 0.0;   // radians, >= 0
    std::array<double, kSeriesLen> robot_rotation_change{};
    std::array<double, kSeriesLen> robot_pos_change{};
    std::array<double, kSeriesLen> human_pos_change{};
    int competence = 0;
    int intention = 0;
};

// Canonical variable order shared by discretization, the DAG and exports.
inline const std::array<const char*, 7> kVariableNames = {
    "initial_robot_rotation", "total_robot_rotation",  "robot_rotation_change",
    "robot_pos_change",       "human_pos_change",      "competence",
    "intention"};

// Wraps an angle into (-pi, pi]. Throws std::domain_error on non-finite input.
double wrap_angle(double a);

// 1..3 -> 0, 4..5 -> 1. Throws std::domain_error outside 1..5.
int binarize_likert(int rating);

// Throws SchemaError when series lengths differ from kSeriesLen or Likert
// values are out of range.
void validate_raw_sample(const RawSample& s);

FeatureSample compute_features(const RawSample& s,
                               TotalRotationMode mode = TotalRotationMode::AsWritten);

// Linear-interpolation resampling to out_len steps for inputs captured at a
// different rate. Pose headings are interpolated along the shortest arc.
std::vector<Vec2> resample_points(const std::vector<Vec2>& in, int out_len = kSeriesLen);
std::vector<Pose2> resample_poses(const std::vector<Pose2>& in, int out_len = kSeriesLen);

} // namespace navcbn
