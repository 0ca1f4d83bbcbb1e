#include "navcbn/features.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "navcbn/errors.hpp"

namespace navcbn {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

const char* to_string(TotalRotationMode mode) {
    return mode == TotalRotationMode::AsWritten ? "as_written" : "path_length";
}

TotalRotationMode total_rotation_mode_from_string(const std::string& s) {
    if (s == "as_written") return TotalRotationMode::AsWritten;
    if (s == "path_length") return TotalRotationMode::PathLength;
    throw std::invalid_argument("unknown total_rotation_mode: " + s);
}

double wrap_angle(double a) {
    if (!std::isfinite(a)) throw std::domain_error("wrap_angle: non-finite angle");
    double r = std::fmod(a, kTwoPi);
    if (r <= -kPi) {
        r += kTwoPi;
    } else if (r > kPi) {
        r -= kTwoPi;
    }
    return r;
}

int binarize_likert(int rating) {
    if (rating < 1 || rating > 5) {
        throw std::domain_error("binarize_likert: rating must be in 1..5, got " +
                                std::to_string(rating));
    }
    return rating >= 4 ? 1 : 0;
}

void validate_raw_sample(const RawSample& s) {
    if (s.goal_rel.size() != static_cast<std::size_t>(kSeriesLen)) {
        throw SchemaError("sample " + s.participant_id + "/" + s.scenario_id +
                          ": goal_rel must have exactly 9 steps, got " +
                          std::to_string(s.goal_rel.size()));
    }
    if (s.human_rel.size() != static_cast<std::size_t>(kSeriesLen)) {
        throw SchemaError("sample " + s.participant_id + "/" + s.scenario_id +
                          ": human_rel must have exactly 9 steps, got " +
                          std::to_string(s.human_rel.size()));
    }
    for (int likert : {s.competence_likert, s.intention_likert}) {
        if (likert < 1 || likert > 5) {
            throw SchemaError("sample " + s.participant_id + "/" + s.scenario_id +
                              ": Likert rating out of 1..5: " + std::to_string(likert));
        }
    }
}

FeatureSample compute_features(const RawSample& s, TotalRotationMode mode) {
    if (s.goal_rel.size() != static_cast<std::size_t>(kSeriesLen) ||
        s.human_rel.size() != static_cast<std::size_t>(kSeriesLen)) {
        throw SchemaError("compute_features: series must have exactly 9 steps (sample " +
                          s.participant_id + "/" + s.scenario_id + ")");
    }

    std::array<double, kSeriesLen> theta{};
    std::array<double, kSeriesLen> dist_goal{};
    std::array<double, kSeriesLen> dist_human{};
    for (int t = 0; t < kSeriesLen; ++t) {
        theta[t] = wrap_angle(std::atan2(s.goal_rel[t].y, s.goal_rel[t].x));
        dist_goal[t] = std::hypot(s.goal_rel[t].x, s.goal_rel[t].y);
        dist_human[t] = std::hypot(s.human_rel[t].x, s.human_rel[t].y);
    }

    FeatureSample f;
    f.participant_id = s.participant_id;
    f.scenario_id = s.scenario_id;
    f.initial_robot_rotation = theta[0];
    for (int t = 0; t < kSeriesLen; ++t) {
        f.robot_rotation_change[t] = wrap_angle(theta[t] - theta[0]);
        f.robot_pos_change[t] = dist_goal[t] - dist_goal[0];
        f.human_pos_change[t] = dist_human[t] - dist_human[0];
    }

    double total = 0.0;
    if (mode == TotalRotationMode::AsWritten) {
        for (int t = 0; t < kSeriesLen; ++t) total += std::abs(theta[t]);
    } else {
        for (int t = 1; t < kSeriesLen; ++t) total += std::abs(wrap_angle(theta[t] - theta[t - 1]));
    }
    f.total_robot_rotation = total;

    f.competence = binarize_likert(s.competence_likert);
    f.intention = binarize_likert(s.intention_likert);
    return f;
}

namespace {

template <typename T, typename Lerp>
std::vector<T> resample_impl(const std::vector<T>& in, int out_len, Lerp lerp) {
    if (out_len < 2) throw std::invalid_argument("resample: out_len must be >= 2");
    if (in.size() < 2) throw SchemaError("resample: need at least 2 input steps");
    if (static_cast<int>(in.size()) == out_len) return in;
    std::vector<T> out(out_len);
    const double scale = static_cast<double>(in.size() - 1) / (out_len - 1);
    for (int i = 0; i < out_len; ++i) {
        const double pos = i * scale;
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, in.size() - 1);
        out[i] = lerp(in[lo], in[hi], pos - static_cast<double>(lo));
    }
    return out;
}

} // namespace

std::vector<Vec2> resample_points(const std::vector<Vec2>& in, int out_len) {
    return resample_impl(in, out_len, [](const Vec2& a, const Vec2& b, double u) {
        return Vec2{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
    });
}

std::vector<Pose2> resample_poses(const std::vector<Pose2>& in, int out_len) {
    return resample_impl(in, out_len, [](const Pose2& a, const Pose2& b, double u) {
        // Headings interpolate along the shortest arc.
        const double dtheta = wrap_angle(b.theta - a.theta);
        return Pose2{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y),
                     wrap_angle(a.theta + u * dtheta)};
    });
}

} // namespace navcbn
