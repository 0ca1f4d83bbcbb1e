#include "navcbn/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "navcbn/errors.hpp"

#include <nlohmann/json.hpp>

namespace navcbn {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json raw_sample_to_json(const RawSample& s) {
    json goal = json::array();
    for (const Vec2& p : s.goal_rel) goal.push_back(json::array({p.x, p.y}));
    json human = json::array();
    for (const Pose2& p : s.human_rel) human.push_back(json::array({p.x, p.y, p.theta}));
    return json{{"participant_id", s.participant_id},
                {"scenario_id", s.scenario_id},
                {"goal_rel", std::move(goal)},
                {"human_rel", std::move(human)},
                {"competence_likert", s.competence_likert},
                {"intention_likert", s.intention_likert}};
}

namespace {

double json_number(const json& j, const char* context) {
    if (!j.is_number()) throw SchemaError(std::string("expected a number in ") + context);
    return j.get<double>();
}

} // namespace

RawSample raw_sample_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("sample row is not a JSON object");
    for (const char* key : {"participant_id", "scenario_id", "goal_rel", "human_rel",
                            "competence_likert", "intention_likert"}) {
        if (!j.contains(key)) throw SchemaError(std::string("missing field: ") + key);
    }
    RawSample s;
    s.participant_id = j.at("participant_id").get<std::string>();
    s.scenario_id = j.at("scenario_id").get<std::string>();
    for (const json& pt : j.at("goal_rel")) {
        if (!pt.is_array() || pt.size() < 2 || pt.size() > 3) {
            throw SchemaError("goal_rel entries must be [x,y] or [x,y,theta]");
        }
        s.goal_rel.push_back({json_number(pt[0], "goal_rel"), json_number(pt[1], "goal_rel")});
    }
    for (const json& pt : j.at("human_rel")) {
        if (!pt.is_array() || pt.size() < 2 || pt.size() > 3) {
            throw SchemaError("human_rel entries must be [x,y] or [x,y,theta]");
        }
        Pose2 p{json_number(pt[0], "human_rel"), json_number(pt[1], "human_rel"), 0.0};
        if (pt.size() == 3) p.theta = json_number(pt[2], "human_rel");
        s.human_rel.push_back(p);
    }
    if (!j.at("competence_likert").is_number_integer() ||
        !j.at("intention_likert").is_number_integer()) {
        throw SchemaError("Likert ratings must be integers");
    }
    s.competence_likert = j.at("competence_likert").get<int>();
    s.intention_likert = j.at("intention_likert").get<int>();
    return s;
}

std::vector<RawSample> load_raw_jsonl(const std::string& path, bool resample) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open dataset: " + path);
    std::vector<RawSample> samples;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            RawSample s = raw_sample_from_json(j);
            if (resample) {
                s.goal_rel = resample_points(s.goal_rel);
                s.human_rel = resample_poses(s.human_rel);
            }
            validate_raw_sample(s);
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return samples;
}

void save_raw_jsonl(const std::string& path, const std::vector<RawSample>& samples) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write dataset: " + path);
    for (const RawSample& s : samples) out << raw_sample_to_json(s).dump() << '\n';
}

void write_features_csv(const std::string& path, const std::vector<FeatureSample>& samples) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write CSV: " + path);
    out << "participant_id,scenario_id,initial_robot_rotation,total_robot_rotation";
    for (const char* series : {"robot_rotation_change", "robot_pos_change", "human_pos_change"}) {
        for (int t = 0; t < kSeriesLen; ++t) out << ',' << series << "_t" << t;
    }
    out << ",competence,intention\n";
    for (const FeatureSample& f : samples) {
        out << f.participant_id << ',' << f.scenario_id << ','
            << format_double(f.initial_robot_rotation) << ','
            << format_double(f.total_robot_rotation);
        for (const auto* series : {&f.robot_rotation_change, &f.robot_pos_change,
                                   &f.human_pos_change}) {
            for (double v : *series) out << ',' << format_double(v);
        }
        out << ',' << f.competence << ',' << f.intention << '\n';
    }
}

} // namespace navcbn
