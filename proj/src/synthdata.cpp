#include "navcbn/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "navcbn/errors.hpp"
#include "navcbn/rng.hpp"

namespace navcbn {

namespace {
constexpr double kPi = std::numbers::pi;
}

const char* to_string(Archetype a) {
    switch (a) {
    case Archetype::DirectApproach: return "direct_approach";
    case Archetype::CurvedApproach: return "curved_approach";
    case Archetype::SpinInPlace: return "spin_in_place";
    case Archetype::Retreat: return "retreat";
    case Archetype::Stall: return "stall";
    case Archetype::Overshoot: return "overshoot";
    }
    return "?";
}

Archetype archetype_from_string(const std::string& s) {
    if (s == "direct_approach") return Archetype::DirectApproach;
    if (s == "curved_approach") return Archetype::CurvedApproach;
    if (s == "spin_in_place") return Archetype::SpinInPlace;
    if (s == "retreat") return Archetype::Retreat;
    if (s == "stall") return Archetype::Stall;
    if (s == "overshoot") return Archetype::Overshoot;
    throw std::invalid_argument("unknown archetype: " + s);
}

namespace {

// Two discrete intensity levels per archetype keep the generated bundles
// tight so clusters concentrate instead of smearing over a continuum.
double pick_level(Rng& rng, double lo, double hi) {
    const double level = rng.next_below(2) == 0 ? lo : hi;
    return level + rng.uniform(-0.15, 0.15);
}

} // namespace

RawSample generate_scenario(Archetype a, const NoiseConfig& noise, std::uint64_t seed,
                            const ScenarioParams& params) {
    Rng rng(seed);
    RawSample raw;
    raw.participant_id = "synthetic";
    raw.scenario_id = to_string(a);
    raw.competence_likert = 1; // placeholder until a label is attached
    raw.intention_likert = 1;

    // Start distance stays inside the 7.2 m public-space envelope.
    double d0 = params.start_distance.value_or(rng.uniform(4.0, 7.0));
    std::array<double, kSeriesLen> dist{};
    std::array<double, kSeriesLen> bearing{};

    switch (a) {
    case Archetype::DirectApproach: {
        double approach = params.intensity.value_or(pick_level(rng, 3.0, 4.2));
        approach = std::min(approach, d0 - 0.5);
        const double beta0 = params.initial_bearing.value_or(rng.uniform(-0.1, 0.1));
        for (int t = 0; t < kSeriesLen; ++t) {
            dist[t] = d0 - approach * t / 8.0;
            bearing[t] = beta0;
        }
        break;
    }
    case Archetype::CurvedApproach: {
        double approach = params.intensity.value_or(pick_level(rng, 2.5, 3.5));
        approach = std::min(approach, d0 - 0.5);
        const double beta0 = params.initial_bearing.value_or(rng.uniform(-0.12, 0.12));
        const double swing =
            params.swing.value_or((beta0 >= 0.0 ? 1.0 : -1.0) * pick_level(rng, 2.0, 2.4));
        for (int t = 0; t < kSeriesLen; ++t) {
            dist[t] = d0 - approach * t / 8.0;
            bearing[t] = beta0 + swing * std::sin(kPi * t / 8.0);
        }
        break;
    }
    case Archetype::SpinInPlace: {
        double beta0 = params.initial_bearing.value_or(
            (rng.next_below(2) == 0 ? 1.0 : -1.0) * rng.uniform(kPi / 4.0, kPi));
        const double sweep = beta0 >= 0.0 ? 2.0 * kPi : -2.0 * kPi;
        for (int t = 0; t < kSeriesLen; ++t) {
            dist[t] = d0;
            bearing[t] = beta0 + sweep * t / 8.0;
        }
        break;
    }
    case Archetype::Retreat: {
        d0 = params.start_distance.value_or(rng.uniform(2.5, 4.8));
        const double retreat = params.intensity.value_or(pick_level(rng, 1.2, 2.0));
        const double beta0 = params.initial_bearing.value_or(rng.uniform(-0.3, 0.3));
        // Turns away from the goal while backing off.
        const double drift = (beta0 >= 0.0 ? 1.0 : -1.0) * 0.6;
        for (int t = 0; t < kSeriesLen; ++t) {
            dist[t] = d0 + retreat * t / 8.0;
            bearing[t] = beta0 + drift * t / 8.0;
        }
        break;
    }
    case Archetype::Stall: {
        const double beta0 = params.initial_bearing.value_or(
            (rng.next_below(2) == 0 ? 1.0 : -1.0) * rng.uniform(0.8, 1.4));
        for (int t = 0; t < kSeriesLen; ++t) {
            dist[t] = d0;
            bearing[t] = beta0;
        }
        break;
    }
    case Archetype::Overshoot: {
        const double approach = params.intensity.value_or(pick_level(rng, 2.2, 3.0));
        const double beta0 = params.initial_bearing.value_or(rng.uniform(-0.12, 0.12));
        // Small bearing swing as the robot passes the goal.
        const double wobble = (beta0 >= 0.0 ? 1.0 : -1.0) * 0.45;
        for (int t = 0; t < kSeriesLen; ++t) {
            // Approaches until t = 5, then retreats past the start distance.
            dist[t] = t <= 5 ? d0 - approach * t / 5.0
                             : d0 - approach + 1.5 * approach * (t - 5) / 3.0;
            bearing[t] = beta0 + wobble * std::sin(kPi * t / 8.0);
        }
        break;
    }
    }

    // Follower trails behind the robot with a distance lag.
    const double h0 = rng.uniform(1.2, 2.2);
    const double psi = kPi + rng.normal(0.0, 0.15);

    for (int t = 0; t < kSeriesLen; ++t) {
        const double d = std::max(0.15, dist[t] + rng.normal(0.0, noise.pos_sigma));
        const double b = bearing[t] + rng.normal(0.0, noise.rot_sigma);
        raw.goal_rel.push_back({d * std::cos(b), d * std::sin(b)});

        const double lag = 0.15 * std::abs(dist[t] - dist[0]);
        const double h = std::max(0.2, h0 + lag + rng.normal(0.0, 0.5 * noise.pos_sigma));
        const double hb = psi + rng.normal(0.0, noise.rot_sigma);
        raw.human_rel.push_back({h * std::cos(hb), h * std::sin(hb),
                                 rng.normal(0.0, noise.rot_sigma)});
    }
    return raw;
}

std::pair<int, int> oracle_label(const FeatureSample& f, const OracleConfig& o, double eta,
                                 std::uint64_t seed) {
    if (eta < 0.0 || eta >= 0.5) throw std::invalid_argument("oracle_label: eta must be in [0, 0.5)");
    double path_rotation = 0.0;
    for (int t = 1; t < kSeriesLen; ++t) {
        path_rotation +=
            std::abs(wrap_angle(f.robot_rotation_change[t] - f.robot_rotation_change[t - 1]));
    }
    int competence =
        (f.robot_pos_change[8] < -o.delta_pos && path_rotation < o.delta_rot) ? 1 : 0;
    const double final_misalignment =
        std::abs(f.initial_robot_rotation + f.robot_rotation_change[8]);
    int intention =
        (final_misalignment < o.delta_align && f.robot_pos_change[8] < 0.0) ? 1 : 0;

    Rng rng(seed);
    if (rng.next_double() < eta) competence ^= 1;
    if (rng.next_double() < eta) intention ^= 1;
    return {competence, intention};
}

std::vector<RawSample> generate_dataset(const GeneratorConfig& config,
                                        const OracleConfig& oracle) {
    if (config.participants < 1 || config.samples_per_participant < 1) {
        throw std::invalid_argument("generate_dataset: counts must be >= 1");
    }
    double total_weight = 0.0;
    for (double w : config.archetype_mix) {
        if (w < 0.0) throw std::invalid_argument("generate_dataset: negative archetype weight");
        total_weight += w;
    }
    if (total_weight <= 0.0) {
        throw std::invalid_argument("generate_dataset: archetype weights sum to zero");
    }
    if (config.label_noise < 0.0 || config.label_noise >= 0.5) {
        throw std::invalid_argument("generate_dataset: label_noise must be in [0, 0.5)");
    }

    std::vector<RawSample> out;
    out.reserve(static_cast<std::size_t>(config.participants) * config.samples_per_participant);
    for (int p = 0; p < config.participants; ++p) {
        char pid[16];
        std::snprintf(pid, sizeof(pid), "p%03d", p);
        Rng rng(derive_seed(config.seed, pid));
        for (int s = 0; s < config.samples_per_participant; ++s) {
            // Weighted archetype draw.
            double r = rng.next_double() * total_weight;
            int arch = kArchetypeCount - 1;
            for (int i = 0; i < kArchetypeCount; ++i) {
                r -= config.archetype_mix[i];
                if (r < 0.0) {
                    arch = i;
                    break;
                }
            }
            const std::uint64_t scenario_seed = rng.next_u64();
            const std::uint64_t label_seed = rng.next_u64();

            RawSample raw =
                generate_scenario(static_cast<Archetype>(arch), config.noise, scenario_seed);
            raw.participant_id = pid;
            char sid[24];
            std::snprintf(sid, sizeof(sid), "%s_s%03d", pid, s);
            raw.scenario_id = sid;

            const FeatureSample f = compute_features(raw);
            const auto [competence, intention] =
                oracle_label(f, oracle, config.label_noise, label_seed);
            raw.competence_likert = competence ? 5 : 2;
            raw.intention_likert = intention ? 5 : 2;
            out.push_back(std::move(raw));
        }
    }
    return out;
}

std::vector<DiscreteSample> generate_from_cbn(const CbnModel& model, int n, std::uint64_t seed) {
    if (n < 1) throw std::domain_error("generate_from_cbn: n must be >= 1");
    const DagValidation v = validate_dag(model.dag);
    if (!v.ok) throw std::invalid_argument("generate_from_cbn: " + v.message);

    Rng rng(seed);
    std::vector<DiscreteSample> out;
    out.reserve(n);
    std::vector<int> parent_values;
    for (int i = 0; i < n; ++i) {
        DiscreteSample d;
        d.participant_id = "synthetic";
        d.scenario_id = "s" + std::to_string(i);
        for (const std::string& name : v.topo_order) {
            const CptTable& table = model.cpts.at(name);
            parent_values.clear();
            for (const std::string& p : table.parents) parent_values.push_back(d.values.at(p));
            const CptRow row = table.row(table.config_index(parent_values));
            const double u = rng.next_double();
            double cum = 0.0;
            int value = table.node_card - 1;
            for (int x = 0; x < table.node_card; ++x) {
                cum += row.probs[x];
                if (u < cum) {
                    value = x;
                    break;
                }
            }
            d.values[name] = value;
        }
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace navcbn
