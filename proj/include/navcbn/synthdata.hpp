#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "navcbn/cbn.hpp"
#include "navcbn/features.hpp"

namespace navcbn {

enum class Archetype {
    DirectApproach,
    CurvedApproach,
    SpinInPlace,
    Retreat,
    Stall,
    Overshoot,
};

inline constexpr int kArchetypeCount = 6;

const char* to_string(Archetype a);
Archetype archetype_from_string(const std::string& s);

struct NoiseConfig {
    double pos_sigma = 0.12; // meters, per step
    double rot_sigma = 0.05; // radians, per step
};

struct GeneratorConfig {
    int participants = 12;
    int samples_per_participant = 30;
    // Weights over {direct, curved, spin, retreat, stall, overshoot}.
    std::array<double, kArchetypeCount> archetype_mix = {2.0, 1.5, 1.0, 1.0, 1.0, 1.0};
    NoiseConfig noise;
    double label_noise = 0.0; // eta, independent flip probability per label
    std::uint64_t seed = 0;
};

// Ground-truth labeling thresholds. Plumbing constants chosen so archetypes
// split between labels; not taken from any published source.
struct OracleConfig {
    double delta_pos = 1.0;            // required net approach, meters
    double delta_rot = 3.14159265358979323846;  // rotation budget, radians
    double delta_align = 0.52359877559829887;   // final alignment, radians (pi/6)
};

// Optional per-scenario overrides used by tests needing fixed geometry.
struct ScenarioParams {
    std::optional<double> start_distance;  // meters
    std::optional<double> intensity;       // approach/retreat magnitude, meters
    std::optional<double> initial_bearing; // radians
    std::optional<double> swing;           // curved-approach amplitude, radians
};

// One synthetic window in the robot frame, deterministic per seed. Likert
// fields are placeholders (1) until a label is attached.
RawSample generate_scenario(Archetype a, const NoiseConfig& noise, std::uint64_t seed,
                            const ScenarioParams& params = {});

// Clean labels from motion thresholds, each flipped independently with
// probability eta. competence: net approach beyond delta_pos with
// step-to-step rotation under delta_rot; intention: final goal alignment
// within delta_align while net approach is negative.
std::pair<int, int> oracle_label(const FeatureSample& f, const OracleConfig& o, double eta,
                                 std::uint64_t seed);

// Full labeled dataset: archetypes drawn by weight, labels from the oracle,
// emitted as Likert {2, 5} so the binarization path round-trips.
std::vector<RawSample> generate_dataset(const GeneratorConfig& config,
                                        const OracleConfig& oracle = {});

// Ancestral sampling in topological order.
std::vector<DiscreteSample> generate_from_cbn(const CbnModel& model, int n,
                                              std::uint64_t seed);

} // namespace navcbn
