#pragma once

#include <string>
#include <vector>

#include "navcbn/features.hpp"

#include <nlohmann/json_fwd.hpp>

namespace navcbn {

// Shortest round-trip decimal formatting; used everywhere a double is
// written to CSV so artifacts are byte-stable.
std::string format_double(double v);

nlohmann::json raw_sample_to_json(const RawSample& s);
RawSample raw_sample_from_json(const nlohmann::json& j);

// JSON Lines, one RawSample per line. With resample = true, series of any
// length >= 2 are linearly resampled to 9 steps; otherwise exactly 9 steps
// are required. Malformed rows raise SchemaError with the line number.
std::vector<RawSample> load_raw_jsonl(const std::string& path, bool resample = false);
void save_raw_jsonl(const std::string& path, const std::vector<RawSample>& samples);

// One row per sample, series flattened with _t0.._t8 suffixes.
void write_features_csv(const std::string& path, const std::vector<FeatureSample>& samples);

} // namespace navcbn
