#pragma once

#include <stdexcept>
#include <string>

namespace navcbn {

// Malformed or inconsistent input data (bad JSONL row, wrong series length,
// sample/DAG cardinality mismatch). The CLI maps this to exit code 3.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// Quantile discretization could not produce strictly ascending cut points
// (constant or near-constant input).
struct DegenerateEdgesError : std::domain_error {
    explicit DegenerateEdgesError(const std::string& what) : std::domain_error(what) {}
};

} // namespace navcbn
