#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factgraph/example.hpp"

namespace factgraph {

struct SchemaViolation : std::runtime_error {
  SchemaViolation(int line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line(line) {}
  int line;
};

// One JSON object per line. Unknown keys are rejected; duplicate ids keep
// the first record and append a note to `warnings` when given.
std::vector<FactualityExample> load_dataset(
    const std::string& path, std::vector<std::string>* warnings = nullptr);
std::vector<FactualityExample> parse_dataset_lines(
    const std::string& text, std::vector<std::string>* warnings = nullptr);

void save_dataset(const std::string& path,
                  const std::vector<FactualityExample>& records);
std::string dataset_record_json(const FactualityExample& record);

struct DatasetSplit {
  std::vector<FactualityExample> train, dev, test;
};

// Stratified by label (unlabeled records form their own stratum), shuffled
// deterministically by seed. Fractions must be positive and sum to <= 1;
// the test split absorbs the remainder.
DatasetSplit split_dataset(const std::vector<FactualityExample>& records,
                           double train_frac, double dev_frac, uint64_t seed);

}  // namespace factgraph
