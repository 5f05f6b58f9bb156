#pragma once

#include <cstdint>
#include <string>

#include "oaudit/dataset.hpp"

namespace oaudit {

// Names one rare demographic group, how prevalent it is, and how much the
// simulated model's error noise is inflated on that group's rows.
struct PlantedSpec {
  std::string group;        // one of the generated demographic channels
  double prevalence = 0.02;
  double inflation = 1.0;   // 1.0 = null, no planted disparity
};

inline constexpr const char* kSyntheticModelId = "simmodel";

// Rows carry random demographic memberships, decimal ground-truth toxicity
// scores, and simulated model scores (truth + Gaussian noise, sigma scaled by
// the inflation factor on planted rows). Texts are templated from identity
// mentions plus topic tokens so text outliers correlate with rare identities.
// Bit-identical for a fixed seed. Not yet binarized.
DatasetTable generate_synthetic(std::size_t n, std::size_t n_groups, const PlantedSpec& planted,
                                std::uint64_t seed);

std::string synthetic_group_name(std::size_t index);

}  // namespace oaudit
