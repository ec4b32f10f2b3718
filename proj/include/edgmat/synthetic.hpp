#pragma once

// Generated flow datasets for tests, the acceptance suite and the benchmark.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "edgmat/flow_ingest.hpp"

namespace edgmat::synthetic {

/// Two-class flows over a fixed socket pool. Feature 0 is uniform on [0, 1);
/// the label is 1 iff feature0 + N(0, label_noise) > threshold. The remaining
/// features are uniform noise.
struct ThresholdSpec {
  std::size_t flows = 400;
  std::size_t sockets = 20;
  std::size_t noise_features = 3;
  double threshold = 0.5;
  double label_noise = 0.01;
  std::uint64_t seed = 7;
};

std::vector<FlowRecord> threshold_flows(const ThresholdSpec& spec);

/// NetFlow-format CSV with five classes (Benign, DDoS, DoS, Reconnaissance,
/// Theft) whose traffic shapes differ in topology and volume, plus the
/// matching schema text.
struct NetflowSpec {
  std::size_t flows = 3000;
  std::uint64_t seed = 11;
};

std::string netflow_csv(const NetflowSpec& spec);
std::string netflow_schema();

}  // namespace edgmat::synthetic
