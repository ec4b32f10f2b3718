#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgmat/flow_graph.hpp"
#include "edgmat/flow_ingest.hpp"
#include "edgmat/kv_config.hpp"
#include "edgmat/model.hpp"

namespace edgmat {

/// Everything a run needs. Config keys match the CLI flag names
/// (`sample-fraction`, `train-fraction`, ...); underscores are accepted too.
struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path schema;
  std::filesystem::path out = "edgmat_out";
  SplitMode mode = SplitMode::transductive;
  double sample_fraction = 1.0;
  double train_fraction = 0.7;
  InitRule node_init;
  ModelConfig model;  // classes / node_in / edge_in are filled from the data

  static RunConfig from_kv(const KvConfig& kv);
  /// Applies `kv` on top of `base`.
  static RunConfig from_kv(const KvConfig& kv, RunConfig base);
  KvConfig to_kv() const;
  /// Ranges and read-input existence.
  void validate() const;
};

/// Ingested, split, normalised data and the graph(s) for one run.
struct Experiment {
  DatasetSchema schema;
  std::size_t total_records = 0;
  std::vector<std::size_t> full_histogram;
  std::vector<std::size_t> sampled_histogram;
  std::vector<FlowRecord> train;
  std::vector<FlowRecord> test;
  std::vector<std::string> warnings;
  NormStats norm;
  FlowGraph train_graph;
  std::optional<FlowGraph> test_graph;  // inductive only

  /// Graph whose test-masked edges are evaluated.
  const FlowGraph& eval_graph() const { return test_graph ? *test_graph : train_graph; }
  /// Model config with data-dependent dimensions filled in.
  ModelConfig model_config(const RunConfig& run) const;
};

std::vector<FlowRecord> load_records(const RunConfig& run, const DatasetSchema& schema);
Experiment prepare_experiment(const RunConfig& run);

}  // namespace edgmat
