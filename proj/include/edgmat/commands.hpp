#pragma once

// The five CLI subcommands as library calls, so tests drive them in-process.
//
// Output directory layout (fixed names):
//   checkpoint      model parameters (binary)
//   loss_trace.csv  epoch,loss
//   run_meta.kv     seed, config echo, data summary, wall time
//   report.txt      per-class table with a "Weighted Average" row
//   report.kv       the same numbers as key = value lines
//   embeddings.csv  per-edge final embeddings (+ PCA coordinates)

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "edgmat/metrics.hpp"
#include "edgmat/pipeline.hpp"

namespace edgmat {

inline constexpr int kExitFailure = 1;
inline constexpr int kExitMissingFile = 2;

/// Every command failure carries the stage it happened in and the exit status
/// the CLI should return.
class CommandError : public std::runtime_error {
 public:
  CommandError(std::string stage, const std::string& message, int exit_code = kExitFailure)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

namespace outputs {
inline constexpr const char* checkpoint = "checkpoint";
inline constexpr const char* loss_trace = "loss_trace.csv";
inline constexpr const char* run_meta = "run_meta.kv";
inline constexpr const char* report_table = "report.txt";
inline constexpr const char* report_kv = "report.kv";
inline constexpr const char* embeddings = "embeddings.csv";
}  // namespace outputs

struct IngestSummary {
  std::vector<std::string> class_names;
  std::size_t records = 0;
  std::size_t sampled = 0;
  std::size_t feature_dim = 0;
  std::vector<std::size_t> histogram;          // full file
  std::vector<std::size_t> sampled_histogram;  // after --sample-fraction
};

IngestSummary cmd_ingest(const RunConfig& run, std::ostream& out);

struct TrainSummary {
  std::vector<double> loss_trace;
  std::size_t train_edges = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
};

TrainSummary cmd_train(const RunConfig& run);

/// `checkpoint` empty => <out>/checkpoint. Never writes to the checkpoint.
EvalReport cmd_evaluate(const RunConfig& run, const std::filesystem::path& checkpoint = {});

enum class Projection { none, pca2 };
Projection parse_projection(std::string_view s);

/// Returns the number of rows written.
std::size_t cmd_export_embeddings(const RunConfig& run, const std::filesystem::path& checkpoint = {},
                                  Projection projection = Projection::pca2);

/// Whole-model gradient check on `cases` random graphs. Returns true iff every
/// parameter group stays under `tolerance`.
bool cmd_gradcheck(std::uint64_t seed, std::size_t cases, double tolerance, std::ostream& out);

}  // namespace edgmat
