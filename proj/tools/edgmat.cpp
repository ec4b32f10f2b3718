// edgmat — command-line front end.
//
//   edgmat ingest            --dataset flows.csv --schema flows.schema
//   edgmat train             --config run.kv --epochs 100 --out runs/a
//   edgmat evaluate          --config run.kv --out runs/a
//   edgmat export-embeddings --config run.kv --out runs/a --projection pca2
//   edgmat gradcheck         --cases 20
//
// Every flag overrides the key of the same name in the --config file.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "edgmat/commands.hpp"
#include "edgmat/log.hpp"

namespace {

struct RunFlags {
  std::string config;
  std::optional<std::string> dataset, schema, mode, out, node_init;
  std::optional<double> sample_fraction, train_fraction, dropout, lr;
  std::optional<long long> epochs, heads, hidden, layers;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "Key-value config file")->check(CLI::ExistingFile);
    app.add_option("--dataset", dataset, "NetFlow-format CSV");
    app.add_option("--schema", schema, "Dataset schema file");
    app.add_option("--mode", mode, "transductive or inductive");
    app.add_option("--sample-fraction", sample_fraction, "Stratified subsample fraction in (0, 1]");
    app.add_option("--train-fraction", train_fraction, "Train share of each class in (0, 1)");
    app.add_option("--epochs", epochs, "Training epochs");
    app.add_option("--heads", heads, "Attention heads per layer");
    app.add_option("--hidden", hidden, "Per-head output width");
    app.add_option("--layers", layers, "Number of attention layers");
    app.add_option("--dropout", dropout, "Dropout probability");
    app.add_option("--lr", lr, "Adam learning rate");
    app.add_option("--node-init", node_init, "ones, zeros or constant:<c>");
    app.add_option("--seed", seed, "Seed for sampling, splitting, init and dropout");
    app.add_option("--out", out, "Output directory");
  }

  edgmat::RunConfig resolve() const {
    edgmat::RunConfig run;
    if (!config.empty()) run = edgmat::RunConfig::from_kv(edgmat::KvConfig::load(config));
    edgmat::KvConfig over;
    auto put = [&](const char* key, const auto& v) {
      if (!v) return;
      if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>) {
        over.set(key, *v);
      } else {
        over.set(key, std::to_string(*v));
      }
    };
    put("dataset", dataset);
    put("schema", schema);
    put("mode", mode);
    put("out", out);
    put("node-init", node_init);
    put("epochs", epochs);
    put("heads", heads);
    put("hidden", hidden);
    put("layers", layers);
    put("seed", seed);
    // Fractions go through the shortest round-trip text, not std::to_string's 6 digits.
    auto put_double = [&](const char* key, const std::optional<double>& v) {
      if (v) over.set(key, CLI::detail::to_string(*v));
    };
    put_double("sample-fraction", sample_fraction);
    put_double("train-fraction", train_fraction);
    put_double("dropout", dropout);
    put_double("lr", lr);
    return edgmat::RunConfig::from_kv(over, run);
  }
};

}  // namespace

int main(int argc, char** argv) {
  edgmat::log::configure_from_env();

  CLI::App app{"Edge-directed graph attention for flow-level intrusion detection"};
  app.require_subcommand(1);

  RunFlags flags;
  auto* ingest = app.add_subcommand("ingest", "Parse a dataset and print its class histogram");
  auto* train = app.add_subcommand("train", "Train a model and write checkpoint + loss trace");
  auto* evaluate = app.add_subcommand("evaluate", "Score the test-masked edges");
  auto* exporter = app.add_subcommand("export-embeddings", "Write final edge embeddings as CSV");
  auto* gradcheck = app.add_subcommand("gradcheck", "Check model gradients against finite differences");
  for (auto* sub : {ingest, train, evaluate, exporter}) flags.attach(*sub);

  std::string checkpoint;
  std::string projection = "pca2";
  for (auto* sub : {evaluate, exporter}) {
    sub->add_option("--checkpoint", checkpoint, "Checkpoint file (default <out>/checkpoint)");
  }
  exporter->add_option("--projection", projection, "none or pca2");

  std::uint64_t gc_seed = 1;
  std::size_t gc_cases = 20;
  double gc_tolerance = 1e-4;
  gradcheck->add_option("--seed", gc_seed, "First case seed");
  gradcheck->add_option("--cases", gc_cases, "Number of random graphs");
  gradcheck->add_option("--tolerance", gc_tolerance, "Maximum relative error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gradcheck->parsed()) {
      return edgmat::cmd_gradcheck(gc_seed, gc_cases, gc_tolerance, std::cout) ? 0 : 1;
    }
    edgmat::RunConfig run;
    try {
      run = flags.resolve();
    } catch (const std::exception& e) {
      throw edgmat::CommandError("config", e.what());
    }
    if (ingest->parsed()) {
      edgmat::cmd_ingest(run, std::cout);
    } else if (train->parsed()) {
      edgmat::cmd_train(run);
    } else if (evaluate->parsed()) {
      const auto report = edgmat::cmd_evaluate(run, checkpoint);
      edgmat::write_report_table(std::cout, report);
    } else if (exporter->parsed()) {
      edgmat::cmd_export_embeddings(run, checkpoint, edgmat::parse_projection(projection));
    }
  } catch (const edgmat::CommandError& e) {
    std::cerr << "edgmat: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "edgmat: " << e.what() << '\n';
    return edgmat::kExitFailure;
  }
  return 0;
}
