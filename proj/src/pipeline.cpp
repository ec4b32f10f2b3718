#include "edgmat/pipeline.hpp"

#include <algorithm>
#include <cstdio>

#include "edgmat/log.hpp"

namespace edgmat {

namespace {

std::string canonical_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t as_size(const std::string& key, const std::string& v) {
  const long long x = parse_int(v);
  if (x < 0) throw ConfigError("'" + key + "' must be non-negative");
  return static_cast<std::size_t>(x);
}

}  // namespace

RunConfig RunConfig::from_kv(const KvConfig& kv) { return from_kv(kv, RunConfig{}); }

RunConfig RunConfig::from_kv(const KvConfig& kv, RunConfig c) {
  for (const auto& [raw_key, value] : kv.entries()) {
    const std::string key = canonical_key(raw_key);
    try {
      if (key == "dataset") c.dataset = value;
      else if (key == "schema") c.schema = value;
      else if (key == "out") c.out = value;
      else if (key == "mode") c.mode = parse_split_mode(value);
      else if (key == "sample-fraction") c.sample_fraction = parse_double(value);
      else if (key == "train-fraction") c.train_fraction = parse_double(value);
      else if (key == "node-init") c.node_init = InitRule::parse(value);
      else if (key == "layers") c.model.layers = as_size(key, value);
      else if (key == "heads") c.model.heads = as_size(key, value);
      else if (key == "hidden") c.model.hidden = as_size(key, value);
      else if (key == "epochs") c.model.epochs = as_size(key, value);
      else if (key == "dropout") c.model.dropout = parse_double(value);
      else if (key == "lr") c.model.lr = parse_double(value);
      else if (key == "leaky-slope") c.model.leaky_slope = parse_double(value);
      else if (key == "beta1") c.model.beta1 = parse_double(value);
      else if (key == "beta2") c.model.beta2 = parse_double(value);
      else if (key == "eps") c.model.eps = parse_double(value);
      else if (key == "seed") c.model.seed = static_cast<std::uint64_t>(std::stoull(value));
      else throw ConfigError("unknown config key '" + raw_key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("config key '" + raw_key + "': " + e.what());
    }
  }
  return c;
}

KvConfig RunConfig::to_kv() const {
  KvConfig kv;
  kv.set("dataset", dataset.string());
  kv.set("schema", schema.string());
  kv.set("out", out.string());
  kv.set("mode", std::string(to_string(mode)));
  kv.set("sample-fraction", num(sample_fraction));
  kv.set("train-fraction", num(train_fraction));
  kv.set("node-init", node_init.to_string());
  kv.set("layers", std::to_string(model.layers));
  kv.set("heads", std::to_string(model.heads));
  kv.set("hidden", std::to_string(model.hidden));
  kv.set("epochs", std::to_string(model.epochs));
  kv.set("dropout", num(model.dropout));
  kv.set("lr", num(model.lr));
  kv.set("leaky-slope", num(model.leaky_slope));
  kv.set("beta1", num(model.beta1));
  kv.set("beta2", num(model.beta2));
  kv.set("eps", num(model.eps));
  kv.set("seed", std::to_string(model.seed));
  return kv;
}

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("no dataset given");
  if (schema.empty()) throw ConfigError("no schema given");
  if (!std::filesystem::exists(dataset)) throw ConfigError("dataset not found: " + dataset.string());
  if (!std::filesystem::exists(schema)) throw ConfigError("schema not found: " + schema.string());
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw ConfigError("sample-fraction must lie in (0, 1]");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train-fraction must lie in (0, 1)");
  }
}

ModelConfig Experiment::model_config(const RunConfig& run) const {
  ModelConfig m = run.model;
  m.classes = schema.class_count();
  m.edge_in = schema.feature_dim();
  m.node_in = run.node_init.dim ? run.node_init.dim : m.edge_in;
  return m;
}

std::vector<FlowRecord> load_records(const RunConfig& run, const DatasetSchema& schema) {
  return parse_csv(run.dataset, schema);
}

Experiment prepare_experiment(const RunConfig& run) {
  run.validate();
  Experiment ex;
  ex.schema = DatasetSchema::load(run.schema);
  const auto all = load_records(run, ex.schema);
  ex.total_records = all.size();
  ex.full_histogram = class_histogram(all, ex.schema.class_count());

  const std::uint64_t seed = run.model.seed;
  const auto sampled =
      run.sample_fraction < 1.0 ? stratified_sample(all, run.sample_fraction, seed) : all;
  ex.sampled_histogram = class_histogram(sampled, ex.schema.class_count());

  SplitResult split = stratified_split(sampled, {run.mode, run.train_fraction, seed});
  ex.warnings = std::move(split.warnings);
  if (split.train.empty()) throw std::invalid_argument("no training records after the split");

  ex.norm = normalize_fit(split.train, ex.schema.numeric_positions());
  ex.train = normalize_apply(split.train, ex.norm);
  ex.test = normalize_apply(split.test, ex.norm);

  if (run.mode == SplitMode::transductive) {
    ex.train_graph = assemble_transductive(ex.train, ex.test, run.node_init);
  } else {
    auto [train_graph, test_graph] = assemble_inductive(ex.train, ex.test, run.node_init);
    ex.train_graph = std::move(train_graph);
    ex.test_graph = std::move(test_graph);
  }
  log::info("{} records ({} sampled): {} train / {} test, {} mode, {} nodes / {} edges in the "
            "training graph",
            ex.total_records, sampled.size(), ex.train.size(), ex.test.size(), to_string(run.mode),
            ex.train_graph.node_count(), ex.train_graph.edge_count());
  return ex;
}

}  // namespace edgmat
