#include "edgmat/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <algorithm>
#include <fstream>
#include <ostream>

#include "edgmat/checkpoint.hpp"
#include "edgmat/diagnostics.hpp"
#include "edgmat/log.hpp"
#include "edgmat/projection.hpp"

namespace edgmat {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_file(const std::string& stage, const fs::path& path, const char* what) {
  if (path.empty()) throw CommandError(stage, std::string("no ") + what + " given");
  if (!fs::is_regular_file(path)) {
    throw CommandError(stage, std::string(what) + " not found: " + path.string(), kExitMissingFile);
  }
}

// Runs `f`, re-labelling any non-command exception with `stage`.
template <class F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const CommandError&) {
    throw;
  } catch (const std::exception& e) {
    throw CommandError(stage, e.what());
  }
}

void check_inputs(const RunConfig& run) {
  require_file("config", run.dataset, "dataset");
  require_file("config", run.schema, "schema");
  staged("config", [&] { run.validate(); });
}

std::ofstream open_output(const std::string& stage, const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw CommandError(stage, "cannot write " + path.string());
  return out;
}

void ensure_out_dir(const std::string& stage, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CommandError(stage, "cannot create output directory " + dir.string() + ": " + ec.message());
}

fs::path checkpoint_path(const RunConfig& run, const fs::path& given) {
  return given.empty() ? run.out / outputs::checkpoint : given;
}

// Loads the checkpoint and checks its data-dependent dimensions against the
// ones the configured dataset produces.
EdgmatModel load_matching_model(const std::string& stage, const RunConfig& run,
                                const Experiment& ex, const fs::path& path) {
  require_file(stage, path, "checkpoint");
  EdgmatModel model = staged(stage, [&] { return load_checkpoint(path); });
  const ModelConfig want = ex.model_config(run);
  const ModelConfig& have = model.config();
  auto check = [&](const char* name, std::size_t got, std::size_t expected) {
    if (got != expected) {
      throw CommandError(stage, std::string("dimension mismatch: checkpoint ") + name + " = " +
                                    std::to_string(got) + " but the configured data gives " +
                                    std::to_string(expected));
    }
  };
  check("classes", have.classes, want.classes);
  check("edge_in", have.edge_in, want.edge_in);
  check("node_in", have.node_in, want.node_in);
  if (have.heads != want.heads || have.hidden != want.hidden || have.layers != want.layers) {
    log::warn("checkpoint architecture (layers {}, heads {}, hidden {}) differs from the config "
              "(layers {}, heads {}, hidden {}); using the checkpoint's",
              have.layers, have.heads, have.hidden, want.layers, want.heads, want.hidden);
  }
  return model;
}

struct TestSelection {
  std::vector<EdgeId> edges;
  std::vector<ClassId> truth;
  std::vector<ClassId> predicted;
};

TestSelection select_test(const FlowGraph& graph, const Prediction& pred) {
  TestSelection s;
  s.edges = graph.edges_with_mask(EdgeMask::test);
  for (EdgeId e : s.edges) {
    s.truth.push_back(graph.edges()[e].label);
    s.predicted.push_back(pred.labels[e]);
  }
  return s;
}

}  // namespace

IngestSummary cmd_ingest(const RunConfig& run, std::ostream& out) {
  check_inputs(run);
  IngestSummary s;
  const DatasetSchema schema = staged("ingest", [&] { return DatasetSchema::load(run.schema); });
  const auto records = staged("ingest", [&] { return load_records(run, schema); });
  const auto sampled = staged("ingest", [&] {
    return run.sample_fraction < 1.0 ? stratified_sample(records, run.sample_fraction, run.model.seed)
                                     : records;
  });
  s.class_names = schema.class_names;
  s.records = records.size();
  s.sampled = sampled.size();
  s.feature_dim = schema.feature_dim();
  s.histogram = class_histogram(records, schema.class_count());
  s.sampled_histogram = class_histogram(sampled, schema.class_count());

  out << "dataset = " << run.dataset.string() << '\n'
      << "records = " << s.records << '\n'
      << "sampled_records = " << s.sampled << '\n'
      << "sample_fraction = " << num(run.sample_fraction) << '\n'
      << "feature_dim = " << s.feature_dim << '\n'
      << "classes = " << s.class_names.size() << '\n';
  for (std::size_t c = 0; c < s.class_names.size(); ++c) {
    out << "class." << s.class_names[c] << ".count = " << s.histogram[c] << '\n'
        << "class." << s.class_names[c] << ".sampled = " << s.sampled_histogram[c] << '\n';
  }
  return s;
}

TrainSummary cmd_train(const RunConfig& run) {
  check_inputs(run);
  const auto started = std::chrono::steady_clock::now();
  const std::time_t started_at = std::time(nullptr);

  const Experiment ex = staged("ingest", [&] { return prepare_experiment(run); });
  for (const auto& w : ex.warnings) log::warn("{}", w);
  EdgmatModel model = staged("train", [&] { return EdgmatModel(ex.model_config(run)); });
  const TrainReport report = staged("train", [&] { return train(model, ex.train_graph); });
  for (const auto& w : report.warnings) log::warn("{}", w);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  ensure_out_dir("train", run.out);
  staged("checkpoint", [&] { save_checkpoint(model, run.out / outputs::checkpoint); });

  auto trace = open_output("train", run.out / outputs::loss_trace);
  trace << "epoch,loss\n";
  for (std::size_t i = 0; i < report.loss_trace.size(); ++i) {
    trace << i + 1 << ',' << num(report.loss_trace[i]) << '\n';
  }

  KvConfig meta = run.to_kv();
  meta.set("records", std::to_string(ex.total_records));
  meta.set("train_records", std::to_string(ex.train.size()));
  meta.set("test_records", std::to_string(ex.test.size()));
  meta.set("train_graph_nodes", std::to_string(ex.train_graph.node_count()));
  meta.set("train_graph_edges", std::to_string(ex.train_graph.edge_count()));
  if (ex.test_graph) {
    meta.set("test_graph_nodes", std::to_string(ex.test_graph->node_count()));
    meta.set("test_graph_edges", std::to_string(ex.test_graph->edge_count()));
  }
  for (std::size_t c = 0; c < report.class_weights.size(); ++c) {
    meta.set("class_weight." + ex.schema.class_names[c], num(report.class_weights[c]));
  }
  meta.set("final_loss", report.loss_trace.empty() ? "nan" : num(report.loss_trace.back()));
  meta.set("warnings", std::to_string(ex.warnings.size() + report.warnings.size()));
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started_at));
  meta.set("started_at", stamp);
  meta.set("wall_time_seconds", num(seconds));
  auto meta_file = open_output("train", run.out / outputs::run_meta);
  meta_file << meta.serialize();

  log::info("trained {} epochs in {:.2f} s; final loss {:.6f}", report.loss_trace.size(), seconds,
            report.loss_trace.empty() ? 0.0 : report.loss_trace.back());
  TrainSummary s;
  s.loss_trace = report.loss_trace;
  s.train_edges = ex.train_graph.edges_with_mask(EdgeMask::train).size();
  s.nodes = ex.train_graph.node_count();
  s.edges = ex.train_graph.edge_count();
  return s;
}

EvalReport cmd_evaluate(const RunConfig& run, const fs::path& checkpoint) {
  check_inputs(run);
  const Experiment ex = staged("ingest", [&] { return prepare_experiment(run); });
  const EdgmatModel model = load_matching_model("evaluate", run, ex, checkpoint_path(run, checkpoint));
  const FlowGraph& graph = ex.eval_graph();
  const Prediction pred = staged("evaluate", [&] { return predict(model, graph); });
  const TestSelection sel = select_test(graph, pred);
  const EvalReport report = staged("evaluate", [&] {
    return evaluate_predictions(sel.truth, sel.predicted, ex.schema.class_names);
  });

  ensure_out_dir("evaluate", run.out);
  auto table = open_output("evaluate", run.out / outputs::report_table);
  write_report_table(table, report);
  auto kv = open_output("evaluate", run.out / outputs::report_kv);
  write_report_kv(kv, report);
  log::info("weighted F1 {:.4f} over {} test edges", report.weighted.f1, report.total);
  return report;
}

Projection parse_projection(std::string_view s) {
  if (s == "none") return Projection::none;
  if (s == "pca2") return Projection::pca2;
  throw std::invalid_argument("unknown projection '" + std::string(s) + "' (expected none or pca2)");
}

std::size_t cmd_export_embeddings(const RunConfig& run, const fs::path& checkpoint,
                                  Projection projection) {
  check_inputs(run);
  const Experiment ex = staged("ingest", [&] { return prepare_experiment(run); });
  const EdgmatModel model = load_matching_model("export", run, ex, checkpoint_path(run, checkpoint));
  const FlowGraph& graph = ex.eval_graph();
  const Prediction pred = staged("export", [&] { return predict(model, graph); });
  const TestSelection sel = select_test(graph, pred);

  const std::size_t width = pred.edge_embedding.cols();
  Tensor rows({sel.edges.size(), width});
  for (std::size_t r = 0; r < sel.edges.size(); ++r) {
    for (std::size_t j = 0; j < width; ++j) rows(r, j) = pred.edge_embedding(sel.edges[r], j);
  }
  Pca2 pca;
  if (projection == Projection::pca2) pca = staged("projection", [&] { return pca2(rows); });

  ensure_out_dir("export", run.out);
  auto out = open_output("export", run.out / outputs::embeddings);
  out << "edge_id,true_label,predicted_label";
  for (std::size_t j = 0; j < width; ++j) out << ",e" << j;
  if (projection == Projection::pca2) out << ",pc1,pc2";
  out << '\n';
  const auto& names = ex.schema.class_names;
  for (std::size_t r = 0; r < sel.edges.size(); ++r) {
    out << sel.edges[r] << ',' << names[sel.truth[r]] << ',' << names[sel.predicted[r]];
    for (std::size_t j = 0; j < width; ++j) out << ',' << num(rows(r, j));
    if (projection == Projection::pca2) {
      out << ',' << num(pca.coordinates(r, 0)) << ',' << num(pca.coordinates(r, 1));
    }
    out << '\n';
  }
  log::info("wrote {} embeddings of width {}", sel.edges.size(), width);
  return sel.edges.size();
}

bool cmd_gradcheck(std::uint64_t seed, std::size_t cases, double tolerance, std::ostream& out) {
  bool ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    const ModelGradcheck g = staged("gradcheck", [&] { return gradcheck_model(seed + i); });
    worst = std::max(worst, g.result.max_error);
    const bool pass = g.result.max_error < tolerance;
    ok = ok && pass;
    out << "case " << i << ": nodes=" << g.nodes << " edges=" << g.edges
        << " heads=" << g.config.heads << " hidden=" << g.config.hidden
        << " max_error=" << num(g.result.max_error) << (pass ? " ok" : " FAIL") << '\n';
    for (const auto& group : g.result.groups) {
      log::debug("  {} {:.3e}", group.name, group.max_error);
      if (group.max_error >= tolerance) out << "  " << group.name << " " << num(group.max_error) << '\n';
    }
  }
  out << "max_error = " << num(worst) << '\n';
  return ok;
}

}  // namespace edgmat
