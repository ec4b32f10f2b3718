#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "edgmat/checkpoint.hpp"
#include "edgmat/commands.hpp"
#include "edgmat/synthetic.hpp"
#include "support.hpp"

using namespace edgmat;
using edgmat::testing::read_text;
using edgmat::testing::TempDir;
using edgmat::testing::write_text;

namespace {

class CommandsTest : public ::testing::Test {
 protected:
  CommandsTest() : dir_("commands") {
    write_text(dir_ / "flows.csv", synthetic::netflow_csv({.flows = 600, .seed = 3}));
    write_text(dir_ / "flows.schema", synthetic::netflow_schema());
  }

  RunConfig run(const std::string& out = "run") const {
    RunConfig r;
    r.dataset = dir_ / "flows.csv";
    r.schema = dir_ / "flows.schema";
    r.out = dir_ / out;
    r.model.epochs = 15;
    r.model.heads = 2;
    r.model.hidden = 4;
    return r;
  }

  TempDir dir_;
};

std::size_t lines_in(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_F(CommandsTest, IngestListsClassesAndSampledHistogram) {
  std::ostringstream out;
  auto r = run();
  const auto full = cmd_ingest(r, out);
  EXPECT_EQ(full.class_names.size(), 5u);
  EXPECT_EQ(full.records, 600u);
  EXPECT_NE(out.str().find("class.Theft.count = "), std::string::npos);

  r.sample_fraction = 0.1;
  std::ostringstream sampled_out;
  const auto s = cmd_ingest(r, sampled_out);
  for (std::size_t c = 0; c < 5; ++c) {
    const double expect = 0.1 * static_cast<double>(s.histogram[c]);
    EXPECT_LE(std::abs(static_cast<double>(s.sampled_histogram[c]) - expect), 1.0) << c;
    EXPECT_GE(s.sampled_histogram[c], 1u);
  }
}

TEST_F(CommandsTest, TrainEvaluateExportEndToEnd) {
  const auto r = run();
  const auto t = cmd_train(r);
  EXPECT_EQ(t.loss_trace.size(), 15u);
  for (const char* name : {outputs::checkpoint, outputs::loss_trace, outputs::run_meta}) {
    EXPECT_TRUE(std::filesystem::exists(r.out / name)) << name;
  }
  const std::string trace = read_text(r.out / outputs::loss_trace);
  EXPECT_EQ(trace.substr(0, 11), "epoch,loss\n");
  EXPECT_EQ(lines_in(trace), 16u);
  const auto meta = KvConfig::load(r.out / outputs::run_meta);
  EXPECT_EQ(meta.get("seed"), "42");
  EXPECT_TRUE(meta.get("wall_time_seconds").has_value());

  const std::string ckpt_before = read_text(r.out / outputs::checkpoint);
  const auto report = cmd_evaluate(r);
  EXPECT_EQ(read_text(r.out / outputs::checkpoint), ckpt_before);
  EXPECT_GT(report.total, 0u);
  EXPECT_NE(read_text(r.out / outputs::report_table).find("Weighted Average"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(r.out / outputs::report_kv));

  const std::size_t rows = cmd_export_embeddings(r);
  EXPECT_EQ(rows, report.total);
  const std::string csv = read_text(r.out / outputs::embeddings);
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(header.substr(0, 35), "edge_id,true_label,predicted_label,");
  EXPECT_NE(header.find(",pc1,pc2"), std::string::npos);
  EXPECT_EQ(lines_in(csv), rows + 1);
  const auto model = load_checkpoint(r.out / outputs::checkpoint);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','),
            static_cast<long>(3 + model.edge_embedding_dim() + 2 - 1));

  cmd_export_embeddings(r, {}, Projection::none);
  const std::string plain = read_text(r.out / outputs::embeddings);
  const std::string plain_header = plain.substr(0, plain.find('\n'));
  EXPECT_EQ(plain_header.find("pc1"), std::string::npos);
  EXPECT_EQ(std::count(plain_header.begin(), plain_header.end(), ','),
            static_cast<long>(3 + model.edge_embedding_dim() - 1));
}

TEST_F(CommandsTest, SameSeedGivesIdenticalArtefacts) {
  const auto a = run("a"), b = run("b");
  cmd_train(a);
  cmd_train(b);
  cmd_evaluate(a);
  cmd_evaluate(b);
  for (const char* name : {outputs::loss_trace, outputs::report_table, outputs::report_kv, outputs::checkpoint}) {
    EXPECT_EQ(read_text(a.out / name), read_text(b.out / name)) << name;
  }
}

TEST_F(CommandsTest, InductiveModeSeparatesGraphs) {
  auto r = run();
  r.mode = SplitMode::inductive;
  const auto ex = prepare_experiment(r);
  ASSERT_TRUE(ex.test_graph.has_value());
  EXPECT_EQ(ex.train_graph.edge_count(), ex.train.size());
  EXPECT_EQ(ex.test_graph->edge_count(), ex.test.size());
  cmd_train(r);
  const auto report = cmd_evaluate(r);
  EXPECT_EQ(report.total, ex.test.size());
}

TEST_F(CommandsTest, EvaluateRejectsCheckpointForOtherData) {
  auto r = run();
  cmd_train(r);
  ModelConfig other = load_checkpoint(r.out / outputs::checkpoint).config();
  other.edge_in += 1;
  save_checkpoint(EdgmatModel(other), dir_ / "other.ckpt");
  try {
    cmd_evaluate(r, dir_ / "other.ckpt");
    FAIL();
  } catch (const CommandError& e) {
    EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos);
  }
}

TEST_F(CommandsTest, MissingInputsExitWithStatusTwo) {
  auto r = run();
  r.dataset = dir_ / "nope.csv";
  try {
    cmd_train(r);
    FAIL();
  } catch (const CommandError& e) {
    EXPECT_EQ(e.exit_code(), kExitMissingFile);
    EXPECT_NE(std::string(e.what()).find("nope.csv"), std::string::npos);
  }
  try {
    cmd_evaluate(run(), dir_ / "missing.ckpt");
    FAIL();
  } catch (const CommandError& e) {
    EXPECT_EQ(e.exit_code(), kExitMissingFile);
    EXPECT_NE(std::string(e.what()).find("missing.ckpt"), std::string::npos);
  }
}

TEST_F(CommandsTest, BinaryReportsMissingFileWithStatusTwo) {
  const std::string cmd = std::string(EDGMAT_CLI_PATH) + " ingest --dataset " +
                          (dir_ / "absent.csv").string() + " --schema " +
                          (dir_ / "flows.schema").string() + " 2> " + (dir_ / "err.txt").string();
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(read_text(dir_ / "err.txt").find("absent.csv"), std::string::npos);
}

TEST_F(CommandsTest, BinaryFlagsOverrideConfigFile) {
  write_text(dir_ / "run.kv", "dataset = " + (dir_ / "flows.csv").string() + "\nschema = " +
                                  (dir_ / "flows.schema").string() + "\nepochs = 50\nheads = 1\n"
                                  "hidden = 2\nout = " + (dir_ / "cfg").string() + "\n");
  const std::string cmd = std::string(EDGMAT_CLI_PATH) + " train --config " + (dir_ / "run.kv").string() +
                          " --epochs 3 --sample-fraction 0.5 2>/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(lines_in(read_text(dir_ / "cfg" / outputs::loss_trace)), 4u);
  const auto meta = KvConfig::load(dir_ / "cfg" / outputs::run_meta);
  EXPECT_EQ(meta.get("sample-fraction"), "0.5");
  EXPECT_EQ(meta.get("heads"), "1");
}

TEST(Gradcheck, CommandPrintsOneLinePerCase) {
  std::ostringstream out;
  EXPECT_TRUE(cmd_gradcheck(1, 3, 1e-4, out));
  EXPECT_EQ(lines_in(out.str()), 4u);
}
