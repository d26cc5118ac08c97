#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gaitnet/cli.hpp"
#include "gaitnet/data.hpp"
#include "gaitnet/gradcheck_suite.hpp"
#include "gaitnet/stvt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gaitnet {
namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "gaitnet");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) { return json::parse(read_file_bytes(p)); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gaitnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  // 6 + 6 videos of 9 frames at 24x24, half of each class for training
  void make_corpus() {
    const auto r = run({"--seed", "5", "--out", path("syn"), "synth", "--normal", "6", "--lame", "6", "--frames", "9",
                        "--size", "24", "--train-fraction", "0.5"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }

  std::vector<std::string> train_args(const std::string& out, const std::string& epochs) const {
    return {"--seed", "2", "--out", path(out), "train", "--manifest", path("syn/manifest.jsonl"), "--frames", "9",
            "--size", "12", "--filters", "2", "--dense", "4", "--dropout", "0.5", "--intermediate", "0", "--epochs",
            epochs};
  }

  fs::path dir_;
};

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({"train", "--help"}).code, kExitOk);
  EXPECT_EQ(run({}).code, kExitInput);
  EXPECT_EQ(run({"train", "--no-such-flag"}).code, kExitInput);
  EXPECT_EQ(run({"--seed", "abc", "gradcheck"}).code, kExitInput);
  EXPECT_EQ(run({"--precision", "f16", "gradcheck"}).code, kExitInput);
  const auto r = run({"train"});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("--manifest"), std::string::npos) << r.err;
}

TEST(Cli, GradcheckExitCodes) {
  auto r = run({"gradcheck"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  for (const auto& op : gradcheck_ops()) EXPECT_NE(r.out.find(op), std::string::npos) << op;

  r = run({"gradcheck", "--op", "conv3d", "--inject-conv3d-sign-bug"});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);

  r = run({"gradcheck", "--op", "dense", "--inject-conv3d-sign-bug"});
  EXPECT_EQ(r.code, kExitOk) << "the fixture only touches conv3d";

  EXPECT_EQ(run({"gradcheck", "--op", "softmax"}).code, kExitInput);
}

TEST_F(CliTest, PipelineWritesArtifacts) {
  make_corpus();
  const auto manifest = load_manifest(path("syn/manifest.jsonl"));
  EXPECT_EQ(manifest.entries.size(), 12u);
  EXPECT_EQ(manifest.counts().train(), 6u);

  auto args = train_args("tr", "2");
  args.push_back("--plots");
  auto r = run(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"checkpoint.gnck", "history.txt", "history.json", "run_config.json", "loss.pgm", "accuracy.pgm"})
    EXPECT_TRUE(fs::exists(dir_ / "tr" / f)) << f;
  EXPECT_EQ(read_json(dir_ / "tr/history.json").size(), 2u);
  const auto cfg = read_json(dir_ / "tr/run_config.json");
  EXPECT_EQ(cfg["train"]["epochs"], 2);
  EXPECT_EQ(cfg["seed"], 2);
  EXPECT_EQ(cfg["model"]["height"], 12);

  r = run({"--out", path("ev"), "evaluate", "--checkpoint", path("tr/checkpoint.gnck"), "--manifest",
           path("syn/manifest.jsonl"), "--plots"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("Accuracy"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "ev/report.json"));
  EXPECT_TRUE(fs::exists(dir_ / "ev/report.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "ev/confusion.pgm"));
  EXPECT_EQ(read_json(dir_ / "ev/report.json")["verdicts"].size(), 6u);

  r = run({"predict", "--checkpoint", path("tr/checkpoint.gnck"), "--input", path("syn/videos/lame_005.stvt")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("video lame_005"), std::string::npos);
  EXPECT_NE(r.out.find("verdict: "), std::string::npos);
  EXPECT_NE(r.out.find("/9 frames)"), std::string::npos) << r.out;
}

TEST_F(CliTest, ConfigFileSitsBetweenDefaultsAndFlags) {
  make_corpus();
  std::ofstream(path("cfg.json")) << R"({"seed": 9, "train": {"epochs": 3, "learning_rate": 0.01},
                                         "model": {"conv_kernel": 3}})";
  auto args = train_args("tr", "1");
  args.insert(args.begin(), {"--config", path("cfg.json")});
  // flags win over the file for --seed and --epochs
  ASSERT_EQ(run(args).code, kExitOk);
  const auto cfg = read_json(dir_ / "tr/run_config.json");
  EXPECT_EQ(cfg["seed"], 2);
  EXPECT_EQ(cfg["train"]["epochs"], 1);
  EXPECT_EQ(cfg["train"]["learning_rate"], 0.01);
  EXPECT_EQ(cfg["train"]["batch_size"], 4);
  EXPECT_EQ(cfg["model"]["conv_kernel"], 3);

  std::ofstream(path("broken.json")) << "{ not json";
  EXPECT_EQ(run({"--config", path("broken.json"), "gradcheck"}).code, kExitInput);
  EXPECT_EQ(run({"--config", path("absent.json"), "gradcheck"}).code, kExitInput);
}

TEST_F(CliTest, OutputRootFromEnvironment) {
  make_corpus();
  auto args = train_args("unused", "1");
  args.erase(args.begin() + 2, args.begin() + 4);  // drop --out
  ::setenv(kOutEnv, path("env_out").c_str(), 1);
  const auto r = run(args);
  ::unsetenv(kOutEnv);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "env_out/checkpoint.gnck"));
}

TEST_F(CliTest, SameSeedSameArtifacts) {
  make_corpus();
  ASSERT_EQ(run(train_args("a", "2")).code, kExitOk);
  ASSERT_EQ(run(train_args("b", "2")).code, kExitOk);
  EXPECT_EQ(read_file_bytes(dir_ / "a/checkpoint.gnck"), read_file_bytes(dir_ / "b/checkpoint.gnck"));

  for (const char* out : {"ea", "eb"})
    ASSERT_EQ(run({"--jobs", out[1] == 'a' ? "1" : "3", "--out", path(out), "evaluate", "--checkpoint",
                   path("a/checkpoint.gnck"), "--manifest", path("syn/manifest.jsonl")})
                  .code,
              kExitOk);
  auto a = read_json(dir_ / "ea/report.json"), b = read_json(dir_ / "eb/report.json");
  a.erase("metadata");
  b.erase("metadata");
  EXPECT_EQ(a, b);
}

TEST_F(CliTest, ResumeMatchesStraightRun) {
  make_corpus();
  ASSERT_EQ(run(train_args("full", "3")).code, kExitOk);
  ASSERT_EQ(run(train_args("part", "2")).code, kExitOk);
  auto args = train_args("part", "3");
  args.insert(args.end(), {"--resume", path("part/checkpoint.gnck")});
  const auto r = run(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.find("epoch   1"), std::string::npos) << "resumed run repeated epoch 1";
  EXPECT_EQ(read_file_bytes(dir_ / "full/checkpoint.gnck"), read_file_bytes(dir_ / "part/checkpoint.gnck"));
}

TEST_F(CliTest, InputErrorsExitTwo) {
  make_corpus();
  ASSERT_EQ(run(train_args("tr", "1")).code, kExitOk);

  // model flags that disagree with the checkpoint
  auto r = run({"evaluate", "--checkpoint", path("tr/checkpoint.gnck"), "--manifest", path("syn/manifest.jsonl"),
                "--size", "16"});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("mismatch"), std::string::npos) << r.err;

  // corrupted checkpoint
  auto bytes = read_file_bytes(dir_ / "tr/checkpoint.gnck");
  bytes[bytes.size() / 2] ^= 0x10;
  write_file_bytes(dir_ / "bad.gnck", bytes);
  r = run({"predict", "--checkpoint", path("bad.gnck"), "--input", path("syn/videos/lame_000.stvt")});
  EXPECT_EQ(r.code, kExitInput);

  // a train split holding one class only
  auto m = load_manifest(path("syn/manifest.jsonl"));
  std::erase_if(m.entries, [](const ManifestEntry& e) { return e.label == Label::kLame && e.split == Split::kTrain; });
  save_manifest(dir_ / "syn/one_class.jsonl", m);
  auto args = train_args("oc", "1");
  args[6] = path("syn/one_class.jsonl");
  r = run(args);
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("both classes"), std::string::npos) << r.err;

  EXPECT_EQ(run({"predict", "--checkpoint", path("tr/checkpoint.gnck"), "--input", path("nope.stvt")}).code,
            kExitInput);
  EXPECT_EQ(run({"synth", "--limp", "1.5", "--out", path("s2")}).code, kExitInput);
}

TEST_F(CliTest, IngestReportsCounts) {
  make_corpus();
  const auto r = run({"--out", path("in"), "ingest", "--manifest", path("syn/manifest.jsonl"), "--frames", "9",
                      "--size", "12", "--intermediate", "0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto s = read_json(dir_ / "in/ingest_summary.json");
  EXPECT_EQ(s["train_frames"], 54);
  EXPECT_EQ(s["augmented_train_frames"], 108);
  EXPECT_EQ(s["test_frames"], 54);
  const auto m = load_manifest(path("in/manifest.jsonl"));
  ASSERT_EQ(m.entries.size(), 12u);
  EXPECT_TRUE(m.entries[0].preprocessed);
}

}  // namespace
}  // namespace gaitnet
