#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "synthcl/checkpoint.hpp"
#include "synthcl/data.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunOutput {
  int code = -1;
  std::string out;
};

RunOutput run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SYNTHCL_CLI_PATH + "\" " + args + " 2>/dev/null";
  RunOutput res;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return res;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, n);
  const int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "synthcl_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    const RunOutput gen = run_cli("generate-data --out-dir " + (root_ / "data").string() +
                                  " --seed 5 --classes 4 --per-class 12 --eval-per-class 6"
                                  " --synthetic-per-class 12 --dim 8 --shift 1.0");
    ASSERT_EQ(gen.code, 0);
    json cfg = {{"seed", 2},
                {"max_steps", 12},
                {"batch_size", 8},
                {"queue_capacity", 32},
                {"encoder_dims", {8, 8, 4}},
                {"synthesis", {{"n_hardest", 4}, {"n_synthetic", 4}}},
                {"probe", {{"steps", 40}}},
                {"real_path", (root_ / "data" / "real.s2co").string()},
                {"synthetic_path", (root_ / "data" / "synthetic.s2co").string()},
                {"probe_eval_path", (root_ / "data" / "eval.s2co").string()}};
    std::ofstream(root_ / "config.json") << cfg.dump(2);
  }

  static std::string config_arg() { return "--config " + (root_ / "config.json").string(); }

  static fs::path root_;
};

fs::path Cli::root_;

TEST_F(Cli, GenerateDataWritesThreeSets) {
  const synthcl::Dataset real = synthcl::dataset_read(root_ / "data" / "real.s2co");
  const synthcl::Dataset eval = synthcl::dataset_read(root_ / "data" / "eval.s2co");
  const synthcl::Dataset synth = synthcl::dataset_read(root_ / "data" / "synthetic.s2co");
  EXPECT_EQ(real.size(), 48u);
  EXPECT_EQ(eval.size(), 24u);
  EXPECT_EQ(synth.size(), 48u);
  EXPECT_EQ(real.dim(), 8u);
  EXPECT_EQ(synth.origin, synthcl::Origin::Synthetic);
}

TEST_F(Cli, PretrainProbeInspect) {
  const fs::path out = root_ / "run";
  const RunOutput pre = run_cli("pretrain " + config_arg() + " --out-dir " + out.string());
  ASSERT_EQ(pre.code, 0) << pre.out;
  EXPECT_EQ(json::parse(pre.out)["steps"], 12);
  EXPECT_TRUE(fs::exists(out / "checkpoint_final.s2ck"));
  EXPECT_TRUE(fs::exists(out / "config.json"));

  const RunOutput ins = run_cli("inspect-checkpoint " + (out / "checkpoint_final.s2ck").string());
  ASSERT_EQ(ins.code, 0);
  const json info = json::parse(ins.out);
  EXPECT_EQ(info["step"], 12);
  EXPECT_EQ(info["queue"]["fill"], 32);
  EXPECT_EQ(info["encoder_dims"], json({8, 8, 4}));

  const RunOutput prb = run_cli("probe " + config_arg() + " --checkpoint " + (out / "checkpoint_final.s2ck").string() +
                                " --out " + (out / "probe.json").string());
  ASSERT_EQ(prb.code, 0);
  const json probe = json::parse(slurp(out / "probe.json"));
  EXPECT_EQ(probe["n_eval"], 24);
  EXPECT_GE(probe["top5"].get<double>(), probe["top1"].get<double>());
  EXPECT_EQ(probe["config_hash"].get<std::string>().size(), 16u);
}

TEST_F(Cli, ResumeFromInterruptedRunMatches) {
  const fs::path a = root_ / "resume_a";
  const fs::path b = root_ / "resume_b";
  ASSERT_EQ(run_cli("pretrain " + config_arg() + " --out-dir " + a.string()).code, 0);
  ASSERT_EQ(run_cli("pretrain " + config_arg() + " --set max_steps=6 --out-dir " + b.string()).code, 0);
  ASSERT_EQ(run_cli("pretrain " + config_arg() + " --out-dir " + b.string() + " --resume " +
                    (b / "checkpoint_final.s2ck").string())
                .code,
            0);
  EXPECT_EQ(slurp(a / "checkpoint_final.s2ck"), slurp(b / "checkpoint_final.s2ck"));
  EXPECT_EQ(slurp(a / "metrics.jsonl"), slurp(b / "metrics.jsonl"));
}

TEST_F(Cli, SeedFlagChangesRun) {
  const fs::path a = root_ / "seed_a";
  const fs::path b = root_ / "seed_b";
  ASSERT_EQ(run_cli("pretrain " + config_arg() + " --seed 10 --out-dir " + a.string()).code, 0);
  ASSERT_EQ(run_cli("pretrain " + config_arg() + " --seed 11 --out-dir " + b.string()).code, 0);
  EXPECT_NE(slurp(a / "metrics.jsonl"), slurp(b / "metrics.jsonl"));
}

TEST_F(Cli, SweepWritesCsv) {
  const fs::path out = root_ / "sweep";
  const RunOutput swp = run_cli("sweep " + config_arg() + " --axis real_fraction --values 0,0.5,1 --out-dir " +
                                out.string());
  ASSERT_EQ(swp.code, 0);
  const std::string csv = slurp(out / "sweep.csv");
  EXPECT_EQ(csv, swp.out);
  EXPECT_EQ(csv.rfind("axis_value,top1,top5,final_loss\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST_F(Cli, ExitCodes) {
  const std::string out = " --out-dir " + (root_ / "bad").string();
  EXPECT_EQ(run_cli("pretrain " + config_arg() + " --set temperature=0" + out).code, 2);
  EXPECT_EQ(run_cli("pretrain " + config_arg() + " --set no_such_key=1" + out).code, 2);
  EXPECT_EQ(run_cli("pretrain " + config_arg() + " --set synthesis.n_hardest=64" + out).code, 2);
  EXPECT_EQ(run_cli("sweep " + config_arg() + " --axis bogus --values 1" + out).code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);
  EXPECT_EQ(run_cli("pretrain").code, 2);
  EXPECT_EQ(run_cli("inspect-checkpoint " + (root_ / "missing.s2ck").string()).code, 1);
  EXPECT_EQ(run_cli("pretrain " + config_arg() + " --set real_path=/nonexistent/real.s2co" + out).code, 1);
  EXPECT_EQ(run_cli("--help").code, 0);
}

}  // namespace
