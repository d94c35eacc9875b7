#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string g_binary;

struct RunResult {
  int exit_code;
  std::string output;
};

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "airseg_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string wp(const std::string& name) { return (work_dir() / name).string(); }

RunResult run(const std::string& args) {
  const std::string log = wp("cmd.log");
  const std::string cmd = g_binary + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  int code = -1;
  if (WIFEXITED(status)) code = WEXITSTATUS(status);
  return {code, buf.str()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kTinyConfig =
    "dims = 4 24 24\n"
    "trunk_radius = 4\n"
    "trunk_length = 4\n"
    "branch_depth = 0\n"
    "epochs = 3\n"
    "batch_size = 2\n"
    "seed = 7\n";

}  // namespace

TEST(Cli, DescribeEmitsTableAndTotals) {
  RunResult r = run("describe");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("total parameters:"), std::string::npos);
  EXPECT_NE(r.output.find("minimum legal input extent: 17"), std::string::npos);
  EXPECT_NE(r.output.find("enc1/convin"), std::string::npos);
  EXPECT_NE(r.output.find("fuse"), std::string::npos);
}

TEST(Cli, PhantomThenRefineOnGroundTruthShowsOneComponent) {
  write_file(wp("cfg.txt"), kTinyConfig);
  RunResult ph = run("phantom " + wp("vol.rvol") + " " + wp("mask.rvol") +
                     " --config " + wp("cfg.txt"));
  ASSERT_EQ(ph.exit_code, 0) << ph.output;
  RunResult rf = run("refine " + wp("mask.rvol") + " " + wp("refined.rvol") +
                     " --report " + wp("report.txt"));
  ASSERT_EQ(rf.exit_code, 0) << rf.output;
  EXPECT_NE(rf.output.find("components: 1"), std::string::npos);
  EXPECT_NE(slurp(wp("report.txt")).find("components: 1"), std::string::npos);
  // refining a refined single-component mask is a fixed point
  RunResult rf2 = run("refine " + wp("refined.rvol") + " " + wp("refined2.rvol"));
  ASSERT_EQ(rf2.exit_code, 0) << rf2.output;
  EXPECT_EQ(slurp(wp("refined.rvol")), slurp(wp("refined2.rvol")));
}

TEST(Cli, GradcheckPassesAtStatedTolerance) {
  RunResult r = run("gradcheck --tolerance 1e-3");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("max relative error"), std::string::npos);
}

TEST(Cli, GradcheckFailsClosedOnAbsurdTolerance) {
  RunResult r = run("gradcheck --tolerance 1e-12");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("numeric failure"), std::string::npos);
}

TEST(Cli, PredictRejectsUndersizedVolumeNamingMinimum) {
  write_file(wp("cfg_small.txt"),
             "dims = 3 12 12\ntrunk_radius = 3\ntrunk_length = 3\nbranch_depth = 0\n");
  RunResult ph = run("phantom " + wp("small.rvol") + " " + wp("small_mask.rvol") +
                     " --config " + wp("cfg_small.txt"));
  ASSERT_EQ(ph.exit_code, 0) << ph.output;
  RunResult pr = run("predict --init " + wp("small.rvol") + " " + wp("small_prob.rvol"));
  EXPECT_EQ(pr.exit_code, 1);
  EXPECT_NE(pr.output.find("17"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyRejected) {
  write_file(wp("bad.txt"), "epocs = 3\n");
  RunResult r = run("describe --config " + wp("bad.txt"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("epocs"), std::string::npos);
}

TEST(Cli, TrainPredictEvalMontageFlow) {
  write_file(wp("cfg.txt"), kTinyConfig);
  RunResult ph = run("phantom " + wp("vol.rvol") + " " + wp("mask.rvol") +
                     " --config " + wp("cfg.txt"));
  ASSERT_EQ(ph.exit_code, 0) << ph.output;

  RunResult tr = run("train --volume " + wp("vol.rvol") + " --mask " + wp("mask.rvol") +
                     " " + wp("ck.u2ckpt") + " " + wp("loss.csv") + " --config " +
                     wp("cfg.txt"));
  ASSERT_EQ(tr.exit_code, 0) << tr.output;
  EXPECT_EQ(slurp(wp("loss.csv")).rfind("epoch,step,train_loss,val_loss\n", 0), 0u);

  RunResult pr = run("predict --checkpoint " + wp("ck.u2ckpt") + " " + wp("vol.rvol") +
                     " " + wp("prob.rvol"));
  ASSERT_EQ(pr.exit_code, 0) << pr.output;

  RunResult rf = run("refine " + wp("prob.rvol") + " " + wp("pred_mask.rvol"));
  ASSERT_EQ(rf.exit_code, 0) << rf.output;

  RunResult ev = run("eval " + wp("ck.u2ckpt") + " --volume " + wp("vol.rvol") +
                     " --mask " + wp("mask.rvol") + " --out " + wp("eval.csv"));
  ASSERT_EQ(ev.exit_code, 0) << ev.output;
  EXPECT_NE(ev.output.find("case,dsc,status"), std::string::npos);
  EXPECT_NE(ev.output.find("mean,"), std::string::npos);

  RunResult mo = run("montage " + wp("vol.rvol") + " " + wp("montage") + " --every-k 2");
  ASSERT_EQ(mo.exit_code, 0) << mo.output;
  EXPECT_TRUE(std::filesystem::exists(wp("montage_z0000.pgm")));
  EXPECT_TRUE(std::filesystem::exists(wp("montage_z0002.pgm")));
  EXPECT_FALSE(std::filesystem::exists(wp("montage_z0001.pgm")));
}

TEST(Cli, ReproducibleOutputsUnderSameSeed) {
  write_file(wp("cfg.txt"), kTinyConfig);
  RunResult a = run("phantom " + wp("pa.rvol") + " " + wp("ma.rvol") + " --config " +
                    wp("cfg.txt"));
  RunResult b = run("phantom " + wp("pb.rvol") + " " + wp("mb.rvol") + " --config " +
                    wp("cfg.txt"));
  ASSERT_EQ(a.exit_code, 0);
  ASSERT_EQ(b.exit_code, 0);
  EXPECT_EQ(slurp(wp("pa.rvol")), slurp(wp("pb.rvol")));
  EXPECT_EQ(slurp(wp("ma.rvol")), slurp(wp("mb.rvol")));
}

TEST(Cli, PreprocessEmitsNormalizedF32) {
  write_file(wp("cfg.txt"), kTinyConfig);
  RunResult ph = run("phantom " + wp("vol.rvol") + " " + wp("mask.rvol") +
                     " --config " + wp("cfg.txt"));
  ASSERT_EQ(ph.exit_code, 0);
  RunResult pp = run("preprocess " + wp("vol.rvol") + " " + wp("norm.rvol"));
  ASSERT_EQ(pp.exit_code, 0) << pp.output;
  const std::string bytes = slurp(wp("norm.rvol"));
  EXPECT_NE(bytes.find("dtype: f32"), std::string::npos);
}

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-airseg-binary>\n");
    return 1;
  }
  g_binary = argv[1];
  return RUN_ALL_TESTS();
}
