#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(MMAE_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("mmae_cli_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

TEST(Cli, HelpAndUsageErrors) {
  auto help = run("--help");
  EXPECT_EQ(help.code, 0);
  for (const char* sub : {"synth", "train", "score", "eval", "gradcheck", "ablate"})
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("train").code, 2);
  EXPECT_EQ(run("score --model /nonexistent --input x --report y").code, 2);
}

TEST(Cli, SynthTrainScoreEval) {
  TempDir tmp;
  const std::string d = tmp.path.string();
  auto synth = run("synth --out " + d + "/data --n-normal 8 --n-abnormal 3 --n-test-normal 3 --leads 2 --fs 100"
                   " --duration 1.6 --seed 4");
  ASSERT_EQ(synth.code, 0) << synth.out;

  std::ofstream(d + "/cfg.json") << R"({
    "data": {"leads": 2, "fs": 100, "segment_length": 20},
    "model": {"segments": 8, "region_offsets": [0, 4], "embed_dim": 8, "decoder_dim": 8, "depth": 1,
              "encoder_heads": 2, "decoder_heads": 2},
    "train": {"batch_size": 4, "epochs": 2, "warmup_epochs": 0},
    "infer": {"passes": 2}})";
  auto train = run("train --config " + d + "/cfg.json --data " + d + "/data/train.json --out " + d +
                   "/m.ckpt --history " + d + "/h.jsonl --deterministic");
  ASSERT_EQ(train.code, 0) << train.out;
  EXPECT_TRUE(fs::exists(d + "/m.ckpt"));

  fs::path record;
  for (const auto& e : fs::directory_iterator(d + "/data/records"))
    if (e.path().extension() == ".ecgb" && e.path().filename().string().find("abnormal") != std::string::npos)
      record = e.path();
  ASSERT_FALSE(record.empty());
  auto score = run("score --model " + d + "/m.ckpt --input " + record.string() + " --report " + d +
                   "/r.json --svg " + d + "/r.svg --leads 0 --window 10:150");
  ASSERT_EQ(score.code, 0) << score.out;
  EXPECT_TRUE(fs::exists(d + "/r.svg"));
  EXPECT_GT(std::stod(score.out), 0.0);

  auto again = run("score --model " + d + "/m.ckpt --input " + record.string() + " --report " + d + "/r2.json");
  EXPECT_EQ(again.out, score.out);

  auto bad_window = run("score --model " + d + "/m.ckpt --input " + record.string() + " --report " + d +
                        "/r.json --svg " + d + "/x.svg --window 9:3");
  EXPECT_EQ(bad_window.code, 2);

  auto eval = run("eval --model " + d + "/m.ckpt --manifest " + d + "/data/test.json --report " + d +
                  "/e.json --localization");
  ASSERT_EQ(eval.code, 0) << eval.out;
  EXPECT_NE(eval.out.find("detection_auroc"), std::string::npos);
  EXPECT_NE(eval.out.find("localization_auroc"), std::string::npos);

  auto inspect = run("inspect --model " + d + "/m.ckpt");
  EXPECT_EQ(inspect.code, 0);
  EXPECT_NE(inspect.out.find("parameters"), std::string::npos);
}

}  // namespace
