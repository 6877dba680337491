#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "phdeval/mask.hpp"
#include "phdeval/skeleton.hpp"
#include "test_support.hpp"

namespace phdeval {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(PHDEVAL_CLI) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BinaryMask bar(int y) {
  BinaryMask m({40, 24});
  testing::fill_rect(m, 3, y, 34, 3);
  return m;
}

struct Fixture {
  testing::TempDir tmp;
  fs::path gt, near, far;

  Fixture() {
    gt = tmp.path() / "gt";
    near = tmp.path() / "near";
    far = tmp.path() / "far";
    for (const auto& d : {gt, near, far}) fs::create_directories(d);
    for (int i = 0; i < 2; ++i) {
      const std::string name = "s" + std::to_string(i) + ".png";
      write_mask(bar(8 + i), (gt / name).string());
      write_mask(bar(9 + i), (near / name).string());
      write_mask(bar(16), (far / name).string());
    }
  }
  std::string dirs() const {
    return "--gt " + gt.string() + " --pred near=" + near.string() + " --pred far=" + far.string() +
           " --polarity light";
  }
};

TEST(Cli, EvaluateWritesReports) {
  Fixture f;
  const fs::path out = f.tmp.path() / "out";
  const CliResult r = run("evaluate " + f.dirs() + " --metrics f1,phd:0,phd:1 --out " + out.string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("PHD-1"), std::string::npos) << r.out;
  for (const char* file : {"per_image.csv", "summary.csv", "summary.json"}) EXPECT_TRUE(fs::exists(out / file));
  const std::string summary = slurp(out / "summary.csv");
  // One-pixel shift: zero at t=1, so the near method scores 0.
  EXPECT_NE(summary.find("near,2,"), std::string::npos) << summary;
  EXPECT_NE(summary.find(",0.0000,0\n"), std::string::npos) << summary;
}

TEST(Cli, EvaluateMismatchIsError) {
  Fixture f;
  fs::remove(f.near / "s1.png");
  const CliResult r = run("evaluate " + f.dirs() + " --out " + (f.tmp.path() / "out").string());
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, EvaluateMetricFailureIsTwo) {
  Fixture f;
  write_mask(BinaryMask({40, 24}), (f.far / "s0.png").string());
  const CliResult r = run("evaluate " + f.dirs() + " --metrics f1,phd:0 --out " + (f.tmp.path() / "out").string());
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, RejectsBadArguments) {
  Fixture f;
  EXPECT_NE(run("evaluate --out x").code, 0);
  EXPECT_EQ(run("evaluate " + f.dirs() + " --metrics f7 --out " + (f.tmp.path() / "o").string()).code, 1);
  EXPECT_EQ(run("evaluate --gt " + f.gt.string() + " --pred nodir --out " + (f.tmp.path() / "o").string()).code, 1);
}

TEST(Cli, SkeletonizeMatchesLibrary) {
  Fixture f;
  const fs::path in = f.gt / "s0.png", out = f.tmp.path() / "skel.png";
  ASSERT_EQ(run("skeletonize --polarity light " + in.string() + " " + out.string()).code, 0);
  const BinaryMask expected = skeleton_to_mask(thin(load_mask(in.string(), BinarizationPolicy::canonical())));
  EXPECT_EQ(load_mask(out.string(), BinarizationPolicy::canonical()), expected);
  EXPECT_EQ(run("skeletonize " + (f.tmp.path() / "missing.png").string() + " " + out.string()).code, 1);
}

TEST(Cli, ConsistencyToStdoutAndFiles) {
  Fixture f;
  const fs::path manifest = f.tmp.path() / "groups.json", votes = f.tmp.path() / "votes.jsonl";
  std::ofstream(manifest) << R"([{"group_id":"g","gt":"gt/s0.png","pred_a":"near/s0.png","pred_b":"far/s0.png"}])";
  {
    std::ofstream v(votes);
    for (int s = 0; s < 3; ++s) {
      v << R"({"group_id":"g","subject_id":"s)" << s
        << R"(","choice":"A","ts":"2024-05-01T10:00:00.000Z"})" << "\n";
    }
  }
  const std::string common = "consistency --manifest " + manifest.string() + " --votes " + votes.string() +
                             " --validity-threshold 2 --metrics f1,phd:1 --polarity light";
  const CliResult r = run(common + " --sweep 0..2:1");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("F1,1,1,1/1,1.000000,100.00%"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("tolerance,matched"), std::string::npos) << r.out;

  const fs::path out = f.tmp.path() / "cons";
  ASSERT_EQ(run(common + " --out " + out.string()).code, 0);
  EXPECT_TRUE(fs::exists(out / "consistency.json"));
  EXPECT_TRUE(fs::exists(out / "consistency.csv"));
  EXPECT_FALSE(fs::exists(out / "sweep.csv"));
}

}  // namespace
}  // namespace phdeval
