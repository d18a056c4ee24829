#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "advpose/search/records.hpp"
#include "advpose/service/manifest.hpp"
#include "test_support.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr
};

CliRun cli(const std::string& args) {
  const std::string cmd = "ADVPOSE_BACKEND_ENDPOINT= " + std::string(ADVPOSE_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

json small_config() {
  return {{"seed", 5},
          {"scene", {{"mesh", "builtin:sphere"}, {"width", 16}, {"height", 16}, {"true_class", 0}}},
          {"backend", {{"synthetic", {{"num_classes", 4}, {"pixel_weight", 4.0}}}}}};
}

}  // namespace

TEST(Cli, RenderWritesPng) {
  const fs::path dir = testing_support::scratch_dir("cli-render");
  const CliRun r = cli("render --pose 0,0,-4,0.3,0,0 --lighting dark --out " + (dir / "a.png").string());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "a.png"));
  EXPECT_NE(r.output.find("coverage_bbox"), std::string::npos) << r.output;
}

TEST(Cli, MissingMeshExitsTwoNamingPath) {
  const fs::path dir = testing_support::scratch_dir("cli-missing");
  const CliRun r = cli("render --pose 0,0,-4,0,0,0 --out " + (dir / "a.png").string() +
                    " --set scene.mesh=/no/such/mesh.obj");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("/no/such/mesh.obj"), std::string::npos) << r.output;
}

TEST(Cli, UnknownConfigKeyExitsTwo) {
  const fs::path dir = testing_support::scratch_dir("cli-unknown");
  json c = small_config();
  c["search"] = {{"budgett", 3}};
  const CliRun r = cli("attack rs -c " + write_config(dir, c).string() + " -o " + (dir / "out").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("budgett"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("budget"), std::string::npos);
  EXPECT_EQ(cli("census --no-such-flag").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST(Cli, FdgUsesDescentDefaults) {
  const fs::path dir = testing_support::scratch_dir("cli-fdg");
  const CliRun r = cli("attack fdg --target 2 --steps 2 --init 0,0,-4,1,1,1 -c " + write_config(dir, small_config()).string() +
                    " -o " + (dir / "out").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const json summary = json::parse(slurp(dir / "out" / "summary.json"));
  EXPECT_EQ(summary["config"]["fd_step"], 1e-3);
  EXPECT_EQ(summary["config"]["learning_rate"], 1e-3);
  EXPECT_EQ(summary["evaluations"], 2 * 19);
  const CliRun r2 = cli("attack fdg --target 2 --steps 2 --lr 0.01 --h 0.002 --init 0,0,-4,1,1,1 -c " +
                     (dir / "config.json").string() + " -o " + (dir / "out2").string());
  ASSERT_EQ(r2.code, 0) << r2.output;
  const json s2 = json::parse(slurp(dir / "out2" / "summary.json"));
  EXPECT_EQ(s2["config"]["fd_step"], 0.002);
  EXPECT_EQ(s2["config"]["learning_rate"], 0.01);
}

TEST(Cli, ReplayCheckIsIdentical) {
  const fs::path dir = testing_support::scratch_dir("cli-replay");
  const CliRun r = cli("census -n 30 -c " + write_config(dir, small_config()).string() + " -o " + (dir / "run").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const CliRun rp = cli("replay --check " + (dir / "run" / "manifest.json").string() + " -o " + (dir / "again").string());
  EXPECT_EQ(rp.code, 0) << rp.output;
  EXPECT_EQ(slurp(dir / "run" / "records.jsonl"), slurp(dir / "again" / "records.jsonl"));
  EXPECT_EQ(advpose::read_jsonl(dir / "again" / "records.jsonl").size(), 90u);
}

TEST(Cli, ConformanceAgainstStdioEchoServer) {
  const CliRun r = cli(std::string("conformance 'stdio:") + ADVPOSE_ECHO_SERVER + " --stdio'");
  EXPECT_EQ(r.code, 0) << r.output;
}
