#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>
#include <httplib.h>

#include "advpose/classifier/echo_server.hpp"
#include "advpose/classifier/protocol.hpp"
#include "advpose/classifier/remote.hpp"
#include "advpose/common/error.hpp"
#include "advpose/image/image_io.hpp"
#include "advpose/search/records.hpp"
#include "advpose/service/config.hpp"
#include "advpose/service/experiments.hpp"
#include "advpose/service/http_service.hpp"
#include "advpose/service/manifest.hpp"
#include "test_support.hpp"

using namespace advpose;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config() {
  return {{"seed", 11},
          {"scene", {{"mesh", "builtin:sphere"}, {"width", 16}, {"height", 16}, {"true_class", 0}}},
          {"backend", {{"kind", "synthetic"}, {"synthetic", {{"num_classes", 5}, {"pixel_weight", 5.0}}}}}};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Events of an SSE body as (event, data) pairs.
std::vector<std::pair<std::string, std::string>> parse_sse(const std::string& body) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(body);
  std::string line, event, data;
  while (std::getline(in, line)) {
    if (line.rfind("event: ", 0) == 0) event = line.substr(7);
    else if (line.rfind("data: ", 0) == 0) data = line.substr(6);
    else if (line.empty() && !event.empty()) {
      out.push_back({event, data});
      event.clear();
      data.clear();
    }
  }
  return out;
}

class Service : public ::testing::Test {
 protected:
  void SetUp() override {
    ::unsetenv(kBackendEndpointEnv);
    ServiceOptions opt;
    opt.port = 0;
    opt.runs_dir = testing_support::scratch_dir("service-runs");
    service_ = std::make_unique<HttpService>(base_config(), build_backend(base_config()["backend"]), opt);
    port_ = service_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(120, 0);
  }
  void TearDown() override { service_->stop(); }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  std::unique_ptr<HttpService> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

}  // namespace

TEST(Config, OverridesParseJsonOrString) {
  json c = base_config();
  apply_override(c, "search.budget=25");
  apply_override(c, "scene.mesh=builtin:quad");
  apply_override(c, "scene.view_yaw=0.5");
  EXPECT_EQ(c["search"]["budget"], 25);
  EXPECT_EQ(c["scene"]["mesh"], "builtin:quad");
  EXPECT_EQ(c["scene"]["view_yaw"], 0.5);
  EXPECT_THROW(apply_override(c, "no_equals"), UsageError);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, UnknownKeysListValidOnes) {
  json c = base_config();
  c["scene"]["mesh_path"] = "x";
  try {
    validate_config(c);
    FAIL();
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("mesh_path"), std::string::npos);
    EXPECT_NE(msg.find("true_class"), std::string::npos);
  }
  json d = base_config();
  d["seeed"] = 1;
  EXPECT_THROW(validate_config(d), UsageError);
}

TEST(Config, TomlAndJsonFilesAgree) {
  const fs::path dir = testing_support::scratch_dir("config-files");
  std::ofstream(dir / "a.toml") << "seed = 3\n[scene]\nmesh = \"builtin:sphere\"\nwidth = 8\n[search]\nbudget = 4\n";
  std::ofstream(dir / "a.json") << R"({"seed":3,"scene":{"mesh":"builtin:sphere","width":8},"search":{"budget":4}})";
  EXPECT_EQ(load_config_file(dir / "a.toml"), load_config_file(dir / "a.json"));
  std::ofstream(dir / "bad.toml") << "seed = = 3\n";
  EXPECT_THROW(load_config_file(dir / "bad.toml"), FormatError);
  EXPECT_THROW(load_config_file(dir / "none.toml"), IoError);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  json c = base_config();
  c["scene"]["mesh"] = "cube.obj";
  const json r = resolve_paths(c, testing_support::source_dir() / "fixtures");
  EXPECT_EQ(fs::path(r["scene"]["mesh"].get<std::string>()), testing_support::fixture("cube.obj"));
  EXPECT_NO_THROW(build_scene(r["scene"]));
  json missing = base_config();
  missing["scene"]["mesh"] = "/nope/gone.obj";
  try {
    build_scene(missing["scene"]);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nope/gone.obj"), std::string::npos);
  }
}

TEST(Config, BackendKindsAndEnvOverride) {
  ::unsetenv(kBackendEndpointEnv);
  EXPECT_EQ(build_backend(json::object()).kind, "synthetic");
  const BackendHandle echo = build_backend({{"kind", "echo"}});
  EXPECT_EQ(echo.classifier->info().num_classes, 2);
  EXPECT_EQ(echo.handshake["protocol"], 1);
  EXPECT_THROW(build_backend({{"kind", "magic"}}), UsageError);

  ProtocolServer server(std::make_shared<EchoClassifier>(std::vector<double>{0.5, 0.25, 0.25}, 4));
  ::setenv(kBackendEndpointEnv, server.endpoint().c_str(), 1);
  const BackendHandle remote = build_backend(json::object());
  ::unsetenv(kBackendEndpointEnv);
  EXPECT_EQ(remote.kind, "external");
  EXPECT_EQ(remote.classifier->info().num_classes, 3);
  EXPECT_EQ(build_backend(json::object(), false).kind, "synthetic");
}

TEST(Manifest, SceneHashIsStableAndSensitive) {
  const SceneConfig a = build_scene(base_config()["scene"]);
  const SceneConfig b = build_scene(base_config()["scene"]);
  EXPECT_EQ(scene_hash(a), scene_hash(b));
  EXPECT_EQ(scene_hash(a).size(), 64u);
  json other = base_config()["scene"];
  other["lighting"] = "dark";
  EXPECT_NE(scene_hash(build_scene(other)), scene_hash(a));
  other = base_config()["scene"];
  other["mesh"] = "builtin:quad";
  EXPECT_NE(scene_hash(build_scene(other)), scene_hash(a));
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.run_id = make_run_id();
  m.command = "attack";
  m.config = base_config();
  m.seed = 11;
  m.scene_hash = "ab";
  m.outputs = {"records.jsonl"};
  const fs::path p = testing_support::scratch_dir("manifest") / "m.json";
  write_manifest(p, m);
  EXPECT_EQ(to_json(read_manifest(p)), to_json(m));
  EXPECT_NE(make_run_id(), make_run_id());
}

TEST(Experiments, ReplayFromManifestIsByteIdentical) {
  ::unsetenv(kBackendEndpointEnv);
  json c = base_config();
  c["search"] = {{"mode", "zrs_attack"}, {"target_class", 2}, {"budget", 20}, {"zrs_levels", 4},
                 {"zrs_samples_per_level", 3}};
  const fs::path dir = testing_support::scratch_dir("replay");
  const ExperimentResult first = run_experiment("attack", c, dir / "a");
  const RunManifest m = read_manifest(dir / "a" / "manifest.json");
  EXPECT_EQ(m.status, "ok");
  const ExperimentResult second = run_experiment(m.command, m.config, dir / "b");
  EXPECT_EQ(read_file(dir / "a" / "records.jsonl"), read_file(dir / "b" / "records.jsonl"));
  EXPECT_EQ(read_jsonl(dir / "a" / "records.jsonl").size(), 32u);
  EXPECT_EQ(first.manifest.scene_hash, second.manifest.scene_hash);
  EXPECT_TRUE(fs::exists(dir / "a" / "best.png"));
  EXPECT_TRUE(fs::exists(dir / "a" / "summary.json"));
}

TEST(Experiments, FdgWithoutInitRunsZrsFirst) {
  json c = base_config();
  c["search"] = {{"mode", "fdg"}, {"target_class", 1}, {"budget", 2}, {"zrs_levels", 2},
                 {"zrs_samples_per_level", 2}};
  const fs::path dir = testing_support::scratch_dir("fdg-init");
  const ExperimentResult r = run_experiment("attack", c, dir);
  const auto recs = read_jsonl(dir / "records.jsonl");
  ASSERT_EQ(recs.size(), 6u);
  EXPECT_EQ(recs[3].phase, "zrs_init");
  EXPECT_EQ(recs[4].phase, "fdg");
  EXPECT_EQ(recs[4].index, 4);
  EXPECT_EQ(r.summary["evaluations"], 2 * 19);
}

TEST(Experiments, CensusWritesOverlapAndCsv) {
  json c = base_config();
  c["census"] = {{"n", 40}};
  const fs::path dir = testing_support::scratch_dir("census");
  std::vector<long long> seen;
  ExperimentOptions opt;
  opt.sink = [&](const TrialRecord& r) { seen.push_back(r.index); };
  const ExperimentResult r = run_experiment("census", c, dir, opt);
  EXPECT_EQ(seen.size(), 120u);
  EXPECT_TRUE(r.summary.contains("overlap"));
  EXPECT_TRUE(fs::exists(dir / "census.csv"));
  EXPECT_EQ(read_jsonl(dir / "records.jsonl").size(), 120u);
}

TEST(Experiments, FailuresWriteFailedManifest) {
  json c = base_config();
  c["scene"].erase("true_class");
  const fs::path dir = testing_support::scratch_dir("failed");
  EXPECT_THROW(run_experiment("census", c, dir), UsageError);
  EXPECT_EQ(read_manifest(dir / "manifest.json").status, "failed");
  EXPECT_THROW(run_experiment("dance", base_config(), dir), UsageError);
}

TEST(Experiments, SelfTransferThroughConfig) {
  json c = base_config();
  c["search"] = {{"mode", "rs"}, {"budget", 60}};
  const fs::path dir = testing_support::scratch_dir("transfer");
  run_experiment("attack", c, dir / "src");
  json t = base_config();
  t["backend_b"] = t["backend"];
  t["transfer"] = {{"records", (dir / "src" / "records.jsonl").string()}, {"confidence_floor", 0.0}};
  const ExperimentResult r = run_experiment("transfer", t, dir / "t");
  EXPECT_EQ(r.summary["misclassification_rate"], 100.0);
  EXPECT_EQ(r.summary["agreement_rate"], 100.0);
}

TEST(Experiments, OtherCommandsProduceArtifacts) {
  const fs::path dir = testing_support::scratch_dir("others");
  json c = base_config();
  c["landscape"] = {{"rows", 3}, {"cols", 4}};
  c["sensitivity"] = {{"n_starts", 2}, {"n_resamples", 5}};
  c["neighbors"] = {{"k", 2}, {"queries", {{0, 0, -4, 0, 0, 0}}}, {"corpus_random", 10}};
  run_experiment("landscape", c, dir / "l");
  EXPECT_TRUE(fs::exists(dir / "l" / "landscape.png"));
  EXPECT_EQ(read_jsonl(dir / "l" / "records.jsonl").size(), 12u);
  run_experiment("sensitivity", c, dir / "s");
  EXPECT_TRUE(fs::exists(dir / "s" / "sensitivity.csv"));
  const ExperimentResult y = run_experiment("yaw-sweep", c, dir / "y");
  EXPECT_TRUE(fs::exists(dir / "y" / "yaw_sweep.csv"));
  const ExperimentResult n = run_experiment("neighbors", c, dir / "n");
  EXPECT_EQ(n.summary["neighbors"][0].size(), 2u);
}

TEST_F(Service, SceneDescribesLimits) {
  auto res = client_->Get("/scene");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json j = json::parse(res->body);
  EXPECT_EQ(j["limits"]["z_delta"]["min"], -28.0);
  EXPECT_EQ(j["backend"]["num_classes"], 5);
  EXPECT_EQ(j["true_class"], 0);
}

TEST_F(Service, ClassifyIdentityPose) {
  auto res = post("/classify", {{"pose", {{"z_delta", -4.0}}}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const json j = json::parse(res->body);
  const auto probs = j["probs"].get<std::vector<double>>();
  EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(j["top5"].size(), 5u);
  EXPECT_TRUE(j.contains("correct"));
  const auto png = protocol::base64_decode(j["image_png_base64"].get<std::string>());
  EXPECT_EQ(decode_png(png).width, 16);
}

TEST_F(Service, RenderReturnsPngAndBbox) {
  auto res = post("/render", {{"pose", {{"z_delta", -3.0}}}, {"lighting", "bright"}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  EXPECT_NE(res->get_header_value("X-Coverage-Bbox"), "empty");
}

TEST_F(Service, OutOfRangePoseIsFieldError) {
  for (const auto& [pose, field] : std::vector<std::pair<json, std::string>>{
           {{{"z_delta", 5.0}}, "pose.z_delta"},
           {{{"z_delta", -2.0}, {"x_delta", 100.0}}, "pose.x_delta"},
           {{{"z_delta", -2.0}, {"spin", 1.0}}, "pose.spin"}}) {
    auto res = post("/render", {{"pose", pose}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["field"], field);
  }
  auto res = client_->Post("/classify", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(Service, SearchStreamsRecordsThenSummary) {
  auto res = post("/search", {{"command", "census"}, {"config", {{"census", {{"n", 1000}, {"lighting", {"medium"}}}}}}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 202) << res->body;
  const std::string id = json::parse(res->body)["run_id"];
  auto stream = client_->Get("/runs/" + id);
  ASSERT_TRUE(stream);
  const auto events = parse_sse(stream->body);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().first, "summary");
  EXPECT_EQ(json::parse(events.back().second)["status"], "done");
  EXPECT_EQ(std::count_if(events.begin(), events.end(), [](const auto& e) { return e.first == "record"; }), 1000);

  // Resuming skips what the client has seen.
  httplib::Headers h{{"Last-Event-ID", "989"}};
  auto tail = client_->Get("/runs/" + id, h);
  ASSERT_TRUE(tail);
  EXPECT_EQ(parse_sse(tail->body).size(), 11u);

  auto files = client_->Get("/runs/" + id + "/artifacts");
  ASSERT_TRUE(files);
  bool has_records = false;
  const json listing = json::parse(files->body);
  for (const auto& f : listing["files"]) has_records |= f["name"] == "records.jsonl";
  EXPECT_TRUE(has_records) << files->body;
  auto csv = client_->Get("/runs/" + id + "/artifacts/census.csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->status, 200);
  EXPECT_EQ(client_->Get("/runs/" + id + "/artifacts/..%2Fx")->status, 404);
  EXPECT_EQ(client_->Get("/runs/nope/status")->status, 404);
}

TEST_F(Service, SearchRejectsFixedSectionsAndUnknownKeys) {
  auto a = post("/search", {{"config", {{"backend", {{"kind", "echo"}}}}}});
  ASSERT_TRUE(a);
  EXPECT_EQ(a->status, 400);
  EXPECT_EQ(json::parse(a->body)["field"], "config.backend");
  auto b = post("/search", {{"command", "census"}, {"config", {{"census", {{"m", 1}}}}}});
  ASSERT_TRUE(b);
  EXPECT_EQ(b->status, 400);
}

TEST(ServiceBackend, UnreachableBackendIs503) {
  auto server = std::make_unique<ProtocolServer>(std::make_shared<EchoClassifier>(std::vector<double>{0.5, 0.5}, 4));
  RemoteOptions ro;
  ro.endpoint = server->endpoint();
  ro.max_attempts = 2;
  ro.retry_backoff = std::chrono::milliseconds(1);
  BackendHandle h;
  h.classifier = std::make_shared<RemoteClassifier>(ro);
  h.kind = "external";
  h.endpoint = ro.endpoint;
  ServiceOptions opt;
  opt.port = 0;
  opt.runs_dir = testing_support::scratch_dir("service-503");
  json cfg = base_config();
  cfg.erase("backend");
  HttpService svc(cfg, h, opt);
  httplib::Client cli("127.0.0.1", svc.start());
  server->stop();
  server.reset();
  auto res = cli.Post("/classify", json{{"pose", {{"z_delta", -4.0}}}}.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 503);
  EXPECT_EQ(json::parse(res->body)["handshake_status"], "unreachable");
  svc.stop();
}
