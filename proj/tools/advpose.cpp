// advpose: command-line entry point for every experiment, the HTTP service,
// manifest replay and backend conformance checks.
//
// Exit status: 0 success, 2 usage error or missing input, 1 anything else.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "advpose/classifier/conformance.hpp"
#include "advpose/classifier/echo_server.hpp"
#include "advpose/classifier/transport.hpp"
#include "advpose/common/error.hpp"
#include "advpose/image/image_io.hpp"
#include "advpose/render/renderer.hpp"
#include "advpose/search/records.hpp"
#include "advpose/service/config.hpp"
#include "advpose/service/experiments.hpp"
#include "advpose/service/http_service.hpp"
#include "advpose/service/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace advpose;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Options shared by every experiment subcommand.
struct Common {
  std::string config_path;
  std::string scene_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> true_class;
  std::string endpoint;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("-c,--config", c.config_path, "TOML or JSON experiment config");
  cmd->add_option("--scene", c.scene_path, "scene file (a scene section, or a config with one)");
  cmd->add_option("-s,--set", c.overrides, "override, e.g. search.budget=50")->take_all();
  if (with_out) cmd->add_option("-o,--out", c.out_dir, "run directory (default runs/<run id>)");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--threads", c.threads, "worker threads (results do not depend on it)");
  cmd->add_option("--true-class", c.true_class, "ground-truth class of the scene object");
  cmd->add_option("--backend-endpoint", c.endpoint, "external backend (tcp://host:port or stdio:cmd)");
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

// Config file, then the scene file, then flags, then --set overrides.
json assemble(const Common& c, const std::function<void(json&)>& flags) {
  json config = json::object();
  if (!c.config_path.empty()) {
    const fs::path p = c.config_path;
    config = resolve_paths(load_config_file(p), fs::absolute(p).parent_path());
  }
  if (!c.scene_path.empty()) {
    const fs::path p = c.scene_path;
    json s = resolve_paths(json{{"scene", load_config_file(p)}}, fs::absolute(p).parent_path());
    if (s["scene"].contains("scene")) s = resolve_paths(load_config_file(p), fs::absolute(p).parent_path());
    config["scene"] = s["scene"];
  }
  if (c.seed) config["seed"] = *c.seed;
  if (c.threads) config["threads"] = *c.threads;
  if (c.true_class) config["scene"]["true_class"] = *c.true_class;
  if (!c.endpoint.empty()) config["backend"] = {{"kind", "external"}, {"endpoint", c.endpoint}};
  if (flags) flags(config);
  for (const auto& o : c.overrides) apply_override(config, o);
  validate_config(config);
  return config;
}

int run_and_report(const std::string& command, const json& config, const Common& c) {
  ExperimentOptions opt;
  opt.run_id = make_run_id();
  const fs::path out = c.out_dir.empty() ? fs::path("runs") / opt.run_id : fs::path(c.out_dir);
  const ExperimentResult r = run_experiment(command, config, out, opt);
  std::cout << r.summary.dump(2) << '\n';
  std::cerr << "run " << r.manifest.run_id << " written to " << out.string() << '\n';
  return 0;
}

int run_replay(const std::string& manifest_path, const std::string& out_dir, bool check) {
  const RunManifest m = read_manifest(manifest_path);
  const fs::path original = fs::absolute(manifest_path).parent_path();
  ExperimentOptions opt;
  opt.run_id = make_run_id();
  const fs::path out = out_dir.empty() ? fs::path("runs") / opt.run_id : fs::path(out_dir);
  const ExperimentResult r = run_experiment(m.command, m.config, out, opt);
  if (!m.scene_hash.empty() && r.manifest.scene_hash != m.scene_hash)
    std::cerr << "warning: scene hash differs from the manifest (" << m.scene_hash << " vs " << r.manifest.scene_hash
              << ")\n";
  std::cerr << "replay of " << m.run_id << " written to " << out.string() << '\n';
  if (!check) return 0;
  bool same = r.manifest.scene_hash == m.scene_hash;
  for (const char* name : {"records.jsonl"}) {
    const fs::path a = original / name, b = out / name;
    if (!fs::exists(a) && !fs::exists(b)) continue;
    if (!fs::exists(a) || !fs::exists(b) || read_file_bytes(a) != read_file_bytes(b)) {
      std::cerr << name << " differs from the original run\n";
      same = false;
    }
  }
  std::cout << (same ? "identical" : "DIFFERENT") << '\n';
  return same ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial pose search and analysis"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // render
  Common render_c;
  std::string pose_text = "0,0,-3,0,0,0";
  std::string lighting;
  std::string render_out;
  auto* render_cmd = app.add_subcommand("render", "render one pose to PNG");
  add_common(render_cmd, render_c, false);
  render_cmd->add_option("--pose", pose_text, "x,y,z,yaw,pitch,roll (radians)");
  render_cmd->add_option("--lighting", lighting, "bright, medium or dark");
  render_cmd->add_option("--out", render_out, "output PNG")->required();

  // census
  Common census_c;
  std::optional<int> census_n;
  auto* census_cmd = app.add_subcommand("census", "random-pose census under each lighting setting");
  add_common(census_cmd, census_c);
  census_cmd->add_option("-n,--samples", census_n, "samples per lighting setting");

  // landscape
  Common land_c;
  std::optional<int> rows, cols;
  std::string row_param, col_param;
  auto* land_cmd = app.add_subcommand("landscape", "2D sweep of two pose parameters");
  add_common(land_cmd, land_c);
  land_cmd->add_option("--rows", rows);
  land_cmd->add_option("--cols", cols);
  land_cmd->add_option("--row-param", row_param, "x, y, z, yaw, pitch or roll");
  land_cmd->add_option("--col-param", col_param);

  // sensitivity
  Common sens_c;
  std::optional<int> n_starts, n_resamples;
  auto* sens_cmd = app.add_subcommand("sensitivity", "single-parameter resampling from correct poses");
  add_common(sens_cmd, sens_c);
  sens_cmd->add_option("--starts", n_starts, "correctly classified starting poses");
  sens_cmd->add_option("--resamples", n_resamples, "resamples per parameter and start");

  // attack
  Common atk_c;
  std::string atk_mode;
  std::optional<int> target, steps, views;
  std::optional<double> lr, h;
  std::string init_text;
  auto* atk_cmd = app.add_subcommand("attack", "targeted pose search");
  atk_cmd->set_help_flag("--help", "print this help and exit");
  add_common(atk_cmd, atk_c);
  atk_cmd->add_option("mode", atk_mode, "rs, zrs, zrs_init, fdg or multiview")
      ->required()
      ->check(CLI::IsMember({"rs", "zrs", "zrs_attack", "zrs_init", "fdg", "multiview"}));
  atk_cmd->add_option("--target", target, "target class");
  atk_cmd->add_option("--steps,--budget", steps, "evaluations (rs, zrs) or descent steps (fdg, multiview)");
  atk_cmd->add_option("--lr", lr, "learning rate");
  atk_cmd->add_option("--h", h, "finite-difference step");
  atk_cmd->add_option("--views", views, "camera views for multiview");
  atk_cmd->add_option("--init", init_text, "starting pose x,y,z,yaw,pitch,roll (fdg, multiview)");

  // transfer
  Common tr_c;
  std::string tr_records, tr_mapping;
  std::optional<double> tr_floor;
  auto* tr_cmd = app.add_subcommand("transfer", "re-evaluate confident misclassifications on backend_b");
  add_common(tr_cmd, tr_c);
  tr_cmd->add_option("--records", tr_records, "records.jsonl of the source run");
  tr_cmd->add_option("--mapping", tr_mapping, "class mapping JSON");
  tr_cmd->add_option("--floor", tr_floor, "confidence floor");

  // yaw-sweep
  Common yaw_c;
  auto* yaw_cmd = app.add_subcommand("yaw-sweep", "upright views at fixed distances and yaws");
  add_common(yaw_cmd, yaw_c);

  // neighbors
  Common nb_c;
  std::optional<int> nb_k;
  auto* nb_cmd = app.add_subcommand("neighbors", "nearest renders in the backend's embedding space");
  add_common(nb_cmd, nb_c);
  nb_cmd->add_option("-k", nb_k, "neighbors per query");

  // serve
  Common srv_c;
  ServiceOptions srv_opt;
  auto* srv_cmd = app.add_subcommand("serve", "HTTP service for the explorer UI");
  add_common(srv_cmd, srv_c, false);
  srv_cmd->add_option("--host", srv_opt.host);
  srv_cmd->add_option("--port", srv_opt.port, "0 picks a free port");
  srv_cmd->add_option("--runs-dir", srv_opt.runs_dir);
  srv_cmd->add_option("--workers", srv_opt.workers, "concurrent search runs");

  // replay
  std::string replay_manifest, replay_out;
  bool replay_check = false;
  auto* rp_cmd = app.add_subcommand("replay", "re-run an experiment from its manifest");
  rp_cmd->add_option("manifest", replay_manifest)->required();
  rp_cmd->add_option("-o,--out", replay_out);
  rp_cmd->add_flag("--check", replay_check, "compare records.jsonl with the original run");

  // conformance
  std::string conf_endpoint;
  auto* conf_cmd = app.add_subcommand("conformance", "protocol v1 conformance suite against a backend");
  conf_cmd->add_option("endpoint", conf_endpoint, "tcp://host:port or stdio:cmd")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*render_cmd) {
      const json config = assemble(render_c, nullptr);
      SceneConfig scene = build_scene(config.value("scene", json::object()));
      if (!lighting.empty()) scene.lights = LightingConfig::preset(parse_preset(lighting));
      const PoseParams pose = parse_pose_csv(pose_text);
      validate_pose(pose, scene.camera);
      const RenderOutput out = render(scene, pose);
      write_png(render_out, out.pixels);
      const PixelBox b = coverage_bbox(out);
      std::cout << json{{"out", render_out},
                        {"pose", pose_to_json(pose)},
                        {"coverage_bbox", b.empty() ? json(nullptr) : json{b.x0, b.y0, b.x1, b.y1}}}
                       .dump()
                << '\n';
      return 0;
    }
    if (*census_cmd)
      return run_and_report("census", assemble(census_c, [&](json& c) {
                              if (census_n) c["census"]["n"] = *census_n;
                            }),
                            census_c);
    if (*land_cmd)
      return run_and_report("landscape", assemble(land_c, [&](json& c) {
                              if (rows) c["landscape"]["rows"] = *rows;
                              if (cols) c["landscape"]["cols"] = *cols;
                              if (!row_param.empty()) c["landscape"]["row_param"] = row_param;
                              if (!col_param.empty()) c["landscape"]["col_param"] = col_param;
                            }),
                            land_c);
    if (*sens_cmd)
      return run_and_report("sensitivity", assemble(sens_c, [&](json& c) {
                              if (n_starts) c["sensitivity"]["n_starts"] = *n_starts;
                              if (n_resamples) c["sensitivity"]["n_resamples"] = *n_resamples;
                            }),
                            sens_c);
    if (*atk_cmd)
      return run_and_report("attack", assemble(atk_c, [&](json& c) {
                              json& s = c["search"];
                              s["mode"] = atk_mode == "zrs" ? "zrs_attack" : atk_mode;
                              if (target) s["target_class"] = *target;
                              if (steps) s["budget"] = *steps;
                              if (lr) s["learning_rate"] = *lr;
                              if (h) s["fd_step"] = *h;
                              if (views) s["views"] = *views;
                              if (!init_text.empty()) s["init"] = init_text;
                            }),
                            atk_c);
    if (*tr_cmd)
      return run_and_report("transfer", assemble(tr_c, [&](json& c) {
                              if (!tr_records.empty()) c["transfer"]["records"] = absolute(tr_records);
                              if (!tr_mapping.empty()) c["transfer"]["mapping"] = absolute(tr_mapping);
                              if (tr_floor) c["transfer"]["confidence_floor"] = *tr_floor;
                            }),
                            tr_c);
    if (*yaw_cmd) return run_and_report("yaw-sweep", assemble(yaw_c, nullptr), yaw_c);
    if (*nb_cmd)
      return run_and_report("neighbors", assemble(nb_c, [&](json& c) {
                              if (nb_k) c["neighbors"]["k"] = *nb_k;
                            }),
                            nb_c);
    if (*srv_cmd) {
      const json config = assemble(srv_c, nullptr);
      HttpService service(config, build_backend(config.value("backend", json::object())), srv_opt);
      static HttpService* active = &service;
      std::signal(SIGINT, [](int) { active->stop(); });
      std::signal(SIGTERM, [](int) { active->stop(); });
      std::cerr << "serving on http://" << srv_opt.host << ':' << srv_opt.port << '\n';
      service.run();
      return 0;
    }
    if (*rp_cmd) return run_replay(replay_manifest, replay_out, replay_check);
    if (*conf_cmd) {
      const auto checks = run_conformance([&] { return connect_endpoint(conf_endpoint, std::chrono::seconds(10)); });
      for (const auto& c : checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
      return all_passed(checks) ? 0 : kExitFailure;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
