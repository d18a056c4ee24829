#include "advpose/service/experiments.hpp"

#include <algorithm>
#include <fstream>

#include "advpose/analysis/census.hpp"
#include "advpose/analysis/landscape.hpp"
#include "advpose/analysis/neighbors.hpp"
#include "advpose/analysis/overlap.hpp"
#include "advpose/analysis/sensitivity.hpp"
#include "advpose/analysis/transfer.hpp"
#include "advpose/analysis/yaw_sweep.hpp"
#include "advpose/common/error.hpp"
#include "advpose/common/parallel.hpp"
#include "advpose/image/image_io.hpp"
#include "advpose/render/renderer.hpp"
#include "advpose/search/records.hpp"
#include "advpose/service/config.hpp"

namespace advpose {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> k = {"census",   "landscape", "sensitivity", "attack",
                                             "transfer", "yaw-sweep", "neighbors"};
  return k;
}

namespace {

struct Context {
  json config;
  fs::path out_dir;
  SceneConfig scene;
  std::optional<int> true_class;
  std::uint64_t seed = 0;
  int threads = 1;
  std::shared_ptr<Classifier> backend;
  RecordSink sink;
  std::vector<std::string> outputs;

  json section(const char* name) const {
    return config.contains(name) && !config[name].is_null() ? config[name] : json::object();
  }
  int require_true_class(const char* command) const {
    if (!true_class) throw UsageError(std::string(command) + " needs scene.true_class");
    return *true_class;
  }
  void write_text(const std::string& name, const std::string& text) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write output", (out_dir / name).string());
    out << text;
    outputs.push_back(name);
  }
  void write_image(const std::string& name, const Image& img) {
    write_png(out_dir / name, img);
    outputs.push_back(name);
  }
};

PoseParams pose_field(const json& j) {
  if (j.is_string()) return parse_pose_csv(j.get<std::string>());
  return pose_from_json(j);
}

// Records go to the caller's sink and to records.jsonl as they are made.
class RecordStream {
 public:
  explicit RecordStream(Context& ctx) : ctx_(ctx), writer_(ctx.out_dir / "records.jsonl") {
    ctx.outputs.push_back("records.jsonl");
  }
  RecordSink sink(long long offset = 0) {
    return [this, offset](const TrialRecord& r) {
      TrialRecord copy = r;
      copy.index += offset;
      writer_.write(copy);
      if (ctx_.sink) ctx_.sink(copy);
    };
  }

 private:
  Context& ctx_;
  JsonlWriter writer_;
};

json run_census(Context& ctx) {
  const json sec = ctx.section("census");
  require_keys(sec, {"n", "lighting"}, "census");
  const int n = sec.value("n", 1000);
  if (n < 1) throw UsageError("census.n must be >= 1");
  std::vector<LightingSetting> settings;
  if (sec.contains("lighting")) {
    for (const auto& name : sec["lighting"].get<std::vector<std::string>>())
      settings.push_back({name, LightingConfig::preset(parse_preset(name))});
  } else {
    settings = standard_lighting();
  }
  const int tc = ctx.require_true_class("census");
  RecordStream stream(ctx);
  CensusReport report = census(ctx.scene, *ctx.backend, n, settings, tc, ctx.seed, ctx.threads, stream.sink());
  json summary = to_json(report);
  if (settings.size() == 3 && !report.aborted) {
    std::array<LabelHistogram, 3> hists{report.settings[0].histogram, report.settings[1].histogram,
                                        report.settings[2].histogram};
    summary["overlap"] = to_json(lighting_overlap(hists));
  }
  ctx.write_text("census.csv", census_csv(report));
  if (report.aborted) throw Error("run aborted: " + report.error);
  return summary;
}

json run_landscape(Context& ctx) {
  const json sec = ctx.section("landscape");
  LandscapeSpec spec;
  if (sec.contains("fixed")) spec.fixed = pose_field(sec["fixed"]);
  if (sec.contains("row_param")) spec.row_param = parse_param(sec["row_param"].get<std::string>());
  if (sec.contains("col_param")) spec.col_param = parse_param(sec["col_param"].get<std::string>());
  spec.rows = sec.value("rows", spec.rows);
  spec.cols = sec.value("cols", spec.cols);
  spec.validate();
  const LandscapeGrid grid = landscape_grid(ctx.scene, *ctx.backend, spec, ctx.true_class, ctx.threads);
  RecordStream stream(ctx);
  const RecordSink sink = stream.sink();
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const auto& c = grid.cells[i];
    TrialRecord r;
    r.index = static_cast<long long>(i);
    r.step = static_cast<int>(i);
    r.phase = "landscape";
    r.pose = c.pose;
    r.top_label = c.top_label;
    r.confidence = c.confidence;
    r.correct = c.correct;
    sink(r);
  }
  ctx.write_text("landscape.csv", landscape_csv(grid));
  ctx.write_image("landscape.png", landscape_heatmap(grid, sec.value("cell_px", 8)));
  json summary = to_json(grid);
  summary.erase("cells");
  return summary;
}

json run_sensitivity(Context& ctx) {
  const json sec = ctx.section("sensitivity");
  SensitivityOptions opt;
  opt.n_starts = sec.value("n_starts", opt.n_starts);
  opt.n_resamples = sec.value("n_resamples", opt.n_resamples);
  opt.max_start_attempts = sec.value("max_start_attempts", opt.max_start_attempts);
  opt.seed = ctx.seed;
  opt.threads = ctx.threads;
  const int tc = ctx.require_true_class("sensitivity");
  ObjectSensitivity obj;
  if (sec.contains("starts")) {
    std::vector<PoseParams> starts;
    for (const auto& p : sec["starts"]) starts.push_back(pose_field(p));
    obj = sensitivity_from_starts(ctx.scene, *ctx.backend, tc, starts, opt, ctx.scene.mesh_id);
  } else {
    obj = sensitivity(ctx.scene, *ctx.backend, tc, opt, ctx.scene.mesh_id);
  }
  const SensitivityReport report = aggregate_objects({obj});
  ctx.write_text("sensitivity.csv", sensitivity_csv(report));
  return to_json(report);
}

json run_attack(Context& ctx) {
  json sec = ctx.section("search");
  std::optional<PoseParams> init;
  if (sec.contains("init")) {
    init = pose_field(sec["init"]);
    sec.erase("init");
  }
  if (!sec.contains("seed")) sec["seed"] = ctx.seed;
  if (!sec.contains("threads")) sec["threads"] = ctx.threads;
  if (!sec.contains("true_class") && ctx.true_class) sec["true_class"] = *ctx.true_class;
  SearchConfig cfg = search_config_from_json(sec);
  cfg.validate();

  RecordStream stream(ctx);
  json summary{{"mode", mode_name(cfg.mode)}};
  SearchResult result;
  switch (cfg.mode) {
    case SearchMode::kRS:
      result = run_random_search(ctx.scene, *ctx.backend, cfg, stream.sink());
      break;
    case SearchMode::kZRSInit:
    case SearchMode::kZRSAttack:
      result = run_zrs(ctx.scene, *ctx.backend, cfg, stream.sink());
      break;
    case SearchMode::kFDG:
    case SearchMode::kMultiView: {
      long long offset = 0;
      if (!init) {
        SearchConfig zcfg = cfg;
        zcfg.mode = SearchMode::kZRSInit;
        const SearchResult z = run_zrs(ctx.scene, *ctx.backend, zcfg, stream.sink());
        summary["init"] = summary_json(z);
        if (z.aborted) throw Error("run aborted: " + z.error);
        init = z.best_pose;
        offset = static_cast<long long>(z.records.size());
      }
      if (cfg.mode == SearchMode::kFDG)
        result = run_fdg(ctx.scene, *ctx.backend, cfg, *init, stream.sink(offset));
      else
        result = run_multiview_fdg(make_views(ctx.scene, cfg.views), *ctx.backend, cfg, *init, stream.sink(offset));
      summary["init_pose"] = pose_to_json(*init);
      break;
    }
  }
  summary.update(summary_json(result));
  summary["config"] = to_json(cfg);
  if (result.best_pose) ctx.write_image("best.png", render(ctx.scene, *result.best_pose).pixels);
  if (result.aborted) throw Error("run aborted: " + result.error);
  return summary;
}

json run_transfer(Context& ctx) {
  const json sec = ctx.section("transfer");
  if (!sec.contains("records")) throw UsageError("transfer needs transfer.records (a records.jsonl path)");
  const fs::path records_path = sec["records"].get<std::string>();
  if (!fs::exists(records_path)) throw IoError("records file not found", records_path.string());
  if (!ctx.config.contains("backend_b")) throw UsageError("transfer needs a backend_b section");
  const int tc = ctx.require_true_class("transfer");
  std::optional<ClassMapping> mapping;
  if (sec.contains("mapping")) {
    const json& m = sec["mapping"];
    mapping = m.is_string() ? ClassMapping::load(m.get<std::string>()) : ClassMapping::from_json(m);
  }
  const BackendHandle b = build_backend(ctx.config["backend_b"], false);
  const TransferReport report = transfer(read_jsonl(records_path), ctx.scene, ctx.backend->info(), *b.classifier, tc,
                                         sec.value("confidence_floor", 0.9), mapping, ctx.threads);
  json summary = to_json(report);
  summary["backend_b_handshake"] = b.handshake;
  return summary;
}

json run_yaw_sweep(Context& ctx) {
  const json sec = ctx.section("yaw_sweep");
  const int tc = ctx.require_true_class("yaw-sweep");
  const YawSweepReport report = yaw_sweep_eval(
      ctx.scene, *ctx.backend, tc, sec.value("distances", std::vector<double>{4.0, 6.0, 8.0}),
      sec.value("first_yaw_deg", 10.0), sec.value("step_deg", 30.0), sec.value("count", 12), ctx.threads);
  ctx.write_text("yaw_sweep.csv", yaw_sweep_csv(report));
  return to_json(report);
}

json run_neighbors(Context& ctx) {
  const json sec = ctx.section("neighbors");
  if (!sec.contains("queries")) throw UsageError("neighbors needs neighbors.queries (a list of poses)");
  std::vector<PoseParams> queries, corpus;
  for (const auto& p : sec["queries"]) queries.push_back(pose_field(p));
  if (sec.contains("corpus"))
    for (const auto& p : sec["corpus"]) corpus.push_back(pose_field(p));
  const int n_random = sec.value("corpus_random", sec.contains("corpus") ? 0 : 100);
  for (int i = 0; i < n_random; ++i) {
    Rng rng = Rng::substream(ctx.seed, "neighbors-corpus", static_cast<std::uint64_t>(i));
    corpus.push_back(sample_random_pose(rng, ctx.scene.camera));
  }
  if (corpus.empty()) throw UsageError("neighbors corpus is empty");
  auto render_all = [&](const std::vector<PoseParams>& poses) {
    std::vector<RenderOutput> out(poses.size());
    parallel_for(poses.size(), ctx.threads, [&](std::size_t i) { out[i] = render(ctx.scene, poses[i]); });
    return out;
  };
  const auto result = nearest_neighbors(render_all(queries), render_all(corpus), *ctx.backend, sec.value("k", 5));
  json corpus_json = json::array();
  for (const auto& p : corpus) corpus_json.push_back(pose_to_json(p));
  return {{"neighbors", to_json(result)}, {"corpus", corpus_json}};
}

}  // namespace

ExperimentResult run_experiment(const std::string& command, const json& config, const fs::path& out_dir,
                                const ExperimentOptions& options) {
  const auto& cmds = experiment_commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) {
    std::string list;
    for (const auto& c : cmds) list += (list.empty() ? "" : ", ") + c;
    throw UsageError("unknown experiment '" + command + "'; valid: " + list);
  }
  validate_config(config);
  fs::create_directories(out_dir);

  Context ctx;
  ctx.config = config;
  ctx.out_dir = out_dir;
  ctx.sink = options.sink;
  ctx.seed = config.value("seed", std::uint64_t{0});
  ctx.threads = config.value("threads", 1);
  const json scene_sec = ctx.section("scene");
  ctx.scene = build_scene(scene_sec);
  ctx.true_class = scene_true_class(scene_sec);

  RunManifest m;
  m.run_id = options.run_id.empty() ? make_run_id() : options.run_id;
  m.command = command;
  m.config = config;
  m.seed = ctx.seed;
  m.scene_hash = scene_hash(ctx.scene);
  m.started_at = utc_timestamp();
  if (options.backend) {
    ctx.backend = options.backend;
    m.backend_handshake = options.backend_handshake;
  } else {
    BackendHandle h = build_backend(ctx.section("backend"));
    ctx.backend = h.classifier;
    m.backend_handshake = h.handshake;
  }

  json summary;
  auto finish = [&] {
    m.finished_at = utc_timestamp();
    m.outputs = ctx.outputs;
    m.outputs.push_back("manifest.json");
    write_manifest(out_dir / "manifest.json", m);
  };
  try {
    if (command == "census") summary = run_census(ctx);
    else if (command == "landscape") summary = run_landscape(ctx);
    else if (command == "sensitivity") summary = run_sensitivity(ctx);
    else if (command == "attack") summary = run_attack(ctx);
    else if (command == "transfer") summary = run_transfer(ctx);
    else if (command == "yaw-sweep") summary = run_yaw_sweep(ctx);
    else summary = run_neighbors(ctx);
  } catch (const std::exception& e) {
    m.status = "failed";
    m.error = e.what();
    finish();
    throw;
  }
  summary["run_id"] = m.run_id;
  summary["command"] = command;
  ctx.write_text("summary.json", summary.dump(2) + "\n");
  finish();
  return {m, summary};
}

}  // namespace advpose
