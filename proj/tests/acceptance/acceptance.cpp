// Desk-scale acceptance run: one PASS/FAIL line per criterion, exit status
// 1 if any fails. ACCEPTANCE_ONLY=<name> runs a single criterion.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "advpose/analysis/census.hpp"
#include "advpose/analysis/overlap.hpp"
#include "advpose/analysis/sensitivity.hpp"
#include "advpose/analysis/transfer.hpp"
#include "advpose/classifier/conformance.hpp"
#include "advpose/classifier/echo_server.hpp"
#include "advpose/classifier/protocol.hpp"
#include "advpose/classifier/synthetic.hpp"
#include "advpose/common/error.hpp"
#include "advpose/geometry/transform.hpp"
#include "advpose/image/image_io.hpp"
#include "advpose/render/renderer.hpp"
#include "advpose/search/search.hpp"
#include "golden_cases.hpp"
#include "test_support.hpp"

using namespace advpose;
using testing_support::Gen;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << v;
  return os.str();
}

double max_abs_diff(const Mat3& a, const Mat3& b) {
  double m = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

double brute_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

Outcome transforms() {
  const auto t0 = Clock::now();
  Gen g(1001);
  double worst_orth = 0, worst_det = 0, worst_chain = 0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = rotation_matrix_axis_angle(g.unit_vector(), g.uniform(-4 * kTwoPi, 4 * kTwoPi));
    worst_orth = std::max(worst_orth, max_abs_diff(transpose(r) * r, identity3()));
    worst_det = std::max(worst_det, std::abs(determinant(r) - 1.0));
  }
  const Mesh mesh = make_sphere_mesh(8, 16);
  const FrustumSpec spec;
  for (int i = 0; i < 1000; ++i) {
    const PoseParams p = g.pose(spec);
    const Mat4 m = compose_chain(pose_chain(p));
    const auto out = apply_pose(mesh, p);
    for (std::size_t k = 0; k < out.size(); ++k) {
      const Vec3 want = apply_homogeneous(m, mesh.vertices[k]);
      worst_chain = std::max({worst_chain, std::abs(out[k].x - want.x), std::abs(out[k].y - want.y),
                              std::abs(out[k].z - want.z)});
    }
  }
  const double secs = seconds_since(t0);
  return {worst_orth < 1e-9 && worst_det < 1e-9 && worst_chain <= 1e-12 && secs < 5.0,
          "max|RtR-I|=" + sci(worst_orth) + " max|det-1|=" + sci(worst_det) +
              " max chain diff=" + sci(worst_chain) + " time=" + fmt(secs) + "s"};
}

Outcome frustum() {
  // The object's centre is its origin (meshes are centred), so the pose's
  // translation is where it lands.
  SceneConfig scene;
  long long violations = 0, on_plane = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    Rng rng = Rng::substream(2002, "rs", i);
    const PoseParams p = sample_random_pose(rng, scene.camera);
    const Vec3 c{p.x_delta, p.y_delta, p.z_delta};
    try {
      if (!project_point(scene, c).in_frame) ++violations;
    } catch (const ProjectionError&) {
      ++on_plane;
    }
  }
  return {violations == 0 && on_plane == 0,
          "100000 poses, " + std::to_string(violations) + " out of frame, " + std::to_string(on_plane) +
              " on the camera plane"};
}

Outcome fd_oracle() {
  Gen g(3003);
  const std::array<double, 9> h = SearchConfig{}.fd_steps();
  double quad_err = 0, trig_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    double a[9][9], b[9];
    for (auto& row : a)
      for (double& v : row) v = g.uniform(-1, 1);
    for (double& v : b) v = g.uniform(-1, 1);
    const auto f = [&](const TrigPose& t) {
      double s = 0;
      for (int i = 0; i < 9; ++i) {
        s += b[i] * t.values[i];
        for (int j = 0; j < 9; ++j) s += a[i][j] * t.values[i] * t.values[j];
      }
      return s;
    };
    TrigPose w;
    for (double& v : w.values) v = g.uniform(-1, 1);
    const auto grad = fd_gradient(f, w, h);
    for (int i = 0; i < 9; ++i) {
      double exact = b[i];
      for (int j = 0; j < 9; ++j) exact += (a[i][j] + a[j][i]) * w.values[j];
      quad_err = std::max(quad_err, std::abs(grad[i] - exact));
    }
  }
  const auto f = [](const TrigPose& t) {
    double s = 0;
    for (int i = 0; i < 9; ++i) s += std::sin(t.values[i]) * std::cos(t.values[(i + 1) % 9]);
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    TrigPose w;
    for (double& v : w.values) v = g.uniform(-3, 3);
    const auto grad = fd_gradient(f, w, h);
    for (int i = 0; i < 9; ++i) {
      const int prev = (i + 8) % 9, next = (i + 1) % 9;
      const double exact =
          std::cos(w.values[i]) * std::cos(w.values[next]) - std::sin(w.values[prev]) * std::sin(w.values[i]);
      trig_err = std::max(trig_err, std::abs(grad[i] - exact));
    }
  }
  return {quad_err <= 1e-9 && trig_err <= 1e-6,
          "quadratic max err=" + sci(quad_err) + " trig max err=" + sci(trig_err)};
}

// Planted-target suite: class 1 is the default winner; the target class
// gets a concave logit bump over a random pose-space ellipsoid.
SyntheticConfig ordering_case(int c) {
  Rng rng = Rng::substream(4004, "ordering-case", static_cast<std::uint64_t>(c));
  SyntheticConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(c);
  cfg.num_classes = 4;
  cfg.bias = {0.0, 1.0, 0.0, 0.0};
  cfg.pixel_weight = 0.25;
  PlantedRegion r;
  const int targets[] = {0, 2, 3};
  r.class_index = targets[c % 3];
  r.shape = RegionShape::kParaboloid;
  r.amplitude = rng.uniform(5.0, 10.0);
  r.center.z_delta = rng.uniform(-20.0, -3.0);
  r.center.yaw = kTwoPi * rng.uniform_open01();
  r.center.pitch = kTwoPi * rng.uniform_open01();
  r.center.roll = kTwoPi * rng.uniform_open01();
  const double hw = rng.uniform(0.5, 0.9);
  r.half_widths = {INFINITY, INFINITY, rng.uniform(4.0, 10.0), hw, hw, hw};
  cfg.regions.push_back(r);
  return cfg;
}

Outcome optimizer_ordering() {
  const auto t0 = Clock::now();
  SceneConfig scene = testing_support::small_scene(16);
  constexpr int kCases = 20, kTrials = 50;
  std::vector<double> zrs_rate, fdg_rate, zrs_prob, fdg_prob;
  for (int c = 0; c < kCases; ++c) {
    const SyntheticConfig cfg = ordering_case(c);
    SyntheticClassifier clf(cfg);
    const int target = cfg.regions[0].class_index;
    int zrs_hits = 0, fdg_hits = 0;
    std::vector<double> zp, fp;
    for (int t = 0; t < kTrials; ++t) {
      SearchConfig z;
      z.mode = SearchMode::kZRSAttack;
      z.target_class = target;
      z.budget = 100;
      z.seed = static_cast<std::uint64_t>(c) * 1000 + static_cast<std::uint64_t>(t);
      const SearchResult zr = run_zrs(scene, clf, z);
      // The level sweep is shared: FDG starts from its best pose.
      SearchConfig f = z;
      f.mode = SearchMode::kFDG;
      const SearchResult fr = run_fdg(scene, clf, f, *zr.init_pose);
      bool init_hit = false;
      for (int i = 0; i < 300; ++i) init_hit |= zr.records[static_cast<std::size_t>(i)].top_label == target;
      zrs_hits += zr.hit;
      fdg_hits += init_hit || fr.hit;
      zp.push_back(zr.max_target_prob);
      fp.push_back(std::max(zr.init_target_prob, fr.max_target_prob));
    }
    zrs_rate.push_back(100.0 * zrs_hits / kTrials);
    fdg_rate.push_back(100.0 * fdg_hits / kTrials);
    zrs_prob.push_back(brute_median(zp));
    fdg_prob.push_back(brute_median(fp));
  }
  const double secs = seconds_since(t0);
  const double zh = brute_median(zrs_rate), fh = brute_median(fdg_rate);
  const double zpm = brute_median(zrs_prob), fpm = brute_median(fdg_prob);
  return {fh >= zh && fpm >= zpm && secs < 600.0,
          "median hit rate FDG " + fmt(fh, 1) + "% vs ZRS " + fmt(zh, 1) + "%, median max target prob FDG " +
              fmt(fpm) + " vs ZRS " + fmt(zpm) + ", time=" + fmt(secs, 1) + "s"};
}

Outcome zrs_budget() {
  SceneConfig scene = testing_support::small_scene(8);
  SyntheticConfig sc;
  sc.num_classes = 3;
  auto clf = std::make_shared<CountingClassifier>(std::make_shared<SyntheticClassifier>(sc));
  SearchConfig cfg;
  cfg.mode = SearchMode::kZRSInit;
  cfg.target_class = 0;
  const SearchResult r = run_zrs(scene, *clf, cfg);
  bool levels_ok = r.levels.size() == 30;
  for (int l = 0; levels_ok && l < 30; ++l) {
    const double want = -28.0 + 28.0 * l / 29.0;
    levels_ok = std::abs(r.levels[static_cast<std::size_t>(l)] - want) <= 1e-12;
    for (int k = 0; levels_ok && k < 10; ++k)
      levels_ok = r.records[static_cast<std::size_t>(l * 10 + k)].pose.z_delta == r.levels[static_cast<std::size_t>(l)];
  }
  return {clf->classify_calls() == 300 && r.records.size() == 300 && levels_ok,
          std::to_string(clf->classify_calls()) + " backend calls, levels " + (levels_ok ? "match" : "do not match") +
              " linspace(-28, 0, 30)"};
}

Outcome census_calibration() {
  std::ifstream in(testing_support::fixture("synthetic_calibration.json"));
  SyntheticClassifier clf(synthetic_config_from_json(json::parse(in)));
  SceneConfig scene = testing_support::small_scene(4);
  const CensusReport r =
      census(scene, clf, 100000, {{"medium", LightingConfig::preset(LightingPreset::kMedium)}}, 0, 5005);
  const double acc = *r.settings[0].accuracy;
  return {std::abs(acc - 3.0) <= 0.5, "accuracy " + fmt(acc) + "% over 100000 samples, planted volume 3.000%"};
}

Outcome sensitivity_oracle() {
  Gen g(6006);
  int mismatches = 0, checks = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<ObjectSensitivity> objects(static_cast<std::size_t>(g.integer(1, 9)));
    for (auto& o : objects) {
      o.starts.resize(static_cast<std::size_t>(g.integer(1, 15)));
      for (auto& st : o.starts)
        for (std::size_t p = 0; p < 6; ++p) {
          ParamOutcomes po;
          po.param = kAllPoseParams[p];
          const int n = g.integer(1, 30);
          for (int i = 0; i < n; ++i) {
            ResampleOutcome out;
            out.value = g.uniform(0, kTwoPi);
            out.delta = parameter_delta(po.param, g.uniform(0, kTwoPi), out.value);
            out.misclassified = g.integer(0, 3) == 0;
            po.outcomes.push_back(out);
          }
          st.params[p] = summarize_param(po);
          // Brute force for the per-start values.
          int fails = 0;
          double best = INFINITY;
          for (const auto& out : po.outcomes)
            if (out.misclassified) ++fails, best = std::min(best, out.delta);
          ++checks;
          if (st.params[p].failure_rate != 100.0 * fails / n) ++mismatches;
          if ((fails > 0) != st.params[p].min_delta.has_value() || (fails > 0 && *st.params[p].min_delta != best))
            ++mismatches;
        }
    }
    const SensitivityReport r = aggregate_objects(objects);
    for (std::size_t p = 0; p < 6; ++p) {
      std::vector<double> obj_rates, obj_deltas;
      for (const auto& o : objects) {
        std::vector<double> rates, deltas;
        for (const auto& st : o.starts) {
          rates.push_back(st.params[p].failure_rate);
          if (st.params[p].min_delta) deltas.push_back(*st.params[p].min_delta);
        }
        obj_rates.push_back(brute_median(rates));
        if (!deltas.empty()) obj_deltas.push_back(brute_median(deltas));
      }
      ++checks;
      if (*r.failure_rate[p] != brute_median(obj_rates)) ++mismatches;
      if (obj_deltas.empty() != !r.min_delta[p].has_value() ||
          (!obj_deltas.empty() && *r.min_delta[p] != brute_median(obj_deltas)))
        ++mismatches;
    }
  }
  // Circular distance for angles.
  int circular_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const double a = g.uniform(0, kTwoPi), b = g.uniform(0, kTwoPi);
    const double want = std::min(std::abs(a - b), kTwoPi - std::abs(a - b));
    for (PoseParam p : {PoseParam::kYaw, PoseParam::kPitch, PoseParam::kRoll})
      if (std::abs(parameter_delta(p, a, b) - want) > 1e-12) ++circular_bad;
  }
  return {mismatches == 0 && circular_bad == 0, std::to_string(checks) + " aggregates, " + std::to_string(mismatches) +
                                                    " mismatches; " + std::to_string(circular_bad) +
                                                    " angle deltas not circular"};
}

Outcome overlap() {
  std::map<int, long long> h;
  for (int i = 0; i < 70; ++i) h[i] = 200 - i;
  const double same = lighting_overlap({h, h, h}).o_s;
  const double disjoint = lighting_overlap({std::map<int, long long>{{1, 3}, {2, 1}}, {{3, 1}}, {{4, 2}}}).o_s;
  Gen g(7007);
  int bad = 0;
  for (int t = 0; t < 20; ++t) {
    std::array<std::map<int, long long>, 3> hs;
    for (auto& m : hs) {
      const int n = g.integer(1, 150);
      for (int i = 0; i < n; ++i) m[g.integer(0, 120)] += g.integer(1, 9);
    }
    std::vector<std::set<int>> sets;
    for (const auto& m : hs) {
      std::vector<std::pair<long long, int>> items;
      for (const auto& [l, c] : m) items.push_back({-c, l});
      std::sort(items.begin(), items.end());
      std::set<int> top;
      for (std::size_t i = 0; i < items.size() && i < 50; ++i) top.insert(items[i].second);
      sets.push_back(top);
    }
    std::set<int> uni;
    int inter = 0;
    for (const auto& s : sets) uni.insert(s.begin(), s.end());
    for (int l : uni) inter += sets[0].count(l) && sets[1].count(l) && sets[2].count(l);
    if (lighting_overlap(hs).o_s != 100.0 * inter / static_cast<double>(uni.size())) ++bad;
  }
  return {same == 100.0 && disjoint == 0.0 && bad == 0, "identical=" + fmt(same, 1) + " disjoint=" + fmt(disjoint, 1) +
                                                            ", " + std::to_string(bad) + "/20 random triples differ"};
}

Outcome golden() {
  std::string detail;
  bool ok = true;
  for (const auto& c : testing_support::golden_cases()) {
    const fs::path path = testing_support::golden_path(c.name);
    const auto a = encode_png(render(c.scene, c.pose).pixels);
    const auto b = encode_png(render(c.scene, c.pose).pixels);
    const bool same = fs::exists(path) && a == b && a == read_file_bytes(path);
    ok &= same;
    detail += c.name + (same ? "=ok " : "=DIFF ");
  }
  return {ok, detail};
}

Outcome self_transfer() {
  SyntheticConfig sc;
  sc.num_classes = 6;
  sc.pixel_weight = 6.0;
  SyntheticClassifier clf(sc);
  SceneConfig scene = testing_support::small_scene(16);
  SearchConfig cfg;
  cfg.budget = 500;
  cfg.seed = 8008;
  const SearchResult rs = run_random_search(scene, clf, cfg);
  const TransferReport t = transfer(rs.records, scene, clf.info(), clf, 0, 0.0);
  const bool ok = t.eligible > 0 && t.misclassification_rate == 100.0 && t.agreement_rate == 100.0;
  return {ok, std::to_string(t.eligible) + " eligible, misclassification " +
                  (t.misclassification_rate ? fmt(*t.misclassification_rate, 1) : "n/a") + "%, agreement " +
                  (t.agreement_rate ? fmt(*t.agreement_rate, 1) : "n/a") + "%"};
}

Outcome conformance() {
  const std::vector<double> probs{0.125, 0.5, 0.375};
  ConformanceExpectations expect;
  expect.probs = probs;
  expect.embedding = echo_embedding(64);
  ProtocolServer server(std::make_shared<EchoClassifier>(probs, 64));
  const int port = server.port();
  const auto tcp = run_conformance([port] { return connect_tcp("127.0.0.1", port, std::chrono::seconds(5)); }, expect);
  const std::string cmd = std::string(ADVPOSE_ECHO_SERVER) + " --stdio --probs 0.125,0.5,0.375 --embedding-dim 64";
  const auto stdio = run_conformance([cmd] { return spawn_process(cmd, std::chrono::seconds(10)); }, expect);
  std::string failed;
  for (const auto* checks : {&tcp, &stdio})
    for (const auto& c : *checks)
      if (!c.passed) failed += " " + c.name;

  // Malformed payloads: the server answers each with an error reply and
  // keeps serving; the decoders raise only ProtocolError. Blank lines are
  // skipped by the server, so none are sent.
  Gen g(9009);
  const std::vector<std::string> seeds = {
      "{", "[]", "null", "42", R"({"id":1})", R"({"id":"a","op":"classify"})",
      R"({"id":"a","op":"classify","width":2,"height":2,"pixels_b64":"!!"})",
      R"({"id":"a","op":"classify","width":-1,"height":2,"pixels_b64":""})",
      R"({"id":"a","op":"embed","width":1e9,"height":1e9,"pixels_b64":"AAAA"})"};
  auto conn = connect_tcp("127.0.0.1", port, std::chrono::seconds(5));
  conn->recv_line();
  int bad_replies = 0, stray_exceptions = 0, sent = 0;
  for (int i = 0; i < 600; ++i) {
    std::string line = seeds[static_cast<std::size_t>(i) % seeds.size()];
    if (i >= static_cast<int>(seeds.size())) {
      const int mutations = g.integer(1, 4);
      for (int m = 0; m < mutations; ++m) {
        const char ch = static_cast<char>(g.integer(1, 126));
        if (ch == '\n' || ch == '\r') continue;
        if (!line.empty() && g.coin())
          line[static_cast<std::size_t>(g.integer(0, static_cast<int>(line.size()) - 1))] = ch;
        else
          line.push_back(ch);
      }
    }
    for (auto decode : std::vector<std::function<void(const std::string&)>>{
             [](const std::string& s) { protocol::decode_request(s); },
             [](const std::string& s) { protocol::decode_response(s); },
             [](const std::string& s) { protocol::decode_handshake(s); }}) {
      try {
        decode(line);
      } catch (const ProtocolError&) {
      } catch (...) {
        ++stray_exceptions;
      }
    }
    bool valid = false;
    try {
      protocol::decode_request(line);
      valid = true;
    } catch (const ProtocolError&) {
    }
    if (valid) continue;
    conn->send_line(line);
    ++sent;
    const auto reply = protocol::decode_response(conn->recv_line());
    if (!reply.error) ++bad_replies;
  }
  protocol::Request req;
  req.id = "final";
  req.image = quantize(Image::solid(2, 2, 0.5f, 0.5f, 0.5f));
  conn->send_line(protocol::encode_request(req));
  const bool alive = protocol::decode_response(conn->recv_line()).probs == probs;
  const bool ok = failed.empty() && bad_replies == 0 && stray_exceptions == 0 && alive;
  return {ok, std::to_string(tcp.size()) + " tcp + " + std::to_string(stdio.size()) + " stdio checks" +
                  (failed.empty() ? "" : ", failed:" + failed) + "; " + std::to_string(sent) +
                  " malformed lines, " + std::to_string(bad_replies) + " without error reply, " +
                  std::to_string(stray_exceptions) + " non-protocol exceptions, server " +
                  (alive ? "alive" : "DEAD")};
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome reproducibility() {
  const fs::path dir = testing_support::scratch_dir("acceptance-replay");
  const json config = {
      {"seed", 10010},
      {"scene", {{"mesh", "builtin:sphere"}, {"width", 24}, {"height", 24}, {"true_class", 0}}},
      {"backend", {{"synthetic", {{"num_classes", 5}, {"pixel_weight", 4.0}}}}},
      {"census", {{"n", 100}}},
      {"landscape", {{"rows", 6}, {"cols", 6}}}};
  std::ofstream(dir / "config.json") << config.dump(2);
  const std::string cli = std::string("ADVPOSE_BACKEND_ENDPOINT= ") + ADVPOSE_CLI;
  const std::string cfg = " -c " + (dir / "config.json").string();
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"census", "census"},
      {"landscape", "landscape"},
      {"rs", "attack rs --target 2 --steps 50"},
      {"zrs", "attack zrs --target 2 --steps 50"},
      {"fdg", "attack fdg --target 2 --steps 5"},
      {"multiview", "attack multiview --target 2 --steps 2 --views 3 --init 0,0,-5,1,1,1"},
  };
  std::string detail;
  bool ok = true;
  for (const auto& [name, args] : runs) {
    const fs::path out = dir / name;
    const int rc = shell(cli + " " + args + cfg + " -o " + out.string());
    const int rp = rc == 0 ? shell(cli + " replay --check " + (out / "manifest.json").string() + " -o " +
                                   (dir / (name + "-replay")).string())
                           : -1;
    const bool same = rc == 0 && rp == 0 && read_file_bytes(out / "records.jsonl") ==
                                                read_file_bytes(dir / (name + "-replay") / "records.jsonl");
    ok &= same;
    detail += name + (same ? "=identical " : "=DIFFERENT ");
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"transform-correctness", transforms},
      {"frustum-property", frustum},
      {"fd-gradient-oracle", fd_oracle},
      {"optimizer-ordering", optimizer_ordering},
      {"zrs-budget-exactness", zrs_budget},
      {"census-calibration", census_calibration},
      {"sensitivity-oracle", sensitivity_oracle},
      {"overlap-score", overlap},
      {"renderer-golden", golden},
      {"self-transfer-identity", self_transfer},
      {"protocol-conformance", conformance},
      {"reproducibility", reproducibility},
  };
  const char* only = std::getenv("ACCEPTANCE_ONLY");
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (only && name != only) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
