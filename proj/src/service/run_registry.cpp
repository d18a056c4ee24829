#include "advpose/service/run_registry.hpp"

#include "advpose/common/error.hpp"
#include "advpose/search/records.hpp"
#include "advpose/service/config.hpp"
#include "advpose/service/experiments.hpp"
#include "advpose/service/manifest.hpp"

namespace advpose {

std::string_view status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kQueued: return "queued";
    case RunStatus::kRunning: return "running";
    case RunStatus::kDone: return "done";
    case RunStatus::kFailed: return "failed";
  }
  return "unknown";
}

RunRegistry::RunRegistry(std::filesystem::path root, int workers, std::shared_ptr<Classifier> backend,
                         nlohmann::json backend_handshake)
    : root_(std::move(root)), backend_(std::move(backend)), handshake_(std::move(backend_handshake)) {
  if (workers < 1) throw UsageError("worker count must be >= 1");
  for (int i = 0; i < workers; ++i) workers_.emplace_back([this] { worker(); });
}

RunRegistry::~RunRegistry() { shutdown(); }

void RunRegistry::shutdown() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_ && workers_.empty()) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : workers_)
    if (t.joinable()) t.join();
  workers_.clear();
  std::lock_guard lock(mutex_);
  for (auto& [job, cfg] : queue_) {
    std::lock_guard run_lock(job->mutex);
    job->status = RunStatus::kFailed;
    job->error = "service shut down before the run started";
    job->changed.notify_all();
  }
  queue_.clear();
}

std::string RunRegistry::submit(const std::string& command, const nlohmann::json& config) {
  const auto& cmds = experiment_commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
    throw UsageError("unknown experiment '" + command + "'");
  validate_config(config);
  auto run = std::make_shared<RunState>();
  run->id = make_run_id();
  run->command = command;
  run->dir = root_ / run->id;
  {
    std::lock_guard lock(mutex_);
    if (stopping_) throw PreconditionError("service is shutting down");
    while (runs_.count(run->id)) run->id = make_run_id();
    run->dir = root_ / run->id;
    runs_[run->id] = run;
    queue_.emplace_back(run, config);
  }
  queue_cv_.notify_one();
  return run->id;
}

std::shared_ptr<RunState> RunRegistry::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = runs_.find(id);
  return it == runs_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<RunState>> RunRegistry::list() const {
  std::lock_guard lock(mutex_);
  std::vector<std::shared_ptr<RunState>> out;
  for (const auto& [id, run] : runs_) out.push_back(run);
  return out;
}

bool RunRegistry::wait(const std::string& id) const {
  const auto run = find(id);
  if (!run) return false;
  std::unique_lock lock(run->mutex);
  run->changed.wait(lock, [&] { return run->finished(); });
  return true;
}

void RunRegistry::worker() {
  for (;;) {
    std::shared_ptr<RunState> run;
    nlohmann::json config;
    {
      std::unique_lock lock(mutex_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      run = queue_.front().first;
      config = std::move(queue_.front().second);
      queue_.pop_front();
    }
    execute(*run, config);
  }
}

void RunRegistry::execute(RunState& run, const nlohmann::json& config) {
  {
    std::lock_guard lock(run.mutex);
    run.status = RunStatus::kRunning;
  }
  run.changed.notify_all();
  ExperimentOptions opt;
  opt.run_id = run.id;
  opt.backend = backend_;
  opt.backend_handshake = handshake_;
  opt.sink = [&run](const TrialRecord& r) {
    {
      std::lock_guard lock(run.mutex);
      run.records.push_back(to_json(r).dump());
    }
    run.changed.notify_all();
  };
  nlohmann::json summary;
  std::string error;
  try {
    summary = run_experiment(run.command, config, run.dir, opt).summary;
  } catch (const std::exception& e) {
    error = e.what();
  }
  {
    std::lock_guard lock(run.mutex);
    if (error.empty()) {
      run.status = RunStatus::kDone;
      run.summary = std::move(summary);
    } else {
      run.status = RunStatus::kFailed;
      run.error = error;
      run.summary = {{"run_id", run.id}, {"command", run.command}, {"error", error}};
    }
  }
  run.changed.notify_all();
}

}  // namespace advpose
