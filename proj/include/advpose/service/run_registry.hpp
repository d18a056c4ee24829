#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"

namespace advpose {

enum class RunStatus { kQueued, kRunning, kDone, kFailed };
std::string_view status_name(RunStatus s);

// One run's event log. Records are appended by the worker; readers wait on
// the condition variable for more.
struct RunState {
  std::string id;
  std::string command;
  std::filesystem::path dir;
  mutable std::mutex mutex;
  std::condition_variable changed;
  RunStatus status = RunStatus::kQueued;
  std::vector<std::string> records;  // JSON lines
  nlohmann::json summary;
  std::string error;

  bool finished() const { return status == RunStatus::kDone || status == RunStatus::kFailed; }
};

// Active and finished runs, executed on a fixed number of workers in
// submission order.
class RunRegistry {
 public:
  RunRegistry(std::filesystem::path root, int workers, std::shared_ptr<Classifier> backend,
              nlohmann::json backend_handshake);
  ~RunRegistry();
  RunRegistry(const RunRegistry&) = delete;
  RunRegistry& operator=(const RunRegistry&) = delete;

  // Validates eagerly (UsageError) and queues the run; returns its id.
  std::string submit(const std::string& command, const nlohmann::json& config);
  std::shared_ptr<RunState> find(const std::string& id) const;
  std::vector<std::shared_ptr<RunState>> list() const;
  // Blocks until the run finishes; false if unknown.
  bool wait(const std::string& id) const;
  void shutdown();

 private:
  void worker();
  void execute(RunState& run, const nlohmann::json& config);

  std::filesystem::path root_;
  std::shared_ptr<Classifier> backend_;
  nlohmann::json handshake_;
  mutable std::mutex mutex_;
  std::condition_variable queue_cv_;
  std::map<std::string, std::shared_ptr<RunState>> runs_;
  std::deque<std::pair<std::shared_ptr<RunState>, nlohmann::json>> queue_;
  std::vector<std::thread> workers_;
  bool stopping_ = false;
};

}  // namespace advpose
