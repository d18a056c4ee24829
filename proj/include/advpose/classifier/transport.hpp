#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <string_view>

namespace advpose {

// A bidirectional stream of text lines (newline-terminated on the wire, the
// terminator stripped on receipt). Failures raise TransportError.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void send_line(std::string_view line) = 0;
  virtual std::string recv_line() = 0;
  virtual std::string describe() const = 0;
};

// Buffered line I/O over a pair of file descriptors; owns and closes them.
class FdLineTransport : public LineTransport {
 public:
  FdLineTransport(int read_fd, int write_fd, std::string name, std::chrono::milliseconds timeout);
  ~FdLineTransport() override;
  FdLineTransport(const FdLineTransport&) = delete;
  FdLineTransport& operator=(const FdLineTransport&) = delete;

  void send_line(std::string_view line) override;
  std::string recv_line() override;
  std::string describe() const override { return name_; }

 protected:
  int read_fd_;
  int write_fd_;
  std::string name_;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
};

// Connects to host:port over TCP.
std::unique_ptr<LineTransport> connect_tcp(const std::string& host, int port,
                                           std::chrono::milliseconds timeout = std::chrono::seconds(30));

// Runs `command` through /bin/sh with its stdin/stdout as the line stream.
std::unique_ptr<LineTransport> spawn_process(const std::string& command,
                                             std::chrono::milliseconds timeout = std::chrono::seconds(30));

// Parses "tcp://host:port", "host:port" or "stdio:<command>" and connects.
std::unique_ptr<LineTransport> connect_endpoint(const std::string& endpoint,
                                                std::chrono::milliseconds timeout = std::chrono::seconds(30));

// Listening TCP socket. Port 0 binds an ephemeral port.
class TcpListener {
 public:
  TcpListener(const std::string& host, int port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  int port() const { return port_; }
  // Blocks until a client connects or the listener is closed (returns null).
  std::unique_ptr<LineTransport> accept(std::chrono::milliseconds io_timeout = std::chrono::seconds(30));
  void close();

 private:
  std::atomic<int> fd_;
  int port_;
};

}  // namespace advpose
