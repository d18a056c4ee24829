#include "advpose/classifier/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>

#include "advpose/classifier/protocol.hpp"
#include "advpose/common/error.hpp"

namespace advpose {
namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

FdLineTransport::FdLineTransport(int read_fd, int write_fd, std::string name, std::chrono::milliseconds timeout)
    : read_fd_(read_fd), write_fd_(write_fd), name_(std::move(name)), timeout_(timeout) {
  ignore_sigpipe();
}

FdLineTransport::~FdLineTransport() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
}

void FdLineTransport::send_line(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("write failed: " + errno_text(), name_, 1);
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string FdLineTransport::recv_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (buffer_.size() > protocol::kMaxLineBytes) throw ProtocolError("incoming line exceeds maximum size");
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(timeout_.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportError("poll failed: " + errno_text(), name_, 1);
    }
    if (ready == 0) throw TransportTimeout("timed out waiting for a line", name_, 1);
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("read failed: " + errno_text(), name_, 1);
    }
    if (n == 0) throw TransportError("connection closed by peer", name_, 1);
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

namespace {

class SocketTransport final : public FdLineTransport {
 public:
  SocketTransport(int fd, std::string name, std::chrono::milliseconds timeout)
      : FdLineTransport(fd, fd, std::move(name), timeout) {}

  void send_line(std::string_view line) override {
    std::string data(line);
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError("send failed: " + errno_text(), name_, 1);
      }
      off += static_cast<std::size_t>(n);
    }
  }
};

class ProcessTransport final : public FdLineTransport {
 public:
  ProcessTransport(int read_fd, int write_fd, pid_t pid, std::string name, std::chrono::milliseconds timeout)
      : FdLineTransport(read_fd, write_fd, std::move(name), timeout), pid_(pid) {}

  ~ProcessTransport() override {
    // Closing stdin lets a well-behaved child exit; then reap it.
    ::close(write_fd_);
    write_fd_ = -1;
    ::kill(pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

}  // namespace

std::unique_ptr<LineTransport> connect_tcp(const std::string& host, int port, std::chrono::milliseconds timeout) {
  const std::string name = "tcp://" + host + ":" + std::to_string(port);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    throw TransportError(std::string("cannot resolve host: ") + ::gai_strerror(rc), name, 1);
  int fd = -1;
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_error = errno_text();
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("connect failed: " + last_error, name, 1);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return std::make_unique<SocketTransport>(fd, name, timeout);
}

std::unique_ptr<LineTransport> spawn_process(const std::string& command, std::chrono::milliseconds timeout) {
  ignore_sigpipe();
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0) throw TransportError("pipe failed: " + errno_text(), "stdio:" + command, 1);
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("pipe failed: " + errno_text(), "stdio:" + command, 1);
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw TransportError("fork failed: " + errno_text(), "stdio:" + command, 1);
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  return std::make_unique<ProcessTransport>(from_child[0], to_child[1], pid, "stdio:" + command, timeout);
}

std::unique_ptr<LineTransport> connect_endpoint(const std::string& endpoint, std::chrono::milliseconds timeout) {
  if (endpoint.rfind("stdio:", 0) == 0) return spawn_process(endpoint.substr(6), timeout);
  std::string rest = endpoint;
  if (rest.rfind("tcp://", 0) == 0) rest = rest.substr(6);
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0) throw UsageError("endpoint must be tcp://host:port or stdio:<command>");
  int port = 0;
  try {
    port = std::stoi(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("invalid port in endpoint '" + endpoint + "'");
  }
  return connect_tcp(rest.substr(0, colon), port, timeout);
}

TcpListener::TcpListener(const std::string& host, int port) : fd_(-1), port_(port) {
  ignore_sigpipe();
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError("socket failed: " + errno_text(), host, 1);
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_.load());
    throw UsageError("listener host must be an IPv4 address: " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
    const std::string err = errno_text();
    ::close(fd_.load());
    throw TransportError("bind/listen failed: " + err, host + ":" + std::to_string(port), 1);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  const int fd = fd_.exchange(-1);
  if (fd >= 0) {
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
  }
}

std::unique_ptr<LineTransport> TcpListener::accept(std::chrono::milliseconds io_timeout) {
  for (;;) {
    const int listen_fd = fd_;
    if (listen_fd < 0) return nullptr;
    pollfd pfd{listen_fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 200);
    if (ready < 0 && errno != EINTR) return nullptr;
    if (ready <= 0) continue;
    sockaddr_in peer{};
    socklen_t len = sizeof peer;
    const int fd = ::accept(listen_fd, reinterpret_cast<sockaddr*>(&peer), &len);
    if (fd < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return nullptr;
    }
    char buf[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &peer.sin_addr, buf, sizeof buf);
    return std::make_unique<SocketTransport>(fd, std::string("tcp://") + buf + ":" + std::to_string(ntohs(peer.sin_port)),
                                             io_timeout);
  }
}

}  // namespace advpose
