#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <mutex>
#include <string>

#include <fmt/format.h>

#include "promot/error.hpp"
#include "promot/objectives.hpp"

namespace promot {
namespace {

// Child process connected through two pipes. Calls are serialized.
class LineProcess {
 public:
  LineProcess(const std::string& command, std::chrono::milliseconds timeout) : timeout_(timeout) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw Error(fmt::format("pipe() failed: errno {}", errno));
    }
    pid_ = fork();
    if (pid_ < 0) throw Error(fmt::format("fork() failed: errno {}", errno));
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    // A dead child must surface as an error, not kill us with SIGPIPE.
    signal(SIGPIPE, SIG_IGN);
  }

  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  ~LineProcess() {
    close(write_fd_);
    close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
    }
  }

  double query(const Eigen::VectorXd& x) {
    std::lock_guard lock(mutex_);
    std::string line;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (i > 0) line += ' ';
      line += fmt::format("{:.17g}", x[i]);
    }
    line += '\n';
    write_all(line);
    const std::string reply = read_line();
    double value = 0.0;
    const char* begin = reply.data();
    const char* end = reply.data() + reply.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
      throw Error(fmt::format("external objective replied '{}', expected one real", reply));
    }
    return value;
  }

 private:
  void write_all(const std::string& data) {
    std::size_t written = 0;
    while (written < data.size()) {
      const ssize_t n = ::write(write_fd_, data.data() + written, data.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(fmt::format("external objective write failed: errno {}", errno));
      }
      written += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        throw Error(fmt::format("external objective timed out after {} ms", timeout_.count()));
      }
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (ready < 0 && errno != EINTR) throw Error("poll() failed on external objective");
      if (ready <= 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n == 0) throw Error("external objective closed its output");
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(fmt::format("external objective read failed: errno {}", errno));
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
  std::mutex mutex_;
};

}  // namespace

Objective subprocess_objective(const std::string& command, Box domain,
                               std::chrono::milliseconds timeout, std::string name) {
  auto process = std::make_shared<LineProcess>(command, timeout);
  return Objective(
      std::move(name), [process](const Eigen::VectorXd& x) { return process->query(x); },
      std::move(domain));
}

}  // namespace promot
