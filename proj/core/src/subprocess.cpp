#include "perfedit/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <system_error>

namespace perfedit {

namespace {

using Clock = std::chrono::steady_clock;

void throw_errno(const char* what) {
  throw std::system_error(errno, std::generic_category(), what);
}

struct Pipe {
  int read_fd = -1;
  int write_fd = -1;

  // O_CLOEXEC matters: with concurrent run_process calls, a child forked by
  // another thread must not inherit this pipe's write end, or EOF would
  // never arrive.
  Pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw_errno("pipe2");
    read_fd = fds[0];
    write_fd = fds[1];
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  Pipe(const Pipe&) = delete;
  Pipe& operator=(const Pipe&) = delete;

  void close_read() {
    if (read_fd >= 0) ::close(read_fd);
    read_fd = -1;
  }
  void close_write() {
    if (write_fd >= 0) ::close(write_fd);
    write_fd = -1;
  }
};

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw_errno("fcntl");
  }
}

// Writes to a broken stdin pipe must surface as EPIPE, not kill the harness.
void ignore_sigpipe_once() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

RunResult run_process(const std::vector<std::string>& argv,
                      std::string_view stdin_bytes, const RunLimits& limits,
                      const std::filesystem::path& workdir) {
  if (argv.empty()) throw std::invalid_argument("empty argv");
  ignore_sigpipe_once();

  Pipe in_pipe, out_pipe, err_pipe;

  const pid_t pid = ::fork();
  if (pid < 0) throw_errno("fork");

  if (pid == 0) {
    // Child. Own process group so the parent can kill the whole tree.
    ::setsid();
    // dup2 clears O_CLOEXEC on the stdio copies; the originals close at exec.
    ::dup2(in_pipe.read_fd, STDIN_FILENO);
    ::dup2(out_pipe.write_fd, STDOUT_FILENO);
    ::dup2(err_pipe.write_fd, STDERR_FILENO);
    if (!workdir.empty()) {
      if (::chdir(workdir.c_str()) != 0) _exit(127);
    }
    if (limits.memory_bytes) {
      rlimit rl{*limits.memory_bytes, *limits.memory_bytes};
      ::setrlimit(RLIMIT_AS, &rl);
    }
    rlimit no_core{0, 0};
    ::setrlimit(RLIMIT_CORE, &no_core);

    std::vector<char*> c_argv;
    c_argv.reserve(argv.size() + 1);
    for (const auto& a : argv) c_argv.push_back(const_cast<char*>(a.c_str()));
    c_argv.push_back(nullptr);
    ::execvp(c_argv[0], c_argv.data());
    _exit(127);
  }

  // Parent.
  in_pipe.close_read();
  out_pipe.close_write();
  err_pipe.close_write();
  set_nonblocking(in_pipe.write_fd);
  set_nonblocking(out_pipe.read_fd);
  set_nonblocking(err_pipe.read_fd);

  RunResult result;
  const auto start = Clock::now();
  const auto deadline =
      start + std::chrono::duration_cast<Clock::duration>(
                  std::chrono::duration<double>(limits.wall_timeout_s));

  std::size_t stdin_offset = 0;
  bool killed = false;
  const auto kill_group = [&] {
    if (!killed) {
      ::kill(-pid, SIGKILL);
      killed = true;
    }
  };

  char buf[65536];
  while (out_pipe.read_fd >= 0 || err_pipe.read_fd >= 0 ||
         in_pipe.write_fd >= 0) {
    const auto now = Clock::now();
    if (!result.timed_out && now >= deadline) {
      result.timed_out = true;
      kill_group();
    }

    pollfd fds[3];
    nfds_t nfds = 0;
    int in_slot = -1, out_slot = -1, err_slot = -1;
    if (in_pipe.write_fd >= 0) {
      in_slot = static_cast<int>(nfds);
      fds[nfds++] = {in_pipe.write_fd, POLLOUT, 0};
    }
    if (out_pipe.read_fd >= 0) {
      out_slot = static_cast<int>(nfds);
      fds[nfds++] = {out_pipe.read_fd, POLLIN, 0};
    }
    if (err_pipe.read_fd >= 0) {
      err_slot = static_cast<int>(nfds);
      fds[nfds++] = {err_pipe.read_fd, POLLIN, 0};
    }

    int poll_ms = 50;
    if (!result.timed_out) {
      const auto remain = std::chrono::duration_cast<std::chrono::milliseconds>(
                              deadline - Clock::now())
                              .count();
      poll_ms = static_cast<int>(std::max<long long>(
          1, std::min<long long>(remain + 1, 50)));
    }
    const int rc = ::poll(fds, nfds, poll_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      kill_group();
      throw_errno("poll");
    }

    if (in_slot >= 0 && (fds[in_slot].revents & (POLLOUT | POLLERR))) {
      if (stdin_offset >= stdin_bytes.size()) {
        in_pipe.close_write();
      } else {
        const ssize_t n =
            ::write(in_pipe.write_fd, stdin_bytes.data() + stdin_offset,
                    stdin_bytes.size() - stdin_offset);
        if (n > 0) {
          stdin_offset += static_cast<std::size_t>(n);
          if (stdin_offset >= stdin_bytes.size()) in_pipe.close_write();
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
          in_pipe.close_write();  // child closed stdin (EPIPE etc.)
        }
      }
    }

    const auto drain = [&](int slot, Pipe& pipe, std::string& sink) {
      if (slot < 0 || !(fds[slot].revents & (POLLIN | POLLHUP | POLLERR))) {
        return;
      }
      const ssize_t n = ::read(pipe.read_fd, buf, sizeof buf);
      if (n > 0) {
        const std::uint64_t room =
            limits.max_output_bytes > sink.size()
                ? limits.max_output_bytes - sink.size()
                : 0;
        if (static_cast<std::uint64_t>(n) > room) {
          sink.append(buf, static_cast<std::size_t>(room));
          result.output_truncated = true;
          kill_group();
        } else {
          sink.append(buf, static_cast<std::size_t>(n));
        }
      } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        pipe.close_read();
      }
    };
    drain(out_slot, out_pipe, result.out);
    drain(err_slot, err_pipe, result.err);

    // When stdin is the only open stream, nothing more will arrive; the
    // child may have exited without reading it all.
    if (out_pipe.read_fd < 0 && err_pipe.read_fd < 0 &&
        in_pipe.write_fd >= 0) {
      int status = 0;
      if (::waitpid(pid, &status, WNOHANG) != 0) {
        in_pipe.close_write();
        result.wall_seconds =
            std::chrono::duration<double>(Clock::now() - start).count();
        if (WIFEXITED(status)) {
          result.exited = true;
          result.exit_code = WEXITSTATUS(status);
        } else if (WIFSIGNALED(status)) {
          result.signaled = true;
          result.term_signal = WTERMSIG(status);
        }
        return result;
      }
    }
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.wall_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (WIFEXITED(status)) {
    result.exited = true;
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.signaled = true;
    result.term_signal = WTERMSIG(status);
  }
  return result;
}

std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> tokens;
  std::string current;
  bool in_token = false;
  char quote = 0;
  for (std::size_t i = 0; i < command.size(); ++i) {
    const char c = command[i];
    if (quote != 0) {
      if (c == quote) {
        quote = 0;
      } else {
        current.push_back(c);
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\n') {
      if (in_token) {
        tokens.push_back(std::move(current));
        current.clear();
        in_token = false;
      }
      continue;
    }
    current.push_back(c);
    in_token = true;
  }
  if (quote != 0) {
    throw std::invalid_argument("unbalanced quote in command template");
  }
  if (in_token) tokens.push_back(std::move(current));
  if (tokens.empty()) {
    throw std::invalid_argument("empty command template");
  }
  return tokens;
}

std::vector<std::string> substitute_placeholders(
    std::vector<std::string> argv,
    const std::vector<std::pair<std::string, std::string>>& replacements) {
  for (auto& token : argv) {
    for (const auto& [name, value] : replacements) {
      const std::string needle = "{" + name + "}";
      std::size_t pos = 0;
      while ((pos = token.find(needle, pos)) != std::string::npos) {
        token.replace(pos, needle.size(), value);
        pos += value.size();
      }
    }
  }
  return argv;
}

}  // namespace perfedit
