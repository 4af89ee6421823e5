#include "subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <sstream>

namespace veribtot::detail {

namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

bool command_on_path(const std::string& name) {
  if (name.empty()) {
    return false;
  }
  if (name.find('/') != std::string::npos) {
    return ::access(name.c_str(), X_OK) == 0;
  }
  const char* path = std::getenv("PATH");
  if (!path) {
    return false;
  }
  std::stringstream stream(path);
  std::string dir;
  while (std::getline(stream, dir, ':')) {
    if (dir.empty()) {
      continue;
    }
    std::string candidate = dir + "/" + name;
    if (::access(candidate.c_str(), X_OK) == 0) {
      return true;
    }
  }
  return false;
}

ExecResult run_command(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                       std::chrono::milliseconds timeout) {
  ExecResult result;
  if (argv.empty()) {
    result.spawn_failed = true;
    result.output = "empty command";
    return result;
  }

  int pipe_fds[2];
  if (::pipe(pipe_fds) != 0) {
    result.spawn_failed = true;
    result.output = std::string("pipe: ") + std::strerror(errno);
    return result;
  }

  const auto start = Clock::now();
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(pipe_fds[0]);
    ::close(pipe_fds[1]);
    result.spawn_failed = true;
    result.output = std::string("fork: ") + std::strerror(errno);
    return result;
  }

  if (pid == 0) {
    // Child: own process group so a timeout kill reaps grandchildren too.
    ::setpgid(0, 0);
    ::close(pipe_fds[0]);
    ::dup2(pipe_fds[1], STDOUT_FILENO);
    ::dup2(pipe_fds[1], STDERR_FILENO);
    ::close(pipe_fds[1]);
    if (::chdir(cwd.c_str()) != 0) {
      ::_exit(126);
    }
    std::vector<char*> c_argv;
    c_argv.reserve(argv.size() + 1);
    for (const auto& a : argv) {
      c_argv.push_back(const_cast<char*>(a.c_str()));
    }
    c_argv.push_back(nullptr);
    ::execvp(c_argv[0], c_argv.data());
    ::dprintf(STDERR_FILENO, "exec %s: %s\n", argv[0].c_str(), std::strerror(errno));
    ::_exit(127);
  }

  ::close(pipe_fds[1]);
  int read_fd = pipe_fds[0];
  ::fcntl(read_fd, F_SETFL, O_NONBLOCK);

  const auto deadline = start + timeout;
  bool killed = false;
  bool eof = false;
  char buf[4096];

  while (!eof) {
    auto now = Clock::now();
    if (!killed && now >= deadline) {
      ::kill(-pid, SIGKILL);
      killed = true;
    }
    int wait_ms = killed ? 50
                         : static_cast<int>(std::min<std::int64_t>(
                               50, std::chrono::duration_cast<std::chrono::milliseconds>(
                                       deadline - now)
                                       .count()));
    if (wait_ms < 0) {
      wait_ms = 0;
    }
    struct pollfd pfd{read_fd, POLLIN, 0};
    int ready = ::poll(&pfd, 1, wait_ms);
    if (ready > 0) {
      for (;;) {
        ssize_t n = ::read(read_fd, buf, sizeof(buf));
        if (n > 0) {
          result.output.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
          eof = true;
          break;
        } else {
          break;  // EAGAIN
        }
      }
    }
  }
  ::close(read_fd);

  int status = 0;
  ::waitpid(pid, &status, 0);
  result.duration =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
  result.timed_out = killed;
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  if (result.exit_code == 127 && !killed) {
    result.spawn_failed = true;
  }
  return result;
}

}  // namespace veribtot::detail
