#include "archipelago/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <memory>
#include <mutex>

#include <json.hpp>

namespace archipelago {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void ignore_sigpipe_once() {
  // A write to a dead child must surface as an error, not kill the process.
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Connection {
  pid_t pid = -1;
  int to_child = -1;    // we write requests here
  int from_child = -1;  // we read replies here
  double timeout_seconds = 30.0;
  std::string read_buffer;
  std::uint64_t next_id = 1;
  std::mutex mu;

  ~Connection() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    if (pid > 0) {
      // Closing stdin asks the peer to exit; give it a moment, then insist.
      int status = 0;
      for (int i = 0; i < 200; ++i) {
        if (::waitpid(pid, &status, WNOHANG) == pid) return;
        ::usleep(5000);
      }
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
    }
  }

  void write_line(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    std::size_t off = 0;
    while (off < payload.size()) {
      const ssize_t n = ::write(to_child, payload.data() + off, payload.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(BridgeError::Kind::closed,
                          std::string("write to bridge process failed: ") +
                              std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(timeout_seconds));
    while (true) {
      const auto nl = read_buffer.find('\n');
      if (nl != std::string::npos) {
        std::string line = read_buffer.substr(0, nl);
        read_buffer.erase(0, nl + 1);
        return line;
      }
      const auto remaining = deadline - Clock::now();
      if (remaining <= Clock::duration::zero()) {
        throw BridgeError(BridgeError::Kind::timeout,
                          "bridge process did not reply within " +
                              std::to_string(timeout_seconds) + "s");
      }
      struct pollfd pfd{from_child, POLLIN, 0};
      const int timeout_ms = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count() + 1);
      const int rc = ::poll(&pfd, 1, timeout_ms);
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(BridgeError::Kind::closed,
                          std::string("poll on bridge process failed: ") +
                              std::strerror(errno));
      }
      if (rc == 0) continue;  // loop re-checks the deadline
      char buf[4096];
      const ssize_t n = ::read(from_child, buf, sizeof(buf));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(BridgeError::Kind::closed,
                          std::string("read from bridge process failed: ") +
                              std::strerror(errno));
      }
      if (n == 0) {
        throw BridgeError(BridgeError::Kind::closed,
                          "bridge process closed its output stream");
      }
      read_buffer.append(buf, static_cast<std::size_t>(n));
    }
  }
};

std::shared_ptr<Connection> spawn(const std::vector<std::string>& command,
                                  double timeout_seconds) {
  if (command.empty()) {
    throw ParameterError("bridge command must not be empty");
  }
  ignore_sigpipe_once();

  int to_pipe[2];    // parent -> child
  int from_pipe[2];  // child -> parent
  if (::pipe(to_pipe) != 0) {
    throw BridgeError(BridgeError::Kind::spawn, "pipe() failed");
  }
  if (::pipe(from_pipe) != 0) {
    ::close(to_pipe[0]);
    ::close(to_pipe[1]);
    throw BridgeError(BridgeError::Kind::spawn, "pipe() failed");
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_pipe[0], to_pipe[1], from_pipe[0], from_pipe[1]}) ::close(fd);
    throw BridgeError(BridgeError::Kind::spawn, "fork() failed");
  }
  if (pid == 0) {
    ::dup2(to_pipe[0], STDIN_FILENO);
    ::dup2(from_pipe[1], STDOUT_FILENO);
    for (int fd : {to_pipe[0], to_pipe[1], from_pipe[0], from_pipe[1]}) ::close(fd);
    std::vector<char*> argv;
    argv.reserve(command.size() + 1);
    for (const auto& arg : command) {
      argv.push_back(const_cast<char*>(arg.c_str()));
    }
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    ::perror("archipelago bridge exec");
    ::_exit(127);
  }

  auto conn = std::make_shared<Connection>();
  conn->pid = pid;
  conn->to_child = to_pipe[1];
  conn->from_child = from_pipe[0];
  conn->timeout_seconds = timeout_seconds;
  ::close(to_pipe[0]);
  ::close(from_pipe[1]);
  return conn;
}

json parse_reply(const std::string& line, BridgeError::Kind bad_kind) {
  json reply = json::parse(line, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("type")) {
    throw BridgeError(bad_kind, "bridge reply is not a protocol object: " + line);
  }
  return reply;
}

}  // namespace

std::vector<std::string> shell_command(const std::string& command_line) {
  return {"/bin/sh", "-c", command_line};
}

BlackBox bridge_open(const BridgeOptions& options, const PerturbationSpace& space) {
  auto conn = spawn(options.command, options.timeout_seconds);

  json hello = {{"type", "hello"},
                {"p", space.p()},
                {"mode", options.mode == BridgeMode::vector ? "vector" : "mask"}};
  conn->write_line(hello.dump());

  json ready;
  try {
    ready = parse_reply(conn->read_line(), BridgeError::Kind::handshake);
  } catch (const BridgeError& e) {
    if (e.kind() == BridgeError::Kind::closed) {
      throw BridgeError(BridgeError::Kind::handshake,
                        std::string("bridge process exited during handshake: ") +
                            e.what());
    }
    throw;
  }
  if (ready.at("type") != "ready") {
    throw BridgeError(BridgeError::Kind::handshake,
                      "expected a ready message, got: " + ready.dump());
  }
  int declared_p = -1;
  try {
    declared_p = ready.at("p").get<int>();
  } catch (const json::exception&) {
    throw BridgeError(BridgeError::Kind::handshake,
                      "ready message lacks a numeric p: " + ready.dump());
  }
  if (declared_p != space.p()) {
    throw BridgeError(BridgeError::Kind::handshake,
                      "bridge process declared p=" + std::to_string(declared_p) +
                          " but the space has p=" + std::to_string(space.p()));
  }

  const BridgeMode mode = options.mode;
  PerturbationSpace captured = space;
  BatchEvaluator evaluator = [conn, mode, captured](const std::vector<Context>& chunk) {
    std::lock_guard<std::mutex> lock(conn->mu);

    json inputs = json::array();
    for (const auto& ctx : chunk) {
      if (mode == BridgeMode::vector) {
        inputs.push_back(captured.realize(ctx));
      } else {
        std::vector<int> bits(static_cast<std::size_t>(ctx.size()));
        for (int i = 0; i < ctx.size(); ++i) {
          bits[static_cast<std::size_t>(i)] = ctx.test(i) ? 1 : 0;
        }
        inputs.push_back(bits);
      }
    }
    const std::uint64_t id = conn->next_id++;
    json request = {{"type", "eval"}, {"id", id}, {"inputs", inputs}};
    json reply;
    try {
      conn->write_line(request.dump());
      reply = parse_reply(conn->read_line(), BridgeError::Kind::protocol);
    } catch (const BridgeError& e) {
      throw BridgeError(e.kind(),
                        std::string(e.what()) + " while evaluating mask " +
                            (chunk.empty() ? std::string("<empty>")
                                           : chunk.front().bits()));
    }
    const std::string type = reply.at("type").get<std::string>();
    if (type == "error") {
      throw EvaluationError(
          "bridge evaluation failed: " +
              reply.value("message", std::string("(no message)")),
          chunk.empty() ? std::string{} : chunk.front().bits());
    }
    if (type != "result") {
      throw BridgeError(BridgeError::Kind::protocol,
                        "unexpected message type '" + type + "'");
    }
    std::vector<double> outputs;
    try {
      if (reply.at("id").get<std::uint64_t>() != id) {
        throw BridgeError(BridgeError::Kind::protocol,
                          "reply id does not match request id " + std::to_string(id));
      }
      outputs = reply.at("outputs").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw BridgeError(BridgeError::Kind::protocol,
                        std::string("malformed result message: ") + e.what());
    }
    if (outputs.size() != chunk.size()) {
      throw BridgeError(BridgeError::Kind::protocol,
                        "reply carries " + std::to_string(outputs.size()) +
                            " outputs for " + std::to_string(chunk.size()) +
                            " inputs");
    }
    return outputs;
  };

  BlackBoxOptions bb_options;
  bb_options.batch_size = options.batch_size;
  return BlackBox(space, std::move(evaluator), bb_options);
}

}  // namespace archipelago
