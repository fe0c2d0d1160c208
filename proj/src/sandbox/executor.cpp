#include "repairgraph/sandbox/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <system_error>
#include <vector>

#include "repairgraph/sandbox/traceback.hpp"

extern char** environ;

namespace repairgraph::sandbox {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* kHarness = R"PY(import json
import os
import sys
import traceback


def emit(nonce, payload):
    sys.stdout.flush()
    sys.stderr.flush()
    text = json.dumps(payload)
    sys.stdout.write("\n" + nonce + "\n" + text + "\n" + nonce + "\n")
    sys.stdout.flush()


def failure(status, error_type, message, tb_text):
    return {
        "status": status,
        "error": {
            "error_type": error_type,
            "message": message,
            "traceback_text": tb_text,
        },
    }


def main():
    nonce = "<<" + os.environ.pop("RG_SANDBOX_NONCE", "") + ">>"
    with open(sys.argv[1], "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    source = payload["source"]
    entry = payload["entry"]
    args = payload["args"]

    try:
        code = compile(source, "source.py", "exec")
    except SyntaxError as exc:
        emit(nonce, failure("syntax_error", type(exc).__name__, str(exc),
                            traceback.format_exc()))
        return

    module = {"__name__": "__main__", "__file__": "source.py"}
    try:
        exec(code, module)
    except SystemExit as exc:
        emit(nonce, failure("exception", "SystemExit", str(exc.code),
                            traceback.format_exc()))
        return
    except BaseException as exc:
        emit(nonce, failure("exception", type(exc).__name__, str(exc),
                            traceback.format_exc()))
        return

    fn = module.get(entry)
    if not callable(fn):
        emit(nonce, failure("exception", "EntryPointNotFound",
                            "no callable named " + repr(entry), ""))
        return

    try:
        value = fn(*args)
    except SystemExit as exc:
        emit(nonce, failure("exception", "SystemExit", str(exc.code),
                            traceback.format_exc()))
        return
    except BaseException as exc:
        emit(nonce, failure("exception", type(exc).__name__, str(exc),
                            traceback.format_exc()))
        return

    try:
        encoded = json.dumps(value)
    except (TypeError, ValueError) as exc:
        emit(nonce, failure("exception", "UnserializableReturn", str(exc), ""))
        return

    emit(nonce, {"status": "success", "return_value": json.loads(encoded)})


if __name__ == "__main__":
    main()
)PY";

constexpr double kGraceSeconds = 1.0;

std::string random_nonce() {
    std::random_device rd;
    std::uniform_int_distribution<unsigned> nibble(0, 15);
    std::string hex;
    hex.reserve(32);
    for (int i = 0; i < 32; ++i) hex.push_back("0123456789abcdef"[nibble(rd)]);
    return hex;
}

struct ScratchDir {
    fs::path path;

    ScratchDir() {
        std::string tmpl = (fs::temp_directory_path() / "rg_sbx_XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (::mkdtemp(buf.data()) == nullptr) {
            throw SandboxError(std::string("mkdtemp failed: ") + std::strerror(errno));
        }
        path = buf.data();
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SandboxError("cannot write " + path.string());
    out << content;
    if (!out) throw SandboxError("write failure on " + path.string());
}

struct Capture {
    std::string out;
    std::string err;
    bool timed_out = false;
};

Capture drain_child(pid_t pid, int out_fd, int err_fd, double timeout_s) {
    Capture cap;
    const auto deadline = Clock::now() + std::chrono::duration<double>(timeout_s);
    const auto hard_stop =
        deadline + std::chrono::duration<double>(kGraceSeconds);

    std::array<pollfd, 2> fds{{{out_fd, POLLIN, 0}, {err_fd, POLLIN, 0}}};
    std::array<std::string*, 2> sinks{&cap.out, &cap.err};
    int open_count = 2;
    char buf[4096];

    while (open_count > 0) {
        const auto now = Clock::now();
        if (!cap.timed_out && now >= deadline) {
            ::kill(-pid, SIGKILL);
            cap.timed_out = true;
        }
        if (cap.timed_out && now >= hard_stop) break;

        const auto until = cap.timed_out ? hard_stop : deadline;
        auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(until - now).count();
        if (wait_ms < 0) wait_ms = 0;
        if (wait_ms > 100) wait_ms = 100;

        const int ready = ::poll(fds.data(), fds.size(), static_cast<int>(wait_ms));
        if (ready < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (ready == 0) continue;
        for (std::size_t i = 0; i < fds.size(); ++i) {
            if (fds[i].fd < 0 || (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
            const ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
            if (n > 0) {
                sinks[i]->append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
                ::close(fds[i].fd);
                fds[i].fd = -1;
                --open_count;
            }
        }
    }
    return cap;
}

struct Envelope {
    std::string user_stdout;
    std::string body;
    bool found = false;
};

Envelope split_envelope(const std::string& raw, const std::string& nonce) {
    Envelope env;
    const std::string needle = "\n<<" + nonce + ">>\n";
    const auto open = raw.find(needle);
    if (open == std::string::npos) {
        env.user_stdout = raw;
        return env;
    }
    const auto body_start = open + needle.size();
    const auto close = raw.find(needle, body_start);
    if (close == std::string::npos) {
        env.user_stdout = raw;
        return env;
    }
    env.user_stdout = raw.substr(0, open);
    env.body = raw.substr(body_start, close - body_start);
    env.found = true;
    return env;
}

}  // namespace

std::string resolve_python(const SandboxConfig& config) {
    if (!config.python.empty()) return config.python;
    if (const char* env = std::getenv("REPAIRGRAPH_PYTHON"); env != nullptr && *env != '\0') {
        return env;
    }
    return "python3";
}

namespace {

// The scratch directory name is random, so it must not leak into results.
void scrub_path(std::string& text, const std::string& dir) {
    if (dir.empty()) return;
    const std::string with_slash = dir + "/";
    std::size_t pos = 0;
    while ((pos = text.find(with_slash, pos)) != std::string::npos) {
        text.erase(pos, with_slash.size());
    }
    pos = 0;
    while ((pos = text.find(dir, pos)) != std::string::npos) {
        text.replace(pos, dir.size(), ".");
        pos += 1;
    }
}

ExecutionResult scrubbed(ExecutionResult result, const std::string& dir) {
    scrub_path(result.stdout_text, dir);
    scrub_path(result.stderr_text, dir);
    if (result.error.has_value()) {
        scrub_path(result.error->message, dir);
        scrub_path(result.error->traceback_text, dir);
    }
    return result;
}

}  // namespace

Executor::Executor(SandboxConfig config) : python_(resolve_python(config)) {}

const std::string& Executor::harness_source() {
    static const std::string source = kHarness;
    return source;
}

ExecutionResult Executor::execute(const ExecutionRequest& request) const {
    request.validate();

    const ScratchDir scratch;
    const std::string nonce = random_nonce();
    write_file(scratch.path / "harness.py", harness_source());
    const nlohmann::json payload{
        {"source", request.source},
        {"entry", request.entry},
        {"args", request.args},
    };
    write_file(scratch.path / "payload.json", payload.dump());

    int out_pipe[2];
    int err_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0) {
        throw SandboxError(std::string("pipe2 failed: ") + std::strerror(errno));
    }

    std::vector<std::string> env_strings;
    for (char** e = environ; *e != nullptr; ++e) env_strings.emplace_back(*e);
    env_strings.push_back("RG_SANDBOX_NONCE=" + nonce);
    std::vector<char*> envp;
    envp.reserve(env_strings.size() + 1);
    for (std::string& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);

    const std::string dir = scratch.path.string();
    std::array<const char*, 4> argv{python_.c_str(), "harness.py", "payload.json", nullptr};

    const auto started = Clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) {
        throw SandboxError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        if (::chdir(dir.c_str()) != 0) ::_exit(126);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        ::execvpe(argv[0], const_cast<char* const*>(argv.data()), envp.data());
        ::_exit(127);
    }

    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    Capture cap = drain_child(pid, out_pipe[0], err_pipe[0], request.timeout_s);

    int status = 0;
    ::waitpid(pid, &status, 0);
    const auto finished = Clock::now();

    ExecutionResult result;
    result.wall_ms =
        std::chrono::duration<double, std::milli>(finished - started).count();
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    } else {
        result.exit_code = -1;
    }
    result.stderr_text = cap.err;

    const Envelope envelope = split_envelope(cap.out, nonce);
    result.stdout_text = envelope.user_stdout;

    if (cap.timed_out) {
        result.status = ExecStatus::timeout;
        return scrubbed(std::move(result), dir);
    }

    if (!envelope.found) {
        if (result.exit_code == 0) {
            throw HarnessFailure("child exited cleanly without a result envelope; stdout: " +
                                 cap.out.substr(0, 200));
        }
        result.status = ExecStatus::crash;
        return scrubbed(std::move(result), dir);
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(envelope.body);
        if (!doc.is_object() || !doc.contains("status")) {
            throw SandboxError("envelope missing status");
        }
    } catch (const std::exception& e) {
        if (result.exit_code == 0) {
            throw HarnessFailure(std::string("unparseable result envelope: ") + e.what());
        }
        result.status = ExecStatus::crash;
        return scrubbed(std::move(result), dir);
    }

    const std::string status_name = doc.at("status").get<std::string>();
    if (status_name == "success") {
        result.status = ExecStatus::success;
        result.return_value = doc.value("return_value", nlohmann::json());
        return scrubbed(std::move(result), dir);
    }

    result.status = status_name == "syntax_error" ? ExecStatus::syntax_error
                                                  : ExecStatus::exception;
    const nlohmann::json err_doc = doc.value("error", nlohmann::json::object());
    const std::string tb = err_doc.value("traceback_text", "");
    StructuredError err = tb.empty() ? StructuredError{} : parse_traceback(tb);
    err.traceback_text = tb;
    if (const std::string t = err_doc.value("error_type", ""); !t.empty()) err.error_type = t;
    if (err.error_type.empty()) err.error_type = "UnknownError";
    err.message = err_doc.value("message", err.message);
    result.error = std::move(err);
    return scrubbed(std::move(result), dir);
}

}  // namespace repairgraph::sandbox
