#include "papereval/process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace papereval {

namespace {

struct Fd {
    int fd = -1;
    ~Fd() { close(); }
    void close() {
        if (fd >= 0) ::close(fd);
        fd = -1;
    }
};

void make_pipe(Fd& read_end, Fd& write_end, bool cloexec) {
    int fds[2];
    if (::pipe2(fds, cloexec ? O_CLOEXEC : 0) != 0) throw Error("pipe() failed");
    read_end.fd = fds[0];
    write_end.fd = fds[1];
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& working_dir,
                          const std::string& input) {
    if (argv.empty()) throw Error("empty command");
    ProcessResult result;

    Fd in_r, in_w, out_r, out_w, err_r, err_w;
    make_pipe(in_r, in_w, false);
    make_pipe(out_r, out_w, false);
    make_pipe(err_r, err_w, true);  // reports exec failure; closes on successful exec

    const pid_t pid = ::fork();
    if (pid < 0) throw Error("fork() failed");
    if (pid == 0) {
        ::dup2(in_r.fd, STDIN_FILENO);
        ::dup2(out_w.fd, STDOUT_FILENO);
        ::dup2(out_w.fd, STDERR_FILENO);
        ::close(in_w.fd);
        ::close(out_r.fd);
        ::close(err_r.fd);
        if (!working_dir.empty() && ::chdir(working_dir.c_str()) != 0) {
            const int e = errno;
            (void)!::write(err_w.fd, &e, sizeof(e));
            ::_exit(127);
        }
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        ::execvp(args[0], args.data());
        const int e = errno;
        (void)!::write(err_w.fd, &e, sizeof(e));
        ::_exit(127);
    }

    in_r.close();
    out_w.close();
    err_w.close();

    int exec_errno = 0;
    if (::read(err_r.fd, &exec_errno, sizeof(exec_errno)) == sizeof(exec_errno)) {
        result.not_found = true;
    }

    // Feed stdin and drain stdout concurrently so neither side blocks.
    std::size_t written = 0;
    if (input.empty() || result.not_found) in_w.close();
    std::signal(SIGPIPE, SIG_IGN);
    char buf[8192];
    while (out_r.fd >= 0) {
        pollfd fds[2];
        int n = 0;
        fds[n++] = {out_r.fd, POLLIN, 0};
        if (in_w.fd >= 0) fds[n++] = {in_w.fd, POLLOUT, 0};
        if (::poll(fds, static_cast<nfds_t>(n), -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const auto w = ::write(in_w.fd, input.data() + written, input.size() - written);
            if (w <= 0) {
                in_w.close();
            } else {
                written += static_cast<std::size_t>(w);
                if (written == input.size()) in_w.close();
            }
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            const auto r = ::read(out_r.fd, buf, sizeof(buf));
            if (r <= 0) {
                out_r.close();
            } else {
                result.output.append(buf, static_cast<std::size_t>(r));
            }
        }
    }
    in_w.close();

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> out;
    std::string cur;
    bool in_token = false;
    char quote = 0;
    for (char c : command) {
        if (quote != 0) {
            if (c == quote) {
                quote = 0;
            } else {
                cur.push_back(c);
            }
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            in_token = true;
        } else if (c == ' ' || c == '\t' || c == '\n') {
            if (in_token) out.push_back(std::move(cur));
            cur.clear();
            in_token = false;
        } else {
            cur.push_back(c);
            in_token = true;
        }
    }
    if (quote != 0) throw ConfigError("unterminated quote in command: " + command);
    if (in_token) out.push_back(std::move(cur));
    return out;
}

}  // namespace papereval
