#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "papereval/common.hpp"
#include "papereval/judge.hpp"

namespace papereval::verifier {

struct VerifierRequest {
    std::string system_prompt;
    std::string user_prompt;
    /// Structured claims for offline backends; not hashed.
    Json payload;
    std::size_t claim_count = 0;
};

class VerifierBackend {
public:
    virtual ~VerifierBackend() = default;
    virtual std::string id() const = 0;
    /// Runs one verification session with `workdir` as the resource root.
    virtual judge::BackendReply run(const VerifierRequest& request, const fs::path& workdir) = 0;
};

/// Spawns an agent command in the resource directory with the system and
/// user prompts on standard input; standard output is the response.
class ProcessVerifier : public VerifierBackend {
public:
    explicit ProcessVerifier(std::vector<std::string> argv);
    std::string id() const override;
    judge::BackendReply run(const VerifierRequest& request, const fs::path& workdir) override;

private:
    std::vector<std::string> argv_;
};

/// Deterministic offline verifier: re-checks each claim's numbers against
/// every .tex file under the resource root.
class HeuristicVerifier : public VerifierBackend {
public:
    std::string id() const override { return "heuristic-verifier/1"; }
    judge::BackendReply run(const VerifierRequest& request, const fs::path& workdir) override;
};

class ScriptedVerifier : public VerifierBackend {
public:
    using Handler = std::function<judge::BackendReply(const VerifierRequest&, const fs::path&)>;
    explicit ScriptedVerifier(Handler handler) : handler_(std::move(handler)) {}
    std::string id() const override { return "scripted-verifier"; }
    judge::BackendReply run(const VerifierRequest& request, const fs::path& workdir) override {
        return handler_(request, workdir);
    }

private:
    Handler handler_;
};

struct VerifierResult {
    std::string raw_text;
    /// The "results" array, one object per claim as returned.
    Json results;
    Diagnostics diagnostics;
};

/// Single, exclusive entry point for stage-two verification. The backend
/// works on a throwaway copy of the bundle; any change it makes to that
/// copy is discarded and reported.
class VerifierGateway {
public:
    VerifierGateway(std::shared_ptr<VerifierBackend> backend, std::shared_ptr<judge::Cassette> cassette);

    /// Throws VerifierUnavailable on backend failure or an unparseable
    /// response.
    VerifierResult run_verifier(const VerifierRequest& request, const fs::path& bundle_root);

    std::size_t invocations() const { return invocations_; }
    std::string backend_id() const;
    /// Hash over the responses used so far, keyed like the judge's.
    std::string responses_hash() const;

private:
    std::shared_ptr<VerifierBackend> backend_;
    std::shared_ptr<judge::Cassette> cassette_;
    mutable std::mutex exclusive_;
    std::size_t invocations_ = 0;
    std::map<std::string, std::string> consumed_;
};

/// Config: {"backend": "process"|"heuristic"|"none", "command": "..."}.
std::shared_ptr<VerifierBackend> make_verifier(const Json& config);

}  // namespace papereval::verifier
