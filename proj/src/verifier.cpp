#include "papereval/verifier.hpp"

#include <random>

#include "papereval/hash.hpp"
#include "papereval/process.hpp"

namespace papereval::verifier {

namespace {

const Json kResultSchema = {
    {"type", "object"},
    {"required", {"results"}},
    {"properties",
     {{"results",
       {{"type", "array"},
        {"items",
         {{"type", "object"},
          {"required", {"classification"}},
          {"properties",
           {{"classification", {{"type", "string"}, {"enum", {"supported", "neutral", "contradictory"}}}},
            {"severity", {{"type", {"string", "null"}}}},
            {"evidence", {{"type", "string"}}}}}}}}}}}};

class NullVerifier : public VerifierBackend {
public:
    std::string id() const override { return "none"; }
    judge::BackendReply run(const VerifierRequest&, const fs::path&) override {
        return {judge::ReplyStatus::Unavailable, {}, "no verifier backend configured"};
    }
};

/// Temporary copy of the bundle, removed on destruction.
class Snapshot {
public:
    explicit Snapshot(const fs::path& source) {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("papereval-verify-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
        fs::copy(source, path_, fs::copy_options::recursive);
        for (const auto& e : fs::recursive_directory_iterator(path_)) {
            if (e.is_regular_file()) {
                fs::permissions(e.path(), fs::perms::owner_write | fs::perms::group_write | fs::perms::others_write,
                                fs::perm_options::remove);
            }
        }
    }
    ~Snapshot() {
        std::error_code ec;
        for (const auto& e : fs::recursive_directory_iterator(path_, ec)) {
            fs::permissions(e.path(), fs::perms::owner_all, fs::perm_options::add, ec);
        }
        fs::remove_all(path_, ec);
    }
    Snapshot(const Snapshot&) = delete;
    Snapshot& operator=(const Snapshot&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

Json parse_results(const std::string& raw, std::size_t expected, Diagnostics& diagnostics) {
    auto parsed = extract_json(raw);
    if (!parsed) throw VerifierUnavailable("verifier response is not valid JSON");
    Json doc = parsed->is_array() ? Json{{"results", *parsed}} : *parsed;
    if (auto err = validate_schema(doc, kResultSchema)) throw VerifierUnavailable("verifier response rejected: " + *err);
    if (doc["results"].size() > expected) {
        add_diagnostic(diagnostics, "verifier_extra_results",
                       "verifier returned " + std::to_string(doc["results"].size()) + " results for " +
                           std::to_string(expected) + " claims; extras ignored");
    }
    return doc["results"];
}

}  // namespace

ProcessVerifier::ProcessVerifier(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw ConfigError("process verifier needs a command");
}

std::string ProcessVerifier::id() const { return "process/" + fs::path(argv_.front()).filename().string(); }

judge::BackendReply ProcessVerifier::run(const VerifierRequest& request, const fs::path& workdir) {
    const auto result = run_process(argv_, workdir, request.system_prompt + "\n\n" + request.user_prompt);
    if (result.not_found) return {judge::ReplyStatus::Unavailable, {}, "verifier command not found: " + argv_.front()};
    if (result.exit_code != 0) {
        return {judge::ReplyStatus::Unavailable, {}, "verifier exited with code " + std::to_string(result.exit_code)};
    }
    return {judge::ReplyStatus::Ok, result.output, {}};
}

VerifierGateway::VerifierGateway(std::shared_ptr<VerifierBackend> backend, std::shared_ptr<judge::Cassette> cassette)
    : backend_(backend ? std::move(backend) : std::make_shared<NullVerifier>()),
      cassette_(cassette ? std::move(cassette) : std::make_shared<judge::Cassette>()) {}

std::string VerifierGateway::backend_id() const { return backend_->id(); }

VerifierResult VerifierGateway::run_verifier(const VerifierRequest& request, const fs::path& bundle_root) {
    std::lock_guard lock(exclusive_);
    VerifierResult out;

    judge::JudgeRequest keyed;
    keyed.task_tag = "verify_claims";
    keyed.system_prompt = request.system_prompt;
    keyed.user_prompt = request.user_prompt;
    keyed.response_schema = kResultSchema.dump();
    const auto key = keyed.idempotency_key();

    if (auto hit = cassette_->lookup(key)) {
        out.raw_text = *hit;
    } else {
        if (cassette_->mode() == judge::CassetteMode::Replay) {
            throw VerifierUnavailable("cassette has no verifier response for request " + key.substr(0, 12));
        }
        if (!fs::is_directory(bundle_root)) throw VerifierUnavailable("bundle not found: " + bundle_root.string());
        Snapshot snapshot(bundle_root);
        const auto before = hash_tree(snapshot.path());
        ++invocations_;
        judge::BackendReply reply;
        try {
            reply = backend_->run(request, snapshot.path());
        } catch (const std::exception& e) {
            throw VerifierUnavailable(e.what());
        }
        if (hash_tree(snapshot.path()) != before) {
            add_diagnostic(out.diagnostics, "verifier_write_rejected",
                           "verifier modified its read-only resource copy; changes were discarded");
        }
        if (reply.status != judge::ReplyStatus::Ok) throw VerifierUnavailable(reply.error);
        out.raw_text = reply.text;
        out.results = parse_results(out.raw_text, request.claim_count, out.diagnostics);
        cassette_->record(judge::CassetteEntry{key, keyed.task_tag, out.raw_text});
        consumed_[key] = out.raw_text;
        return out;
    }
    out.results = parse_results(out.raw_text, request.claim_count, out.diagnostics);
    consumed_[key] = out.raw_text;
    return out;
}

std::string VerifierGateway::responses_hash() const {
    std::lock_guard lock(exclusive_);
    Sha256 h;
    for (const auto& [key, raw] : consumed_) {
        h.update_field(key);
        h.update_field(raw);
    }
    return h.hex_digest();
}

std::shared_ptr<VerifierBackend> make_verifier(const Json& config) {
    const auto backend = config.value("backend", "heuristic");
    if (backend == "heuristic") return std::make_shared<HeuristicVerifier>();
    if (backend == "none") return std::make_shared<NullVerifier>();
    if (backend == "process") return std::make_shared<ProcessVerifier>(split_command(config.value("command", "")));
    throw ConfigError("unknown verifier backend: " + backend);
}

}  // namespace papereval::verifier
