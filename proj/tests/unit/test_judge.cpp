#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "fixtures.hpp"
#include "papereval/hash.hpp"
#include "papereval/judge.hpp"
#include "papereval/parallel.hpp"
#include "papereval/text_util.hpp"
#include "papereval/verifier.hpp"

using namespace papereval;
namespace pt = papereval::testing;
using judge::BackendReply;
using judge::Cassette;
using judge::CassetteMode;
using judge::JudgeGateway;
using judge::JudgeRequest;
using judge::ReplyStatus;
using judge::ScriptedBackend;

namespace {

const std::string kScoreSchema =
    R"({"type":"object","required":["score"],"properties":{"score":{"type":"integer","minimum":1,"maximum":5}}})";

JudgeRequest score_request(const std::string& user = "rate this") {
    JudgeRequest r;
    r.task_tag = "unit_score";
    r.system_prompt = "You are a judge.";
    r.user_prompt = user;
    r.response_schema = kScoreSchema;
    return r;
}

std::shared_ptr<ScriptedBackend> counting(std::atomic<int>& calls, std::string body = R"({"score": 4})") {
    return std::make_shared<ScriptedBackend>([&calls, body](const JudgeRequest&) {
        ++calls;
        return BackendReply{ReplyStatus::Ok, body, {}};
    });
}

}  // namespace

TEST(JudgeRequest, KeyIsPureFunctionOfPromptContent) {
    auto a = score_request(), b = score_request();
    b.payload = {{"ignored", true}};
    EXPECT_EQ(a.idempotency_key(), b.idempotency_key());
    b.user_prompt += " ";
    EXPECT_NE(a.idempotency_key(), b.idempotency_key());
    auto c = score_request();
    c.task_tag = "other";
    EXPECT_NE(a.idempotency_key(), c.idempotency_key());
    // field boundaries cannot be shifted
    JudgeRequest d = a, e = a;
    d.system_prompt = "ab";
    d.user_prompt = "c";
    e.system_prompt = "a";
    e.user_prompt = "bc";
    EXPECT_NE(d.idempotency_key(), e.idempotency_key());
}

TEST(Gateway, ParsesAndValidates) {
    std::atomic<int> calls{0};
    JudgeGateway gw(counting(calls, "Sure!\n```json\n{\"score\": 4}\n```"), nullptr, pt::fast_gateway());
    auto r = gw.submit(score_request());
    EXPECT_EQ(r.parsed["score"], 4);
    EXPECT_EQ(r.attempt_count, 1);
    EXPECT_EQ(gw.backend_id(), "scripted");
}

TEST(Gateway, FreeTextMode) {
    std::atomic<int> calls{0};
    JudgeGateway gw(counting(calls, "# Overview\ntext"), nullptr, pt::fast_gateway());
    auto req = score_request();
    req.response_schema.clear();
    auto r = gw.submit(req);
    EXPECT_EQ(r.parsed, Json("# Overview\ntext"));
}

TEST(Gateway, CorrectiveRetryNamesTheViolation) {
    std::vector<std::string> prompts;
    auto backend = std::make_shared<ScriptedBackend>([&](const JudgeRequest& r) {
        prompts.push_back(r.user_prompt);
        return BackendReply{ReplyStatus::Ok, prompts.size() == 1 ? R"({"score": 9})" : R"({"score": 2})", {}};
    });
    JudgeGateway gw(backend, nullptr, pt::fast_gateway());
    auto r = gw.submit(score_request());
    EXPECT_EQ(r.parsed["score"], 2);
    EXPECT_EQ(r.attempt_count, 2);
    ASSERT_EQ(prompts.size(), 2u);
    EXPECT_EQ(prompts[0], "rate this");
    EXPECT_NE(prompts[1].find("rejected"), std::string::npos);
    EXPECT_NE(prompts[1].find("score"), std::string::npos);
}

TEST(Gateway, SemanticCheckCountsAsViolation) {
    std::atomic<int> calls{0};
    JudgeGateway gw(counting(calls), nullptr, pt::fast_gateway());
    auto never = [](const Json&) -> std::optional<std::string> { return "not acceptable"; };
    EXPECT_THROW(gw.submit(score_request(), never), JudgeMalformed);
}

TEST(Gateway, RetryBudgetIsHard) {
    std::atomic<int> calls{0};
    auto backend = std::make_shared<ScriptedBackend>([&](const JudgeRequest&) {
        ++calls;
        return BackendReply{ReplyStatus::Ok, "no json here", {}};
    });
    auto cfg = pt::fast_gateway();
    cfg.retry_budget = 3;
    JudgeGateway gw(backend, nullptr, cfg);
    EXPECT_THROW(gw.submit(score_request()), JudgeMalformed);
    EXPECT_EQ(calls, 3);
}

TEST(Gateway, TransportFailureIsUnavailable) {
    std::atomic<int> calls{0};
    auto backend = std::make_shared<ScriptedBackend>([&](const JudgeRequest&) -> BackendReply {
        ++calls;
        throw std::runtime_error("socket closed");
    });
    JudgeGateway gw(backend, nullptr, pt::fast_gateway());
    EXPECT_THROW(gw.submit(score_request()), JudgeUnavailable);
    EXPECT_EQ(calls, 3);
}

TEST(Gateway, RateLimitBacksOffThenSucceeds) {
    std::atomic<int> calls{0};
    auto backend = std::make_shared<ScriptedBackend>([&](const JudgeRequest&) {
        return ++calls < 3 ? BackendReply{ReplyStatus::RateLimited, {}, "429"}
                           : BackendReply{ReplyStatus::Ok, R"({"score": 1})", {}};
    });
    JudgeGateway gw(backend, nullptr, pt::fast_gateway());
    EXPECT_EQ(gw.submit(score_request()).parsed["score"], 1);
    EXPECT_EQ(calls, 3);
}

TEST(Gateway, ConcurrencyBound) {
    for (std::size_t k : {1u, 3u}) {
        std::atomic<int> in_flight{0}, peak{0};
        auto backend = std::make_shared<ScriptedBackend>([&](const JudgeRequest&) {
            const int now = ++in_flight;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(3));
            --in_flight;
            return BackendReply{ReplyStatus::Ok, R"({"score": 3})", {}};
        });
        JudgeGateway gw(backend, nullptr, pt::fast_gateway(k));
        parallel_map<int>(24, 12, [&](std::size_t i) {
            return gw.submit(score_request("item " + std::to_string(i))).parsed["score"].get<int>();
        });
        EXPECT_LE(peak.load(), static_cast<int>(k));
        EXPECT_GE(peak.load(), 1);
        EXPECT_EQ(gw.backend_calls(), 24u);
    }
}

TEST(Gateway, IdenticalRequestsShareOneCall) {
    std::atomic<int> calls{0};
    auto cassette = std::make_shared<Cassette>(CassetteMode::Record);
    JudgeGateway gw(counting(calls), cassette, pt::fast_gateway());
    gw.submit(score_request());
    gw.submit(score_request());
    EXPECT_EQ(calls, 1);
    // concurrent duplicates also coalesce
    parallel_map<int>(16, 8, [&](std::size_t) { return gw.submit(score_request("same")).parsed["score"].get<int>(); });
    EXPECT_EQ(calls, 2);
}

TEST(Cassette, RecordThenReplayWithoutBackend) {
    pt::TempDir dir;
    const auto path = dir / "cassette.jsonl";
    std::atomic<int> calls{0};
    std::string recorded_hash;
    {
        JudgeGateway gw(counting(calls), Cassette::open(path, CassetteMode::Record), pt::fast_gateway());
        gw.submit(score_request("a"));
        gw.submit(score_request("b"));
        recorded_hash = gw.responses_hash();
    }
    EXPECT_EQ(text::split_lines(text::read_file(path)).size(), 2u);
    auto offline = std::make_shared<ScriptedBackend>([](const JudgeRequest&) -> BackendReply {
        ADD_FAILURE() << "replay reached the backend";
        return {ReplyStatus::Unavailable, {}, "offline"};
    });
    JudgeGateway replay(offline, Cassette::open(path, CassetteMode::Replay), pt::fast_gateway());
    EXPECT_EQ(replay.submit(score_request("b")).parsed["score"], 4);
    EXPECT_EQ(replay.submit(score_request("a")).parsed["score"], 4);
    EXPECT_EQ(replay.responses_hash(), recorded_hash);
    EXPECT_EQ(replay.backend_calls(), 0u);
    EXPECT_THROW(replay.submit(score_request("never recorded")), JudgeUnavailable);
}

TEST(Cassette, AppendsNeverOverwrites) {
    pt::TempDir dir;
    const auto path = dir / "c.jsonl";
    auto c = Cassette::open(path, CassetteMode::Record);
    c->record({"k1", "t", "first"});
    c->record({"k1", "t", "second"});
    EXPECT_EQ(c->lookup("k1"), "first");
    auto again = Cassette::open(path, CassetteMode::Record);
    again->record({"k2", "t", "other"});
    const auto lines = text::split_lines(text::read_file(path));
    EXPECT_EQ(lines.size(), 2u);
    EXPECT_NE(lines[0].find("first"), std::string::npos);
}

TEST(Cassette, ReplayNeedsExistingFile) {
    pt::TempDir dir;
    EXPECT_THROW(Cassette::open(dir / "absent.jsonl", CassetteMode::Replay), ConfigError);
    text::write_file(dir / "bad.jsonl", "{not json\n");
    EXPECT_THROW(Cassette::open(dir / "bad.jsonl", CassetteMode::Replay), ConfigError);
}

TEST(Cassette, PassthroughNeverStores) {
    Cassette c(CassetteMode::Passthrough);
    c.record({"k", "t", "x"});
    EXPECT_FALSE(c.lookup("k"));
    EXPECT_EQ(judge::parse_cassette_mode("Record"), CassetteMode::Record);
    EXPECT_THROW(judge::parse_cassette_mode("tape"), ConfigError);
}

TEST(JudgeConfig, ParseAndBackends) {
    auto c = judge::parse_judge_config(Json::parse(
        R"({"backend":"openai-chat","model":"m","base_url":"http://localhost:1","api_key_env":"PAPEREVAL_UNIT_KEY","max_in_flight":2,"retry_budget":5})"));
    EXPECT_EQ(c.http.model, "m");
    EXPECT_EQ(c.gateway.max_in_flight, 2u);
    EXPECT_EQ(c.gateway.retry_budget, 5);
    EXPECT_EQ(c.http.temperature, 0.0);
    ::unsetenv("PAPEREVAL_UNIT_KEY");
    EXPECT_THROW(judge::make_backend(c), ConfigError);
    ::setenv("PAPEREVAL_UNIT_KEY", "secret", 1);
    EXPECT_EQ(judge::make_backend(c)->id(), "openai-chat/m");
    ::unsetenv("PAPEREVAL_UNIT_KEY");

    EXPECT_THROW(judge::parse_judge_config(Json::parse(R"({"api_key":"sk-123"})")), ConfigError);
    judge::JudgeConfig bad;
    bad.backend = "mystery";
    EXPECT_THROW(judge::make_backend(bad), ConfigError);
    EXPECT_EQ(judge::make_backend({})->id(), "heuristic/1");
}

TEST(Heuristic, ScoresIdenticalTextFive) {
    JudgeRequest r = score_request();
    r.task_tag = "rubric_score";
    const std::string text = "We evaluate on 3 datasets and reach 41.5 accuracy.";
    r.payload = {{"elements", Json::array({{{"element", "e"}, {"evidence", text}}})}, {"pred_text", text}};
    auto reply = judge::HeuristicJudge().complete(r);
    ASSERT_EQ(reply.status, ReplyStatus::Ok);
    EXPECT_EQ(Json::parse(reply.text)["scores"][0]["score"], 5);

    r.payload["pred_text"] = "Unrelated prose about something else.";
    EXPECT_EQ(Json::parse(judge::HeuristicJudge().complete(r).text)["scores"][0]["score"], 1);
}

TEST(Heuristic, ClaimsAgainstReference) {
    JudgeRequest r;
    r.task_tag = "claims_extract";
    r.payload = {{"gt_text", "Our model reaches 41.5 accuracy on the test split."},
                 {"pred_text", "Our model reaches 41.5 accuracy on the test split. Our model reaches 48.0 accuracy on "
                               "the test split. We trained 7 unrelated zebras."}};
    auto claims = Json::parse(judge::HeuristicJudge().complete(r).text)["claims"];
    ASSERT_EQ(claims.size(), 3u);
    EXPECT_EQ(claims[0]["classification"], "supported");
    EXPECT_EQ(claims[1]["classification"], "contradictory");
    EXPECT_EQ(claims[2]["classification"], "neutral");
}

TEST(Heuristic, UnknownTaskIsUnavailable) {
    JudgeRequest r;
    r.task_tag = "poetry";
    EXPECT_EQ(judge::HeuristicJudge().complete(r).status, ReplyStatus::Unavailable);
}

TEST(VerifierGateway, WorksOnACopyAndRejectsWrites) {
    pt::TempDir bundle;
    text::write_file(bundle / "gt_main.tex", "\\section{A} reaches 41.5.");
    const auto before = hash_tree(bundle.path());
    fs::path seen;
    auto backend = std::make_shared<verifier::ScriptedVerifier>([&](const verifier::VerifierRequest&, const fs::path& wd) {
        seen = wd;
        EXPECT_TRUE(fs::exists(wd / "gt_main.tex"));
        std::error_code ec;
        fs::remove(wd / "gt_main.tex", ec);
        text::write_file(wd / "added.txt", "x");
        return pt::reply({{"results", Json::array({{{"classification", "neutral"}, {"severity", nullptr}}})}});
    });
    verifier::VerifierGateway gw(backend, nullptr);
    verifier::VerifierRequest req;
    req.user_prompt = "check";
    req.claim_count = 1;
    auto r = gw.run_verifier(req, bundle.path());
    EXPECT_EQ(gw.invocations(), 1u);
    EXPECT_NE(seen, bundle.path());
    EXPECT_FALSE(fs::exists(seen));
    EXPECT_EQ(hash_tree(bundle.path()), before);
    ASSERT_EQ(r.results.size(), 1u);
    ASSERT_FALSE(r.diagnostics.empty());
    EXPECT_EQ(r.diagnostics[0].code, "verifier_write_rejected");
}

TEST(VerifierGateway, FailuresAndReplay) {
    pt::TempDir bundle, dir;
    text::write_file(bundle / "gt_main.tex", "x");
    verifier::VerifierRequest req;
    req.user_prompt = "check";
    req.claim_count = 1;

    verifier::VerifierGateway down(verifier::make_verifier({{"backend", "none"}}), nullptr);
    EXPECT_THROW(down.run_verifier(req, bundle.path()), VerifierUnavailable);

    auto garbage = std::make_shared<verifier::ScriptedVerifier>(
        [](const verifier::VerifierRequest&, const fs::path&) { return BackendReply{ReplyStatus::Ok, "??", {}}; });
    EXPECT_THROW(verifier::VerifierGateway(garbage, nullptr).run_verifier(req, bundle.path()), VerifierUnavailable);

    const auto path = dir / "v.jsonl";
    auto good = std::make_shared<verifier::ScriptedVerifier>([](const verifier::VerifierRequest&, const fs::path&) {
        return pt::reply({{"results", Json::array({{{"classification", "supported"}}})}});
    });
    verifier::VerifierGateway rec(good, Cassette::open(path, CassetteMode::Record));
    rec.run_verifier(req, bundle.path());
    verifier::VerifierGateway rep(verifier::make_verifier({{"backend", "none"}}), Cassette::open(path, CassetteMode::Replay));
    EXPECT_EQ(rep.run_verifier(req, bundle.path()).results[0]["classification"], "supported");
    EXPECT_EQ(rep.invocations(), 0u);
    EXPECT_EQ(rep.responses_hash(), rec.responses_hash());
}

TEST(VerifierGateway, ProcessBackend) {
    pt::TempDir bundle;
    text::write_file(bundle / "gt_main.tex", "x");
    auto v = verifier::make_verifier(
        {{"backend", "process"},
         {"command", "/bin/sh -c 'cat >/dev/null; ls gt_main.tex >/dev/null && echo {\\\"results\\\":[]}'"}});
    verifier::VerifierGateway gw(v, nullptr);
    verifier::VerifierRequest req;
    EXPECT_TRUE(gw.run_verifier(req, bundle.path()).results.empty());
    EXPECT_THROW(verifier::make_verifier({{"backend", "telepathy"}}), ConfigError);
}
