#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <random>

#include "fixtures.hpp"
#include "papereval/claims.hpp"
#include "papereval/text_util.hpp"

using namespace papereval;
namespace pt = papereval::testing;
using align::Category;
using claims::Claim;
using claims::Severity;
using claims::Verdict;

namespace {

Claim make_claim(Category section, std::size_t ordinal, Verdict v, Severity s = Severity::None) {
    Claim c;
    c.section = section;
    c.ordinal = ordinal;
    c.text = "claim " + std::to_string(ordinal) + " in " + align::id_name(section);
    c.classification = v;
    c.severity = v == Verdict::Contradictory ? s : Severity::None;
    c.evidence = "evidence " + std::to_string(ordinal);
    return c;
}

Json result(const std::string& verdict, const std::string& severity = "none") {
    return {{"classification", verdict}, {"severity", severity}, {"evidence", "checked"}};
}

bool has_code(const Diagnostics& d, const std::string& code) {
    return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.code == code; });
}

struct Bundle {
    pt::TempDir dir;
    Bundle() { text::write_file(dir / "gt_main.tex", "\\section{Method}\nx\n"); }
};

/// Verifier that records each request and answers with `make(request)`.
struct CountingVerifier {
    std::atomic<int> calls{0};
    std::vector<std::size_t> counts;
    std::function<Json(const verifier::VerifierRequest&)> make;

    std::unique_ptr<verifier::VerifierGateway> gateway() {
        return std::make_unique<verifier::VerifierGateway>(std::make_shared<verifier::ScriptedVerifier>(
            [this](const verifier::VerifierRequest& r, const fs::path&) {
                ++calls;
                counts.push_back(r.claim_count);
                return pt::reply(make(r));
            }),
            nullptr);
    }
};

}  // namespace

TEST(ClaimsExtract, ParsesJudgeReply) {
    std::string prompt;
    auto judges = pt::scripted_judges([&](const judge::JudgeRequest& r) {
        prompt = r.user_prompt;
        return pt::reply({{"claims", Json::array({{{"claim", "A"}, {"classification", "supported"}, {"evidence", "e"}},
                                                  {{"claim", "B"}, {"classification", "contradictory"}, {"severity", "Minor"}},
                                                  {{"claim", "C"}, {"classification", "neutral"}, {"severity", "major"}}})}});
    });
    Diagnostics diags;
    auto out = claims::extract_claims(Category::Experiment, "PRED BODY", "GT BODY", *judges.judge, diags);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].classification, Verdict::Supported);
    EXPECT_EQ(out[1].severity, Severity::Minor);
    // severity only sticks to contradictory claims
    EXPECT_EQ(out[2].severity, Severity::None);
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_EQ(out[i].ordinal, i);
        EXPECT_EQ(out[i].stage, claims::Stage::Extracted);
    }
    EXPECT_NE(prompt.find("PRED BODY"), std::string::npos);
    EXPECT_NE(prompt.find("GT BODY"), std::string::npos);
}

TEST(ClaimsExtract, SkipsConclusionAndEmptySections) {
    std::atomic<int> calls{0};
    auto judges = pt::scripted_judges([&](const judge::JudgeRequest&) {
        ++calls;
        return pt::reply({{"claims", Json::array()}});
    });
    Diagnostics diags;
    EXPECT_TRUE(claims::extract_claims(Category::Conclusion, "text", "gt", *judges.judge, diags).empty());
    EXPECT_TRUE(claims::extract_claims(Category::Method, " \n", "gt", *judges.judge, diags).empty());
    EXPECT_EQ(calls, 0);
}

TEST(ClaimsExtract, ContradictionWithoutSeverityIsRetriedThenDropped) {
    std::atomic<int> calls{0};
    std::string last_prompt;
    auto judges = pt::scripted_judges([&](const judge::JudgeRequest& r) {
        ++calls;
        last_prompt = r.user_prompt;
        return pt::reply({{"claims", Json::array({{{"claim", "B"}, {"classification", "contradictory"}}})}});
    });
    Diagnostics diags;
    EXPECT_TRUE(claims::extract_claims(Category::Method, "text", "gt", *judges.judge, diags).empty());
    EXPECT_GT(calls, 1);
    EXPECT_NE(last_prompt.find("rejected"), std::string::npos);
    EXPECT_TRUE(has_code(diags, "claims_extraction_failed"));
}

TEST(ClaimsVerify, NoFlaggedClaimsMeansNoCall) {
    Bundle b;
    CountingVerifier v;
    v.make = [](const verifier::VerifierRequest&) { return Json{{"results", Json::array()}}; };
    auto gw = v.gateway();
    std::vector<Claim> in = {make_claim(Category::Method, 0, Verdict::Supported),
                             make_claim(Category::Method, 1, Verdict::Neutral)};
    auto out = claims::verify_claims(in, b.dir.path(), *gw);
    EXPECT_EQ(v.calls, 0);
    EXPECT_EQ(out.claims, in);
    EXPECT_FALSE(out.unverified);
    EXPECT_TRUE(claims::verify_claims({}, b.dir.path(), *gw).claims.empty());
    EXPECT_EQ(v.calls, 0);
}

TEST(ClaimsVerify, OneCallWhateverTheFlaggedCount) {
    Bundle b;
    for (std::size_t flagged : {1u, 40u}) {
        CountingVerifier v;
        v.make = [](const verifier::VerifierRequest& r) {
            Json arr = Json::array();
            for (std::size_t i = 0; i < r.claim_count; ++i) arr.push_back(result("contradictory", "major"));
            return Json{{"results", arr}};
        };
        auto gw = v.gateway();
        std::vector<Claim> in;
        for (std::size_t i = 0; i < flagged; ++i) {
            in.push_back(make_claim(Category::Experiment, 2 * i, Verdict::Contradictory, Severity::Minor));
            in.push_back(make_claim(Category::Experiment, 2 * i + 1, Verdict::Supported));
        }
        auto out = claims::verify_claims(in, b.dir.path(), *gw);
        EXPECT_EQ(v.calls, 1);
        EXPECT_EQ(v.counts, (std::vector<std::size_t>{flagged}));
        ASSERT_EQ(out.claims.size(), in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            if (in[i].classification != Verdict::Contradictory) {
                EXPECT_EQ(out.claims[i], in[i]);
            } else {
                EXPECT_EQ(out.claims[i].stage, claims::Stage::Verified);
                EXPECT_TRUE(out.claims[i].escalated);
            }
        }
        EXPECT_EQ(claims::tally(out.claims).escalations, flagged);
    }
}

TEST(ClaimsVerify, RequestListsFlaggedClaimsOnly) {
    Bundle b;
    std::string prompt;
    CountingVerifier v;
    v.make = [&](const verifier::VerifierRequest& r) {
        prompt = r.user_prompt;
        return Json{{"results", Json::array({result("supported")})}};
    };
    auto gw = v.gateway();
    auto flagged = make_claim(Category::Method, 3, Verdict::Contradictory, Severity::Major);
    flagged.text = "FLAGGED-TEXT";
    auto ok = make_claim(Category::Method, 4, Verdict::Supported);
    ok.text = "SUPPORTED-TEXT";
    auto out = claims::verify_claims({ok, flagged}, b.dir.path(), *gw);
    EXPECT_NE(prompt.find("FLAGGED-TEXT"), std::string::npos);
    EXPECT_EQ(prompt.find("SUPPORTED-TEXT"), std::string::npos);
    EXPECT_EQ(out.claims[1].classification, Verdict::Supported);
    EXPECT_EQ(out.claims[1].severity, Severity::None);
}

TEST(ClaimsVerify, OmittedResultsKeepStageOneVerdict) {
    Bundle b;
    CountingVerifier v;
    v.make = [](const verifier::VerifierRequest&) { return Json{{"results", Json::array({result("neutral")})}}; };
    auto gw = v.gateway();
    std::vector<Claim> in = {make_claim(Category::Method, 0, Verdict::Contradictory, Severity::Major),
                             make_claim(Category::Method, 1, Verdict::Contradictory, Severity::Minor)};
    auto out = claims::verify_claims(in, b.dir.path(), *gw);
    EXPECT_EQ(out.claims[0].classification, Verdict::Neutral);
    EXPECT_EQ(out.claims[1], in[1]);
    EXPECT_TRUE(has_code(out.diagnostics, "verifier_missing_result"));
}

TEST(ClaimsVerify, ConfirmationWithoutSeverityKeepsOriginal) {
    Bundle b;
    CountingVerifier v;
    v.make = [](const verifier::VerifierRequest&) {
        return Json{{"results", Json::array({{{"classification", "contradictory"}}})}};
    };
    auto gw = v.gateway();
    auto out = claims::verify_claims({make_claim(Category::Method, 0, Verdict::Contradictory, Severity::Minor)},
                                     b.dir.path(), *gw);
    EXPECT_EQ(out.claims[0].severity, Severity::Minor);
    EXPECT_FALSE(out.claims[0].escalated);
    EXPECT_TRUE(has_code(out.diagnostics, "verifier_severity_missing"));
}

TEST(ClaimsVerify, UnavailableVerifierMarksReportUnverified) {
    Bundle b;
    auto judges = pt::scripted_judges([](const judge::JudgeRequest&) { return pt::reply({}); });
    std::vector<Claim> in = {make_claim(Category::Method, 0, Verdict::Contradictory, Severity::Major)};
    auto out = claims::verify_claims(in, b.dir.path(), *judges.verifier);
    EXPECT_TRUE(out.unverified);
    EXPECT_EQ(out.claims, in);
    EXPECT_TRUE(has_code(out.diagnostics, "verifier_unavailable"));
    EXPECT_TRUE(claims::tally(out.claims, out.unverified).unverified);
}

TEST(ClaimsTally, CountsAndDocument) {
    std::vector<Claim> in = {make_claim(Category::Method, 0, Verdict::Supported),
                             make_claim(Category::Method, 1, Verdict::Contradictory, Severity::Major),
                             make_claim(Category::Experiment, 0, Verdict::Contradictory, Severity::Minor),
                             make_claim(Category::Experiment, 1, Verdict::Neutral)};
    auto rep = claims::tally(in);
    EXPECT_EQ(rep.total, (claims::Counts{1, 1, 1, 1}));
    EXPECT_EQ(rep.headline, 1u);
    EXPECT_EQ(rep.per_section.at(Category::Method), (claims::Counts{1, 0, 1, 0}));
    auto doc = claims::claims_document(in, rep);
    EXPECT_EQ(doc["schema"], "claims/1");
    EXPECT_EQ(doc["stage1"].size(), 4u);
    EXPECT_EQ(doc["counts"]["total"]["major"], 1);
    EXPECT_EQ(doc["counts"]["per_section"]["Experiment"]["minor"], 1);
    EXPECT_EQ(doc["verified"][1]["severity"], "major");
}

TEST(ClaimsProperty, VerificationConservesClaims) {
    Bundle b;
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> verdict(0, 2), sev(0, 1), len(0, 30), sect(0, 5), answer(0, 4);
    const std::vector<std::string> answers = {"supported", "neutral", "contradictory"};
    for (int round = 0; round < 200; ++round) {
        std::vector<Claim> in;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            const auto v = static_cast<Verdict>(verdict(rng));
            in.push_back(make_claim(align::kScoredCategories[sect(rng)], i, v, sev(rng) ? Severity::Major : Severity::Minor));
        }
        CountingVerifier v;
        v.make = [&](const verifier::VerifierRequest& r) {
            Json arr = Json::array();
            // sometimes short by one to exercise omission
            std::size_t give = r.claim_count > 0 && answer(rng) == 0 ? r.claim_count - 1 : r.claim_count;
            for (std::size_t i = 0; i < give; ++i) {
                const int a = answer(rng) % 3;
                arr.push_back(result(answers[a], a == 2 ? (sev(rng) ? "major" : "minor") : "none"));
            }
            return Json{{"results", arr}};
        };
        auto gw = v.gateway();
        auto out = claims::verify_claims(in, b.dir.path(), *gw);
        const auto flagged = std::count_if(in.begin(), in.end(),
                                           [](const Claim& c) { return c.classification == Verdict::Contradictory; });
        EXPECT_EQ(v.calls, flagged > 0 ? 1 : 0);
        ASSERT_EQ(out.claims.size(), in.size());
        std::size_t escalated = 0;
        for (std::size_t i = 0; i < in.size(); ++i) {
            EXPECT_EQ(out.claims[i].section, in[i].section);
            EXPECT_EQ(out.claims[i].ordinal, in[i].ordinal);
            if (in[i].classification != Verdict::Contradictory) EXPECT_EQ(out.claims[i], in[i]);
            if (out.claims[i].classification != Verdict::Contradictory) EXPECT_EQ(out.claims[i].severity, Severity::None);
            if (in[i].severity == Severity::Minor && out.claims[i].severity == Severity::Major) ++escalated;
        }
        auto rep = claims::tally(out.claims);
        const auto& t = rep.total;
        EXPECT_EQ(t.supported + t.neutral + t.major + t.minor, in.size());
        claims::Counts summed;
        for (const auto& [_, c] : rep.per_section) {
            summed.supported += c.supported;
            summed.neutral += c.neutral;
            summed.major += c.major;
            summed.minor += c.minor;
        }
        EXPECT_EQ(summed, t);
        EXPECT_EQ(rep.headline, t.major);
        EXPECT_EQ(rep.escalations, escalated);
    }
}

TEST(ClaimsVerify, ReplayFromCassetteSkipsBackend) {
    Bundle b;
    pt::TempDir dir;
    auto cassette = judge::Cassette::open(dir / "cassette.jsonl", judge::CassetteMode::Record);
    std::atomic<int> calls{0};
    auto backend = std::make_shared<verifier::ScriptedVerifier>([&](const verifier::VerifierRequest&, const fs::path&) {
        ++calls;
        return pt::reply({{"results", Json::array({result("contradictory", "major")})}});
    });
    std::vector<Claim> in = {make_claim(Category::Method, 0, Verdict::Contradictory, Severity::Minor)};
    verifier::VerifierGateway recorder(backend, cassette);
    auto first = claims::verify_claims(in, b.dir.path(), recorder);
    auto replay = judge::Cassette::open(dir / "cassette.jsonl", judge::CassetteMode::Replay);
    verifier::VerifierGateway replayer(backend, replay);
    auto second = claims::verify_claims(in, b.dir.path(), replayer);
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(first.claims, second.claims);
}
