// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "solsentry/backend.hpp"
#include "solsentry/parser.hpp"
#include "solsentry/rulegen.hpp"
#include "solsentry/util.hpp"
#include "test_support.hpp"

using namespace solsentry;
using namespace solsentry::rulegen;
namespace st = solsentry::testing;

namespace {

std::vector<corpus::LabeledInstance> class_instances(const std::string& swe)
{
    static const auto all = corpus::load_corpus(st::corpus_dir());
    std::vector<corpus::LabeledInstance> out;
    for (const auto& i : all) {
        if (i.swe_id == swe) out.push_back(i);
    }
    return out;
}

const std::string kGood161 =
    "(node.nodeType == \"UnaryOperation\" && node.subExpression.memberName == \"length\") || "
    "(node.nodeType == \"Assignment\" && node.leftHandSide.memberName == \"length\")";

class FailingBackend : public LlmBackend {
public:
    explicit FailingBackend(int failures, std::string answer = "node.a == 1")
        : failures_(failures), answer_(std::move(answer))
    {
    }
    std::string complete(const CompletionRequest&) override
    {
        ++transport_;
        if (failures_-- > 0) throw BackendUnavailable("down");
        ++calls_;
        return answer_;
    }
    std::string name() const override { return "failing"; }
    int transport_ = 0;

private:
    int failures_;
    std::string answer_;
};

} // namespace

TEST(Gate, BoundaryIsInclusive)
{
    EXPECT_EQ(gate(0.80, 0.80), Decision::Accepted);
    EXPECT_EQ(gate(std::nextafter(0.80, 0.0), 0.80), Decision::Rejected);
    EXPECT_EQ(gate(30.0 / 38.0, 0.80), Decision::Rejected);
    EXPECT_EQ(gate(31.0 / 38.0, 0.80), Decision::Accepted);
    EXPECT_EQ(gate(1.0, 0.80), Decision::Accepted);
    EXPECT_EQ(gate(0.0, 0.80), Decision::Rejected);
}

TEST(Gate, ConfigValidation)
{
    GenerationConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.max_attempts, 5);
    EXPECT_EQ(c.hyperparameters.epochs, 3);
    EXPECT_EQ(c.hyperparameters.batch_size, 1);
    EXPECT_EQ(c.hyperparameters.learning_rate_multiplier, 2);
    c.max_attempts = 0;
    EXPECT_THROW(c.validate(), Error);
    c.max_attempts = 1;
    c.acceptance_threshold = 0;
    EXPECT_THROW(c.validate(), Error);
    c.acceptance_threshold = 1.5;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Extract, Responses)
{
    EXPECT_EQ(extract_condition("```solidity\nnode.a == 1\n```"), "node.a == 1");
    EXPECT_EQ(extract_condition("Here is the condition:\n```\nif (node.a == 1) {\n```\nThat should work well."),
              "node.a == 1");
    EXPECT_EQ(extract_condition("return node.a === 1;"), "node.a == 1");
    EXPECT_EQ(extract_condition("node.a !== 1"), "node.a != 1");
    EXPECT_EQ(extract_condition("((node.a == 1))"), "node.a == 1");
    EXPECT_EQ(extract_condition("(node.a == 1) && (node.b == 2)"), "(node.a == 1) && (node.b == 2)");
    EXPECT_EQ(extract_condition("node.name == \"a===b\""), "node.name == \"a===b\"");
    EXPECT_EQ(extract_condition("node.a == 1 &&\n  node.b == 2"), "node.a == 1 && node.b == 2");
    EXPECT_THROW(extract_condition("I cannot determine a condition."), EmptyResponse);
    EXPECT_THROW(extract_condition(""), EmptyResponse);
    EXPECT_THROW(extract_condition("```\n```"), EmptyResponse);
}

TEST(Validate, ExpectedConditionPassesGate)
{
    auto inst = class_instances("SWE-161");
    auto r = validate_candidate(kGood161, inst, 0.80);
    EXPECT_EQ(r.verdicts.size(), inst.size());
    EXPECT_EQ(r.correct, inst.size());
    EXPECT_EQ(r.decision, Decision::Accepted);
    EXPECT_FALSE(r.error);
}

TEST(Validate, SyntaxErrorIsRejectedWithReason)
{
    auto inst = class_instances("SWE-161");
    auto r = validate_candidate("node.leftHandSide.memberName ==", inst, 0.80);
    EXPECT_EQ(r.decision, Decision::Rejected);
    ASSERT_TRUE(r.error);
    const std::string text = format_report_text(r);
    EXPECT_NE(text.find("error:"), std::string::npos);
    EXPECT_EQ(text.find("miss"), std::string::npos);
}

TEST(Validate, NeverFiringRuleScoresHalf)
{
    auto inst = class_instances("SWE-140");
    auto r = validate_candidate("node.nodeType == \"NoSuchNode\"", inst, 0.80);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
    EXPECT_EQ(r.decision, Decision::Rejected);
    auto j = report_json(r);
    EXPECT_EQ(j["decision"], "rejected");
}

TEST(Loop, ScriptedFixtureIntegratesOnThirdAttempt)
{
    st::TempDir dir;
    rules::RuleStore store(dir / "rules");
    Registry registry = builtin_registry();
    FixtureBackend backend(st::fixture("llm/swe161_scripted"));
    GenerationConfig config;
    auto inst = class_instances("SWE-161");
    auto result = run_loop(config, backend, "SWE-161", inst, registry, store, "corpus");

    ASSERT_TRUE(result.integrated);
    EXPECT_EQ(result.attempts, 3u);
    EXPECT_EQ(backend.calls(), 3u);
    ASSERT_EQ(result.reports.size(), 3u);
    EXPECT_EQ(result.reports[0].decision, Decision::Rejected);
    EXPECT_EQ(result.reports[0].correct, 19u);
    EXPECT_TRUE(result.reports[1].error);
    EXPECT_EQ(result.reports[2].decision, Decision::Accepted);
    EXPECT_DOUBLE_EQ(result.reports[2].accuracy, 1.0);

    ASSERT_TRUE(result.rule);
    EXPECT_EQ(result.rule->rule_id, default_rule_id("SWE-161", result.rule->condition_text));
    EXPECT_EQ(result.rule->origin_label, "generated");
    EXPECT_EQ(result.rule->created_from.template_id, prompt_template(TemplateId::Prcbi).name);
    EXPECT_EQ(result.rule->created_from.instance_set, "corpus");

    auto stored = store.load();
    ASSERT_EQ(stored.size(), 1u);
    EXPECT_EQ(stored[0].rule_id, result.rule->rule_id);
    EXPECT_DOUBLE_EQ(stored[0].acceptance_accuracy, 1.0);

    const auto* d = registry.find(result.rule->rule_id);
    ASSERT_NE(d, nullptr);
    EXPECT_EQ(d->origin, Origin::Generated);

    auto unit = parse_source(read_file(st::fixture("swe161_dec.sol")), "swe161_dec.sol");
    std::size_t generated = 0;
    for (const auto& f : scan(unit, registry)) {
        if (f.origin == Origin::Generated) {
            ++generated;
            EXPECT_EQ(f.detector_id, result.rule->rule_id);
        }
    }
    EXPECT_EQ(generated, 1u);

    // A fresh registry picks the rule up from the store.
    Registry again = builtin_registry();
    store.load_into(again);
    EXPECT_TRUE(again.contains(result.rule->rule_id));
}

TEST(Loop, ExhaustionLeavesStoreUntouched)
{
    st::TempDir dir;
    rules::RuleStore store(dir / "rules");
    Registry registry = builtin_registry();
    FixtureBackend backend(st::fixture("llm/all_bad"));
    GenerationConfig config;
    auto result = run_loop(config, backend, "SWE-161", class_instances("SWE-161"), registry, store);
    EXPECT_FALSE(result.integrated);
    EXPECT_EQ(result.attempts, 5u);
    EXPECT_EQ(result.reports.size(), 5u);
    EXPECT_TRUE(store.load().empty());
    EXPECT_EQ(registry.size(), builtin_registry().size());
}

TEST(Loop, EmptyResponseCountsAsAttempt)
{
    st::TempDir dir;
    rules::RuleStore store(dir / "rules");
    Registry registry;
    FixtureBackend backend(std::vector<std::string>{"   ", "Sorry, no idea.", kGood161});
    GenerationConfig config;
    config.max_attempts = 3;
    auto result = run_loop(config, backend, "SWE-161", class_instances("SWE-161"), registry, store);
    EXPECT_TRUE(result.integrated);
    EXPECT_EQ(result.attempts, 3u);
    EXPECT_TRUE(result.reports[0].error);
    EXPECT_TRUE(result.reports[1].error);

    FixtureBackend short_script(std::vector<std::string>{"", ""});
    config.max_attempts = 2;
    auto none = run_loop(config, short_script, "SWE-161", class_instances("SWE-161"), registry, store);
    EXPECT_FALSE(none.integrated);
    EXPECT_EQ(none.attempts, 2u);
}

TEST(Loop, BackendUnavailablePropagates)
{
    st::TempDir dir;
    rules::RuleStore store(dir / "rules");
    Registry registry;
    FixtureBackend backend(std::vector<std::string>{"node.a == 1"});
    GenerationConfig config;
    EXPECT_THROW(run_loop(config, backend, "SWE-161", class_instances("SWE-161"), registry, store),
                 BackendUnavailable);
    EXPECT_TRUE(store.load().empty());
}

TEST(Integrate, RejectedAndDuplicate)
{
    st::TempDir dir;
    rules::RuleStore store(dir / "rules");
    Registry registry;
    auto inst = class_instances("SWE-161");
    auto bad = validate_candidate("node.nodeType == \"Nothing\"", inst, 0.80);
    EXPECT_THROW(integrate(bad, "r1", "SWE-161", {}, registry, store), RejectedCandidate);
    auto good = validate_candidate(kGood161, inst, 0.80);
    auto d = integrate(good, "r1", "SWE-161", {"P_rcbi", "x"}, registry, store);
    EXPECT_EQ(d.detector_id, "r1");
    EXPECT_THROW(integrate(good, "r1", "SWE-161", {}, registry, store), DuplicateDetectorId);
    EXPECT_EQ(store.load().size(), 1u);
}

TEST(Backend, FixtureMapModeByPromptHash)
{
    st::TempDir dir;
    std::filesystem::create_directories(dir / "responses");
    GenerationConfig config;
    auto inst = class_instances("SWE-161");
    const auto hash = prompt_hash(generation_prompt(config, inst));
    EXPECT_EQ(hash.size(), 64u);
    std::ofstream(dir / "responses" / (hash + ".txt")) << "```\n" << kGood161 << "\n```\n";
    FixtureBackend backend(dir.path());
    EXPECT_EQ(generate_candidate(config, backend, inst), kGood161);
    config.template_id = TemplateId::Pb;
    EXPECT_THROW(generate_candidate(config, backend, inst), BackendUnavailable);
    EXPECT_EQ(backend.calls(), 1u);
}

TEST(Backend, FixtureDirectoryMustHaveContent)
{
    st::TempDir dir;
    EXPECT_THROW(FixtureBackend(dir.path()), Error);
}

TEST(Backend, RetryBacksOffAndCountsOnce)
{
    std::vector<std::chrono::milliseconds> sleeps;
    auto inner = std::make_unique<FailingBackend>(2);
    auto* raw = inner.get();
    RetryingBackend retrying(std::move(inner), 3, std::chrono::milliseconds(100),
                             [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    EXPECT_EQ(retrying.complete({}), "node.a == 1");
    EXPECT_EQ(retrying.calls(), 1u);
    EXPECT_EQ(raw->transport_, 3);
    EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100),
                                                              std::chrono::milliseconds(200)}));

    RetryingBackend give_up(std::make_unique<FailingBackend>(10), 2, std::chrono::milliseconds(1),
                            [](std::chrono::milliseconds) {});
    EXPECT_THROW(give_up.complete({}), BackendUnavailable);
    EXPECT_EQ(give_up.calls(), 0u);
}

TEST(Backend, ChatWireFormat)
{
    CompletionRequest req{{{"system", "s"}, {"user", "u"}}, "gpt-4o-mini-2024-07-18", 7};
    EXPECT_EQ(chat_request_body(req), R"({"model":"gpt-4o-mini-2024-07-18","messages":[{"role":"system","content":"s"},)"
                                      R"({"role":"user","content":"u"}],"temperature":0,"seed":7})");
    EXPECT_EQ(chat_response_content(R"({"choices":[{"message":{"role":"assistant","content":"x == 1"}}]})"), "x == 1");
    EXPECT_THROW(chat_response_content(R"({"choices":[]})"), EmptyResponse);
    EXPECT_THROW(chat_response_content(R"({"choices":[{"message":{"content":"  "}}]})"), EmptyResponse);
    EXPECT_THROW(chat_response_content("<html>"), EmptyResponse);
    EXPECT_EQ(redact("Bearer sk-123 and sk-123", "sk-123"), "Bearer [REDACTED] and [REDACTED]");
    EXPECT_EQ(redact("nothing", ""), "nothing");
}

TEST(Backend, LiveBackendAgainstLoopbackServer)
{
    httplib::Server server;
    std::string seen_auth;
    std::string seen_body;
    int hits = 0;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        seen_auth = req.get_header_value("Authorization");
        seen_body = req.body;
        if (hits == 1) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"node.a == 1"}}]})",
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    std::ostringstream log;
    LiveBackendOptions opts;
    opts.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    opts.model = "gpt-3.5-turbo-1106";
    opts.api_key = "sk-secret";
    opts.timeout = std::chrono::seconds(5);
    opts.log = &log;
    auto live = std::make_unique<LiveBackend>(opts);
    RetryingBackend backend(std::move(live), 2, std::chrono::milliseconds(1), [](std::chrono::milliseconds) {});
    CompletionRequest req{{{"user", "hi"}}, "", 0};
    EXPECT_EQ(backend.complete(req), "node.a == 1");
    server.stop();
    worker.join();

    EXPECT_EQ(hits, 2);
    EXPECT_EQ(seen_auth, "Bearer sk-secret");
    EXPECT_NE(seen_body.find("\"model\":\"gpt-3.5-turbo-1106\""), std::string::npos);
    EXPECT_EQ(log.str().find("sk-secret"), std::string::npos);
    EXPECT_NE(log.str().find("HTTP 503"), std::string::npos);
}

TEST(Backend, LiveBackendNeedsEndpoint)
{
    EXPECT_THROW(LiveBackend(LiveBackendOptions{}), BackendUnavailable);
}

TEST(RuleId, Deterministic)
{
    const auto id = default_rule_id("SWE-161", kGood161);
    EXPECT_EQ(id, default_rule_id("SWE-161", kGood161));
    EXPECT_EQ(id.rfind("gen-swe-161-", 0), 0u);
    EXPECT_EQ(id.size(), std::string("gen-swe-161-").size() + 10);
    EXPECT_TRUE(rules::valid_rule_id(id));
    EXPECT_NE(id, default_rule_id("SWE-161", kGood161 + " "));
}
