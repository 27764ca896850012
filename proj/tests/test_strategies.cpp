#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "pragmabench/datasets.hpp"
#include "pragmabench/mock_client.hpp"
#include "pragmabench/strategies.hpp"
#include "pragmabench/templates.hpp"

using namespace pragmabench;
using namespace pragmabench::strategies;
namespace fs = std::filesystem;

namespace {

const fs::path kRepo = PRAGMABENCH_REPO_DIR;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Sample mustard_sample() {
    const auto dataset = datasets::load_mustard(kRepo / "fixtures" / "mustard_mini.json");
    return dataset.samples[0]; // 1_60, the bracketed-statement example
}

Sample irony_tweet() {
    const auto dataset = datasets::load_semeval(kRepo / "fixtures" / "semeval_mini.txt");
    return dataset.samples[2]; // "... Oh, the #irony!"
}

Sample bare_sample(std::string utterance) {
    Sample sample;
    sample.id = "t1";
    sample.dataset_id = "semeval2018t3";
    sample.utterance = std::move(utterance);
    sample.gold = Label::Sarcastic;
    return sample;
}

// Test client that replies from a queue-free script function.
class ScriptedClient : public llm::CompletionClient {
public:
    explicit ScriptedClient(std::function<std::string(const llm::CompletionRequest&)> fn)
        : fn_(std::move(fn)) {}

    llm::CompletionResponse complete(const llm::CompletionRequest& request) override {
        llm::validate_request(request);
        ++calls_;
        llm::CompletionResponse response;
        response.text = fn_(request);
        return response;
    }

    int calls() const { return calls_; }

private:
    std::function<std::string(const llm::CompletionRequest&)> fn_;
    int calls_ = 0;
};

ExecutionConfig mock_config(std::string prompt_dataset = "semeval2018t3") {
    ExecutionConfig config;
    config.provider_id = "mock";
    config.model = "mock-model";
    config.prompt_dataset = std::move(prompt_dataset);
    return config;
}

const char* kFactorLines[] = {
    "The Implicature – What is implied in the conversation beyond the literal meaning?",
    "The Presuppositions – What information in the conversation is taken for granted?",
    "The Intent of the Speaker – What do the speaker(s) hope to achieve with their statement, "
    "and who are the speakers?",
    "The Polarity – Does the last sentence have a positive or negative tone?",
    "Pretense – Is there pretense in the speaker's attitude?",
    "Meaning – What is the difference between the literal and implied meaning of the statement?",
};

} // namespace

TEST_CASE("strategy tokens round-trip and toc is rejected with context") {
    for (const StrategyId id : kAllStrategies) {
        CHECK(strategy_from_token(strategy_token(id)) == id);
    }
    CHECK_THROWS_WITH_AS(strategy_from_token("toc"),
                         doctest::Contains("out of scope"), Error);
    CHECK_THROWS_AS(strategy_from_token("zap"), Error);
    CHECK(is_two_stage(StrategyId::PMP));
    CHECK(is_two_stage(StrategyId::MP));
    CHECK_FALSE(is_two_stage(StrategyId::GoC));
}

TEST_CASE("PMP stage-1 render matches the byte snapshot for MUStARD") {
    const std::string rendered = render_pmp_stage1(mustard_sample(), "mustard");
    CHECK(rendered == read_file(kRepo / "tests" / "snapshots" / "pmp_stage1_mustard.snap.txt"));
}

TEST_CASE("PMP stage-1 render matches the byte snapshot for SemEval") {
    const std::string rendered = render_pmp_stage1(irony_tweet(), "semeval2018t3");
    CHECK(rendered == read_file(kRepo / "tests" / "snapshots" / "pmp_stage1_semeval.snap.txt"));
}

TEST_CASE("PMP stage-1 carries the six pragmatic factor lines verbatim") {
    for (const char* dataset_id : {"mustard", "semeval2018t3", "generic"}) {
        const std::string rendered = render_pmp_stage1(mustard_sample(), dataset_id);
        for (const char* line : kFactorLines) {
            CHECK_MESSAGE(rendered.find(line) != std::string::npos,
                          "missing factor line in ", dataset_id, ": ", line);
        }
    }
    const std::string mustard = render_pmp_stage1(mustard_sample(), "mustard");
    CHECK(mustard.find("Summarize the conversation, and repeat back the statement to analyze.") !=
          std::string::npos);
}

TEST_CASE("PMP stage-1 context handling") {
    SUBCASE("empty context falls back to the fixed marker") {
        const std::string rendered = render_pmp_stage1(bare_sample("hello"), "semeval2018t3");
        CHECK(rendered.find("(no prior context)") != std::string::npos);
    }
    SUBCASE("the utterance appears verbatim between brackets") {
        const std::string rendered = render_pmp_stage1(bare_sample("Oh, the #irony!"),
                                                       "semeval2018t3");
        CHECK(rendered.find("[Oh, the #irony!]") != std::string::npos);
    }
    SUBCASE("context turns render as speaker-prefixed lines in source order") {
        const std::string rendered = render_pmp_stage1(mustard_sample(), "mustard");
        const auto leonard = rendered.find("LEONARD: I never would have identified");
        const auto sheldon = rendered.find("SHELDON: My apologies.");
        const auto target = rendered.find("SHELDON: [It's just a privilege");
        REQUIRE(leonard != std::string::npos);
        REQUIRE(sheldon != std::string::npos);
        REQUIRE(target != std::string::npos);
        CHECK(leonard < sheldon);
        CHECK(sheldon < target);
    }
    SUBCASE("unregistered dataset id is a config error") {
        CHECK_THROWS_AS(render_pmp_stage1(bare_sample("x"), "sarcasmv1"), Error);
    }
    SUBCASE("rendering is pure") {
        CHECK(render_pmp_stage1(mustard_sample(), "mustard") ==
              render_pmp_stage1(mustard_sample(), "mustard"));
    }
}

TEST_CASE("PMP stage-2 embeds the analysis and the reflection instruction") {
    const std::string rendered = render_pmp_stage2("A");
    CHECK(rendered ==
          read_file(kRepo / "tests" / "snapshots" / "pmp_stage2.snap.txt"));
    CHECK(rendered.find("Reflect on the preliminary analysis and what should change, then decide "
                        "if the statement is sarcastic.") != std::string::npos);
    CHECK(rendered.find("VERDICT: SARCASTIC") != std::string::npos);

    SUBCASE("bracket characters pass through unescaped") {
        const std::string weird = "contains ] and [ and {{braces}}";
        CHECK(render_pmp_stage2(weird).find(weird) != std::string::npos);
    }
    SUBCASE("deterministic") {
        CHECK(render_pmp_stage2("same") == render_pmp_stage2("same"));
    }
    SUBCASE("empty analysis is rejected") {
        CHECK_THROWS_AS(render_pmp_stage2(""), Error);
        CHECK_THROWS_AS(render_mp_stage2(""), Error);
    }
}

TEST_CASE("baseline renders carry their anchor phrases") {
    const Sample sample = irony_tweet();
    const std::string boc = render_baseline(StrategyId::BoC, sample, "semeval2018t3");
    CHECK(boc.find("based on the presence of the following cues") != std::string::npos);
    CHECK(boc.find("Rhetorical devices (e.g., irony, hyperbole, or understatement)") !=
          std::string::npos);
    CHECK(boc == read_file(kRepo / "tests" / "snapshots" / "boc_semeval.snap.txt"));

    const std::string coc = render_baseline(StrategyId::CoC, sample, "semeval2018t3");
    CHECK(coc.find("Analyze the statement step-by-step") != std::string::npos);

    const std::string goc = render_baseline(StrategyId::GoC, sample, "semeval2018t3");
    CHECK(goc.find("Construct a graph where:") != std::string::npos);
    CHECK(goc.find("Nodes represent sarcasm cues") != std::string::npos);

    const std::string io = render_baseline(StrategyId::IO, sample, "semeval2018t3");
    CHECK(io.find("[" + sample.utterance + "]") != std::string::npos);
    CHECK(io.find("End your answer with one line: \"VERDICT: SARCASTIC\" or "
                  "\"VERDICT: NOT SARCASTIC\".") != std::string::npos);

    SUBCASE("two-stage strategies are the wrong renderer") {
        CHECK_THROWS_AS(render_baseline(StrategyId::PMP, sample, "semeval2018t3"), Error);
        CHECK_THROWS_AS(render_baseline(StrategyId::MP, sample, "semeval2018t3"), Error);
    }
}

TEST_CASE("prompt bundles expose stage 2 only for two-stage strategies") {
    const Sample sample = bare_sample("x");
    for (const StrategyId id : kAllStrategies) {
        const PromptBundle bundle = render_bundle(id, sample, "semeval2018t3");
        CHECK(!bundle.stage1.empty());
        CHECK(bundle.stage2.has_value() == is_two_stage(id));
        if (bundle.stage2) {
            CHECK(bundle.stage2->find("{{analysis}}") != std::string::npos);
        }
    }
}

TEST_CASE("render_template rejects unknown placeholders but passes values through") {
    CHECK(render_template("a {{x}} b", {{"x", "[1]"}}) == "a [1] b");
    // Substituted values are not rescanned.
    CHECK(render_template("{{x}}", {{"x", "{{x}}"}}) == "{{x}}");
    CHECK_THROWS_AS(render_template("{{unknown}}", {{"x", "1"}}), Error);
    CHECK_THROWS_AS(render_template("{{open", {{"open", "1"}}), Error);
}

TEST_CASE("parse_verdict follows the documented rules") {
    SUBCASE("rule 1: explicit marker") {
        CHECK(parse_verdict("reasoning...\nVERDICT: SARCASTIC").label() == Label::Sarcastic);
        CHECK(parse_verdict("reasoning...\nVERDICT: NOT SARCASTIC").label() ==
              Label::NotSarcastic);
    }
    SUBCASE("rule 1: last marker wins") {
        const std::string text = "VERDICT: SARCASTIC\nOn reflection that was wrong.\n"
                                 "VERDICT: NOT SARCASTIC";
        CHECK(parse_verdict(text).label() == Label::NotSarcastic);
    }
    SUBCASE("rule 1 is case-insensitive") {
        CHECK(parse_verdict("verdict: sarcastic").label() == Label::Sarcastic);
        CHECK(parse_verdict("Verdict: Not Sarcastic").label() == Label::NotSarcastic);
    }
    SUBCASE("rule 2: negation has precedence") {
        CHECK(parse_verdict("Therefore, the statement is not sarcastic.").label() ==
              Label::NotSarcastic);
        CHECK(parse_verdict("It reads sarcastic at first, but it is not sarcastic.").label() ==
              Label::NotSarcastic);
        CHECK(parse_verdict("The tweet is non-sarcastic.").label() == Label::NotSarcastic);
    }
    SUBCASE("rule 2: positive cues") {
        CHECK(parse_verdict("The statement is sarcastic.").label() == Label::Sarcastic);
        CHECK(parse_verdict("This is clearly ironic.").label() == Label::Sarcastic);
    }
    SUBCASE("rule 2 only scans the last three non-empty lines") {
        const std::string text = "clearly sarcastic\nfiller one\nfiller two\nfiller three";
        CHECK_FALSE(parse_verdict(text).is_decided());
    }
    SUBCASE("rule 3: unparseable keeps the raw text") {
        const Verdict verdict = parse_verdict("I cannot determine this.");
        CHECK_FALSE(verdict.is_decided());
        CHECK(verdict.raw_text() == "I cannot determine this.");
        CHECK_FALSE(parse_verdict("").is_decided());
    }
    SUBCASE("no sarcasm token means unparseable") {
        CHECK_FALSE(parse_verdict("The weather is nice today.").is_decided());
    }
    SUBCASE("fuzzing never throws") {
        std::mt19937_64 rng(23);
        for (int i = 0; i < 2000; ++i) {
            std::string text;
            const std::size_t length = rng() % 200;
            for (std::size_t j = 0; j < length; ++j) {
                text.push_back(static_cast<char>(rng() % 256));
            }
            CHECK_NOTHROW(parse_verdict(text));
        }
    }
}

TEST_CASE("execute_strategy call structure") {
    const Sample sample = bare_sample("hello there");

    SUBCASE("two calls for PMP, feeding stage 1 forward verbatim") {
        ScriptedClient client([](const llm::CompletionRequest& request) {
            return request.messages.back().content.find("Preliminary analysis:") !=
                           std::string::npos
                       ? "VERDICT: SARCASTIC"
                       : "XYZ analysis";
        });
        const PredictionRecord record =
            execute_strategy(StrategyId::PMP, sample, client, mock_config());
        REQUIRE(record.stage_transcripts.size() == 2);
        CHECK(client.calls() == 2);
        CHECK(record.stage_transcripts[1].prompt.find("XYZ analysis") != std::string::npos);
        CHECK(record.verdict.label() == Label::Sarcastic);
        CHECK(record.cached_stages == std::vector<bool>{false, false});
        CHECK_FALSE(record.error.has_value());
    }
    SUBCASE("one call for single-stage strategies") {
        for (const StrategyId id : {StrategyId::IO, StrategyId::CoT, StrategyId::ToT,
                                    StrategyId::BoC, StrategyId::CoC, StrategyId::GoC}) {
            ScriptedClient client([](const llm::CompletionRequest&) {
                return std::string("VERDICT: NOT SARCASTIC");
            });
            const PredictionRecord record = execute_strategy(id, sample, client, mock_config());
            CHECK(record.stage_transcripts.size() == 1);
            CHECK(client.calls() == 1);
            CHECK(record.verdict.label() == Label::NotSarcastic);
        }
    }
    SUBCASE("provider failure becomes an error record and does not throw") {
        class FailingClient : public llm::CompletionClient {
        public:
            llm::CompletionResponse complete(const llm::CompletionRequest&) override {
                throw ProviderError(ProviderErrorClass::Transient, "boom");
            }
        } client;
        const PredictionRecord record =
            execute_strategy(StrategyId::IO, sample, client, mock_config());
        REQUIRE(record.error.has_value());
        CHECK(record.error->find("boom") != std::string::npos);
        CHECK_FALSE(record.verdict.is_decided());
    }
    SUBCASE("auth errors propagate and abort") {
        class AuthFailClient : public llm::CompletionClient {
        public:
            llm::CompletionResponse complete(const llm::CompletionRequest&) override {
                throw ProviderError(ProviderErrorClass::AuthError, "bad key");
            }
        } client;
        CHECK_THROWS_AS(execute_strategy(StrategyId::IO, sample, client, mock_config()),
                        ProviderError);
    }
    SUBCASE("invalid config fails before any call") {
        ScriptedClient client([](const llm::CompletionRequest&) { return std::string("x"); });
        ExecutionConfig config = mock_config();
        config.model.clear();
        CHECK_THROWS_AS(execute_strategy(StrategyId::IO, sample, client, config), Error);
        config = mock_config("sarcasmv1");
        CHECK_THROWS_AS(execute_strategy(StrategyId::PMP, sample, client, config), Error);
        CHECK(client.calls() == 0);
    }
    SUBCASE("empty stage-1 response short-circuits stage 2") {
        ScriptedClient client([](const llm::CompletionRequest&) { return std::string(); });
        const PredictionRecord record =
            execute_strategy(StrategyId::PMP, sample, client, mock_config());
        CHECK(client.calls() == 1);
        REQUIRE(record.error.has_value());
        CHECK_FALSE(record.verdict.is_decided());
    }
    SUBCASE("sample tag is embedded only when enabled") {
        ScriptedClient client([](const llm::CompletionRequest&) {
            return std::string("VERDICT: SARCASTIC");
        });
        ExecutionConfig tagged = mock_config();
        tagged.embed_sample_tag = true;
        const PredictionRecord with_tag =
            execute_strategy(StrategyId::IO, sample, client, tagged);
        CHECK(with_tag.stage_transcripts[0].prompt.find("[[sample:t1]]") != std::string::npos);

        const PredictionRecord without_tag =
            execute_strategy(StrategyId::IO, sample, client, mock_config());
        CHECK(without_tag.stage_transcripts[0].prompt.find("[[sample:") == std::string::npos);
    }
}

TEST_CASE("echo-gold mock answers each sample's gold label through the tag") {
    const auto dataset = datasets::make_synthetic("semeval2018t3", 10);
    std::map<std::string, Label> golds;
    for (const auto& sample : dataset.samples) {
        golds[sample.id] = sample.gold;
    }
    llm::MockClient client(llm::MockScript::echo_gold(golds));
    ExecutionConfig config = mock_config();
    config.embed_sample_tag = true;
    for (const auto& sample : dataset.samples) {
        const PredictionRecord record =
            execute_strategy(StrategyId::PMP, sample, client, config);
        REQUIRE(record.verdict.is_decided());
        CHECK(record.verdict.label() == sample.gold);
    }
}

TEST_CASE("call-count and feed-forward invariants hold under randomized responses") {
    std::mt19937_64 rng(31);
    auto random_text = [&rng]() {
        std::string text;
        const std::size_t length = rng() % 120 + 1;
        for (std::size_t i = 0; i < length; ++i) {
            const char c = static_cast<char>(rng() % 95 + 32);
            text.push_back(c);
        }
        if (rng() % 4 == 0) {
            text += "\nVERDICT: SARCASTIC";
        }
        return text;
    };
    for (int trial = 0; trial < 64; ++trial) {
        const StrategyId id = kAllStrategies[rng() % 8];
        Sample sample = bare_sample("utterance " + std::to_string(trial));
        ScriptedClient client([&](const llm::CompletionRequest&) { return random_text(); });
        const PredictionRecord record = execute_strategy(id, sample, client, mock_config());
        if (record.error) {
            continue; // empty stage-1 draw
        }
        CHECK(record.stage_transcripts.size() == (is_two_stage(id) ? 2 : 1));
        if (is_two_stage(id)) {
            CHECK(record.stage_transcripts[1].prompt.find(
                      record.stage_transcripts[0].response) != std::string::npos);
        }
    }
}

TEST_CASE("embedded templates match the checked-in template files") {
    for (const auto name : template_names()) {
        const fs::path file = kRepo / "templates" / (std::string(name) + ".txt");
        CHECK_MESSAGE(template_text(name) == read_file(file), "template drift: ", name);
    }
    CHECK_THROWS_AS(template_text("nonexistent"), Error);
}
