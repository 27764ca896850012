#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "pragmabench/domain.hpp"
#include "pragmabench/llm.hpp"

namespace pragmabench::llm {

// Deterministic offline provider. Three script modes:
//   EchoGold   — reads the "[[sample:<id>]]" tag the runner embeds in mock
//                mode and answers with the sample's gold verdict line;
//   FixedLabel — always answers the configured label;
//   ByDigest   — maps request canonical digests to scripted response text.
struct MockScript {
    enum class Mode { EchoGold, FixedLabel, ByDigest };

    Mode mode = Mode::FixedLabel;
    Label fixed_label = Label::Sarcastic;
    std::map<std::string, Label> golds;
    std::map<std::string, std::string> responses_by_digest;

    static MockScript echo_gold(std::map<std::string, Label> golds);
    static MockScript fixed(Label label);
    static MockScript by_digest(std::map<std::string, std::string> responses);

    // Loads a ByDigest script from a JSON object file {digest: response}.
    static MockScript by_digest_file(const std::filesystem::path& path);
};

class MockClient : public CompletionClient {
public:
    explicit MockClient(MockScript script);

    CompletionResponse complete(const CompletionRequest& request) override;

    // Total provider calls served, across threads.
    std::int64_t call_count() const { return calls_.load(); }

private:
    MockScript script_;
    std::atomic<std::int64_t> calls_{0};
};

// Gold verdict line for a label: "VERDICT: SARCASTIC" / "VERDICT: NOT SARCASTIC".
std::string verdict_line(Label label);

} // namespace pragmabench::llm
