#include "pragmabench/mock_client.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pragmabench::llm {

using nlohmann::json;

MockScript MockScript::echo_gold(std::map<std::string, Label> golds) {
    MockScript script;
    script.mode = Mode::EchoGold;
    script.golds = std::move(golds);
    return script;
}

MockScript MockScript::fixed(Label label) {
    MockScript script;
    script.mode = Mode::FixedLabel;
    script.fixed_label = label;
    return script;
}

MockScript MockScript::by_digest(std::map<std::string, std::string> responses) {
    MockScript script;
    script.mode = Mode::ByDigest;
    script.responses_by_digest = std::move(responses);
    return script;
}

MockScript MockScript::by_digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::Io, "cannot open mock script '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json root;
    try {
        root = json::parse(buffer.str());
    } catch (const json::exception& e) {
        throw Error(Errc::Script, path.string() + ": not valid JSON: " + e.what());
    }
    if (!root.is_object()) {
        throw Error(Errc::Script, path.string() + ": expected an object of digest -> response");
    }
    std::map<std::string, std::string> responses;
    for (auto it = root.begin(); it != root.end(); ++it) {
        responses[it.key()] = it.value().get<std::string>();
    }
    return by_digest(std::move(responses));
}

std::string verdict_line(Label label) {
    return label == Label::Sarcastic ? "VERDICT: SARCASTIC" : "VERDICT: NOT SARCASTIC";
}

MockClient::MockClient(MockScript script) : script_(std::move(script)) {}

namespace {

// Extracts <id> from the last "[[sample:<id>]]" tag in the prompt.
std::string extract_sample_tag(const std::string& prompt) {
    const std::string open = "[[sample:";
    const std::size_t start = prompt.rfind(open);
    if (start == std::string::npos) {
        throw Error(Errc::Script,
                    "echo-gold mock needs a [[sample:<id>]] tag in the prompt and found none");
    }
    const std::size_t end = prompt.find("]]", start + open.size());
    if (end == std::string::npos) {
        throw Error(Errc::Script, "unterminated [[sample:<id>]] tag in prompt");
    }
    return prompt.substr(start + open.size(), end - start - open.size());
}

} // namespace

CompletionResponse MockClient::complete(const CompletionRequest& request) {
    validate_request(request);
    calls_.fetch_add(1);

    CompletionResponse response;
    response.provider_meta["provider"] = "mock";

    switch (script_.mode) {
    case MockScript::Mode::FixedLabel:
        response.text = verdict_line(script_.fixed_label);
        break;
    case MockScript::Mode::EchoGold: {
        const std::string id = extract_sample_tag(request.messages.back().content);
        const auto it = script_.golds.find(id);
        if (it == script_.golds.end()) {
            throw Error(Errc::Script, "echo-gold mock has no gold label for sample '" + id + "'");
        }
        response.text = verdict_line(it->second);
        break;
    }
    case MockScript::Mode::ByDigest: {
        const std::string digest = canonical_digest(request);
        const auto it = script_.responses_by_digest.find(digest);
        if (it == script_.responses_by_digest.end()) {
            throw Error(Errc::Script, "mock script has no response for digest " + digest);
        }
        response.text = it->second;
        break;
    }
    }
    return response;
}

} // namespace pragmabench::llm
