#include "pragmabench/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include "pragmabench/templates.hpp"

namespace pragmabench::strategies {

std::string_view template_text(std::string_view name) {
    for (std::size_t i = 0; i < detail::kTemplateCount; ++i) {
        if (detail::kTemplateTable[i].name == name) {
            return detail::kTemplateTable[i].text;
        }
    }
    throw Error(Errc::Config, "unknown prompt template '" + std::string(name) + "'");
}

std::vector<std::string_view> template_names() {
    std::vector<std::string_view> names;
    names.reserve(detail::kTemplateCount);
    for (std::size_t i = 0; i < detail::kTemplateCount; ++i) {
        names.push_back(detail::kTemplateTable[i].name);
    }
    return names;
}

std::string_view strategy_token(StrategyId id) {
    switch (id) {
    case StrategyId::IO: return "io";
    case StrategyId::CoT: return "cot";
    case StrategyId::ToT: return "tot";
    case StrategyId::BoC: return "boc";
    case StrategyId::CoC: return "coc";
    case StrategyId::GoC: return "goc";
    case StrategyId::MP: return "mp";
    case StrategyId::PMP: return "pmp";
    }
    return "io";
}

std::string_view strategy_display(StrategyId id) {
    switch (id) {
    case StrategyId::IO: return "IO";
    case StrategyId::CoT: return "CoT";
    case StrategyId::ToT: return "ToT";
    case StrategyId::BoC: return "BoC";
    case StrategyId::CoC: return "CoC";
    case StrategyId::GoC: return "GoC";
    case StrategyId::MP: return "MP";
    case StrategyId::PMP: return "PMP";
    }
    return "IO";
}

StrategyId strategy_from_token(std::string_view token) {
    for (const StrategyId id : kAllStrategies) {
        if (strategy_token(id) == token) {
            return id;
        }
    }
    if (token == "toc") {
        throw Error(Errc::Config,
                    "strategy 'toc' (Tensor of Cues) requires explicit model training and is "
                    "out of scope for this prompting harness");
    }
    throw Error(Errc::Config, "unknown strategy '" + std::string(token) + "'");
}

bool is_two_stage(StrategyId id) {
    return id == StrategyId::PMP || id == StrategyId::MP;
}

bool is_registered_prompt_dataset(std::string_view dataset_id) {
    return dataset_id == "mustard" || dataset_id == "semeval2018t3" || dataset_id == "generic";
}

namespace {

std::string stage1_template_name(StrategyId id, std::string_view dataset_id) {
    if (!is_registered_prompt_dataset(dataset_id)) {
        throw Error(Errc::Config, "no registered prompt preamble for dataset '" +
                                      std::string(dataset_id) +
                                      "' (use a prompt style of mustard, semeval2018t3 or generic)");
    }
    return std::string(strategy_token(id)) + "_stage1_" + std::string(dataset_id);
}

} // namespace

std::string render_template(std::string_view template_text,
                            const std::vector<std::pair<std::string_view, std::string_view>>& values) {
    std::string out;
    out.reserve(template_text.size());
    std::size_t position = 0;
    while (position < template_text.size()) {
        const std::size_t open = template_text.find("{{", position);
        if (open == std::string_view::npos) {
            out += template_text.substr(position);
            break;
        }
        const std::size_t close = template_text.find("}}", open + 2);
        if (close == std::string_view::npos) {
            throw Error(Errc::Config, "unterminated placeholder in template");
        }
        out += template_text.substr(position, open - position);
        const std::string_view name = template_text.substr(open + 2, close - open - 2);
        const auto it = std::find_if(values.begin(), values.end(),
                                     [&](const auto& entry) { return entry.first == name; });
        if (it == values.end()) {
            throw Error(Errc::Config, "template references unknown placeholder '{{" +
                                          std::string(name) + "}}'");
        }
        out += it->second;
        position = close + 2;
    }
    return out;
}

std::string context_block(const Sample& sample) {
    if (sample.context_turns.empty()) {
        return "(no prior context)";
    }
    std::string block;
    for (std::size_t i = 0; i < sample.context_turns.size(); ++i) {
        const auto& turn = sample.context_turns[i];
        if (i > 0) {
            block += '\n';
        }
        if (!turn.speaker.empty()) {
            block += turn.speaker;
            block += ": ";
        }
        block += turn.text;
    }
    return block;
}

std::string utterance_line(const Sample& sample) {
    std::string line;
    if (sample.speaker && !sample.speaker->empty()) {
        line += *sample.speaker;
        line += ": ";
    }
    line += '[';
    line += sample.utterance;
    line += ']';
    return line;
}

namespace {

std::string render_stage1(StrategyId id, const Sample& sample, std::string_view dataset_id) {
    const std::string context = context_block(sample);
    const std::string utterance = utterance_line(sample);
    return render_template(template_text(stage1_template_name(id, dataset_id)),
                           {{"context", context}, {"utterance", utterance}});
}

std::string render_stage2(StrategyId id, std::string_view stage1_analysis) {
    if (stage1_analysis.empty()) {
        throw Error(Errc::Argument, "stage-1 analysis is empty");
    }
    const std::string name = std::string(strategy_token(id)) + "_stage2";
    return render_template(template_text(name), {{"analysis", stage1_analysis}});
}

} // namespace

std::string render_pmp_stage1(const Sample& sample, std::string_view dataset_id) {
    return render_stage1(StrategyId::PMP, sample, dataset_id);
}

std::string render_pmp_stage2(std::string_view stage1_analysis) {
    return render_stage2(StrategyId::PMP, stage1_analysis);
}

std::string render_mp_stage1(const Sample& sample, std::string_view dataset_id) {
    return render_stage1(StrategyId::MP, sample, dataset_id);
}

std::string render_mp_stage2(std::string_view stage1_analysis) {
    return render_stage2(StrategyId::MP, stage1_analysis);
}

std::string render_baseline(StrategyId id, const Sample& sample, std::string_view dataset_id) {
    if (is_two_stage(id)) {
        throw Error(Errc::Argument, "render_baseline called with two-stage strategy '" +
                                        std::string(strategy_token(id)) + "'");
    }
    if (!is_registered_prompt_dataset(dataset_id)) {
        throw Error(Errc::Config, "no registered prompt preamble for dataset '" +
                                      std::string(dataset_id) +
                                      "' (use a prompt style of mustard, semeval2018t3 or generic)");
    }
    const std::string context = context_block(sample);
    const std::string utterance = utterance_line(sample);
    return render_template(template_text(strategy_token(id)),
                           {{"context", context}, {"utterance", utterance}});
}

PromptBundle render_bundle(StrategyId id, const Sample& sample, std::string_view dataset_id) {
    PromptBundle bundle;
    if (is_two_stage(id)) {
        bundle.stage1 = render_stage1(id, sample, dataset_id);
        bundle.stage2 = std::string(template_text(std::string(strategy_token(id)) + "_stage2"));
    } else {
        bundle.stage1 = render_baseline(id, sample, dataset_id);
    }
    return bundle;
}

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t end = text.find('\n', begin);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        lines.push_back(text.substr(begin, end - begin));
        if (end == text.size()) {
            break;
        }
        begin = end + 1;
    }
    return lines;
}

} // namespace

Verdict parse_verdict(std::string_view final_text) {
    const std::vector<std::string_view> lines = split_lines(final_text);

    // Rule 1: last line carrying the requested "VERDICT:" marker.
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        const std::string line = lowercase(*it);
        if (line.find("verdict:") == std::string::npos) {
            continue;
        }
        if (line.find("not sarcastic") != std::string::npos) {
            return Verdict::decided(Label::NotSarcastic);
        }
        if (line.find("sarcastic") != std::string::npos) {
            return Verdict::decided(Label::Sarcastic);
        }
        break; // marker present but undecidable; fall through to rule 2
    }

    // Rule 2: scan the last 3 non-empty lines, negation first.
    std::string window;
    int taken = 0;
    for (auto it = lines.rbegin(); it != lines.rend() && taken < 3; ++it) {
        if (is_blank(*it)) {
            continue;
        }
        window += lowercase(*it);
        window += '\n';
        ++taken;
    }
    if (window.find("not sarcastic") != std::string::npos ||
        window.find("non-sarcastic") != std::string::npos) {
        return Verdict::decided(Label::NotSarcastic);
    }
    if (window.find("sarcastic") != std::string::npos ||
        window.find("ironic") != std::string::npos) {
        return Verdict::decided(Label::Sarcastic);
    }

    return Verdict::unparseable(std::string(final_text));
}

namespace {

void validate_execution_config(const ExecutionConfig& config) {
    if (config.model.empty()) {
        throw Error(Errc::Config, "execution config has no model");
    }
    if (config.temperature < 0.0) {
        throw Error(Errc::Config, "temperature must be >= 0");
    }
    if (config.stage1_max_tokens <= 0 || config.stage2_max_tokens <= 0) {
        throw Error(Errc::Config, "max_tokens must be positive");
    }
    if (!is_registered_prompt_dataset(config.prompt_dataset)) {
        throw Error(Errc::Config, "no registered prompt preamble for dataset '" +
                                      config.prompt_dataset +
                                      "' (use a prompt style of mustard, semeval2018t3 or generic)");
    }
}

llm::CompletionRequest make_request(const ExecutionConfig& config, std::string prompt,
                                    int max_tokens) {
    llm::CompletionRequest request;
    request.provider_id = config.provider_id;
    request.model = config.model;
    request.temperature = config.temperature;
    request.max_tokens = max_tokens;
    request.messages.push_back(llm::ChatMessage{llm::Role::User, std::move(prompt)});
    return request;
}

void append_sample_tag(std::string& prompt, const ExecutionConfig& config,
                       const Sample& sample) {
    if (config.embed_sample_tag) {
        prompt += "\n\n[[sample:" + sample.id + "]]";
    }
}

} // namespace

PredictionRecord execute_strategy(StrategyId id, const Sample& sample,
                                  llm::CompletionClient& client,
                                  const ExecutionConfig& config) {
    validate_execution_config(config);

    PredictionRecord record;
    record.sample_id = sample.id;
    record.strategy = id;
    record.model = config.model;

    const auto started = std::chrono::steady_clock::now();
    try {
        if (is_two_stage(id)) {
            std::string stage1_prompt = id == StrategyId::PMP
                                            ? render_pmp_stage1(sample, config.prompt_dataset)
                                            : render_mp_stage1(sample, config.prompt_dataset);
            append_sample_tag(stage1_prompt, config, sample);
            const llm::CompletionResponse stage1 =
                client.complete(make_request(config, stage1_prompt, config.stage1_max_tokens));
            record.stage_transcripts.push_back(StageTranscript{std::move(stage1_prompt), stage1.text});
            record.cached_stages.push_back(stage1.from_cache);

            if (stage1.text.empty()) {
                record.error = "empty stage-1 response";
                record.verdict = Verdict::unparseable("");
            } else {
                std::string stage2_prompt = id == StrategyId::PMP
                                                ? render_pmp_stage2(stage1.text)
                                                : render_mp_stage2(stage1.text);
                append_sample_tag(stage2_prompt, config, sample);
                const llm::CompletionResponse stage2 =
                    client.complete(make_request(config, stage2_prompt, config.stage2_max_tokens));
                record.stage_transcripts.push_back(
                    StageTranscript{std::move(stage2_prompt), stage2.text});
                record.cached_stages.push_back(stage2.from_cache);
                record.verdict = parse_verdict(stage2.text);
            }
        } else {
            std::string prompt = render_baseline(id, sample, config.prompt_dataset);
            append_sample_tag(prompt, config, sample);
            const llm::CompletionResponse response =
                client.complete(make_request(config, prompt, config.stage1_max_tokens));
            record.stage_transcripts.push_back(StageTranscript{std::move(prompt), response.text});
            record.cached_stages.push_back(response.from_cache);
            record.verdict = parse_verdict(response.text);
        }
    } catch (const ProviderError& e) {
        if (e.klass() == ProviderErrorClass::AuthError) {
            throw; // aborts the run
        }
        record.error = std::string(to_string(e.klass())) + ": " + e.what();
        record.verdict = Verdict::unparseable("");
    }
    record.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    return record;
}

} // namespace pragmabench::strategies
