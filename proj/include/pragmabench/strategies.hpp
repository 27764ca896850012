#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pragmabench/domain.hpp"
#include "pragmabench/llm.hpp"

namespace pragmabench::strategies {

// Closed set of prompting strategies. PMP and MP are two-stage (analysis
// call followed by a reflection call); everything else is a single call.
enum class StrategyId {
    IO,
    CoT,
    ToT,
    BoC,
    CoC,
    GoC,
    MP,
    PMP,
};

inline constexpr StrategyId kAllStrategies[] = {
    StrategyId::IO, StrategyId::CoT, StrategyId::ToT, StrategyId::BoC,
    StrategyId::CoC, StrategyId::GoC, StrategyId::MP, StrategyId::PMP,
};

std::string_view strategy_token(StrategyId id);   // lowercase: "pmp", "cot", ...
std::string_view strategy_display(StrategyId id); // table form: "PMP", "CoT", ...
StrategyId strategy_from_token(std::string_view token); // throws Error(Config)

bool is_two_stage(StrategyId id);

struct PromptBundle {
    std::string stage1;
    // Present only for two-stage strategies; keeps the {{analysis}} slot.
    std::optional<std::string> stage2;
    std::optional<std::string> system_preamble;
};

struct StageTranscript {
    std::string prompt;
    std::string response;
};

struct PredictionRecord {
    std::string sample_id;
    StrategyId strategy = StrategyId::IO;
    std::string model;
    std::vector<StageTranscript> stage_transcripts;
    Verdict verdict = Verdict::unparseable("");
    std::vector<bool> cached_stages;
    std::int64_t elapsed_ms = 0;
    std::optional<std::string> error;
};

// True for dataset ids that have registered prompt preambles
// ("mustard", "semeval2018t3", "generic").
bool is_registered_prompt_dataset(std::string_view dataset_id);

// Substitutes {{placeholders}} in a template. Placeholder names outside the
// provided set throw Error(Config); substituted values pass through
// byte-for-byte and are never rescanned.
std::string render_template(std::string_view template_text,
                            const std::vector<std::pair<std::string_view, std::string_view>>& values);

// Serialized context block: one "SPEAKER: text" line per turn in source
// order, or "(no prior context)" when there are none.
std::string context_block(const Sample& sample);

// Target statement line: "SPEAKER: [utterance]", brackets marking the
// statement to analyze; the speaker prefix is omitted when unknown.
std::string utterance_line(const Sample& sample);

// Stage-1 prompt of Pragmatic Metacognitive Prompting: dataset preamble,
// context, bracketed statement, and the six pragmatic factors. Deterministic;
// equal inputs yield byte-identical output.
std::string render_pmp_stage1(const Sample& sample, std::string_view dataset_id);

// Stage-2 prompt: embeds the stage-1 analysis verbatim, then the reflection
// instruction and the fixed verdict-format line. Throws Error(Argument) on an
// empty analysis.
std::string render_pmp_stage2(std::string_view stage1_analysis);

// Plain metacognitive prompting, reconstructed for ablation against PMP.
std::string render_mp_stage1(const Sample& sample, std::string_view dataset_id);
std::string render_mp_stage2(std::string_view stage1_analysis);

// Single-call strategies (IO, CoT, ToT, BoC, CoC, GoC). Throws
// Error(Argument) when called with PMP or MP.
std::string render_baseline(StrategyId id, const Sample& sample, std::string_view dataset_id);

// All stage templates for a strategy with the sample substituted into
// stage 1; stage 2 keeps its {{analysis}} slot.
PromptBundle render_bundle(StrategyId id, const Sample& sample, std::string_view dataset_id);

// Deterministic, total extraction of the binary verdict from free-form
// model output:
//   1. the last line containing "VERDICT:" wins; "NOT SARCASTIC" is checked
//      before "SARCASTIC" (case-insensitive);
//   2. otherwise the last 3 non-empty lines are scanned for
//      "not sarcastic"/"non-sarcastic" before "sarcastic"/"ironic";
//   3. otherwise Unparseable, carrying the raw text.
Verdict parse_verdict(std::string_view final_text);

struct ExecutionConfig {
    std::string provider_id;
    std::string model;
    double temperature = 0.0;
    int stage1_max_tokens = 1024;
    int stage2_max_tokens = 512;
    // Dataset id used for template selection (may differ from the evaluated
    // dataset when a prompt style override is in effect).
    std::string prompt_dataset;
    // When set, every prompt gets a trailing "[[sample:<id>]]" line so
    // scripted mocks can look up the gold label. Enabled for mock providers.
    bool embed_sample_tag = false;
};

// Runs one sample through the strategy: two sequential completion calls for
// PMP/MP (the second embedding the first's full response verbatim), one call
// otherwise. Provider failures after retries produce a record with `error`
// set and an unparseable verdict; AuthError propagates and aborts the run.
// Configuration problems throw Error(Config) before any call.
PredictionRecord execute_strategy(StrategyId id, const Sample& sample,
                                  llm::CompletionClient& client,
                                  const ExecutionConfig& config);

} // namespace pragmabench::strategies
