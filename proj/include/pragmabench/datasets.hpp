#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pragmabench/domain.hpp"

namespace pragmabench::datasets {

struct Dataset {
    std::string id;
    std::vector<Sample> samples;
    std::string source_path;
    std::map<Label, std::size_t> counts_by_label;

    std::size_t size() const { return samples.size(); }
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> duplicate_ids;
    std::vector<std::string> empty_utterance_ids;
    std::map<Label, std::size_t> balance;
};

// Builds a Dataset from samples, computing counts_by_label.
Dataset make_dataset(std::string id, std::vector<Sample> samples, std::string source_path);

// Loads the MUStARD release format: a single JSON object keyed by utterance
// id, each entry holding "utterance", "speaker", parallel "context" /
// "context_speakers" lists and a boolean "sarcasm" flag. Samples are ordered
// by key. Throws Error(Format) naming the offending key.
Dataset load_mustard(const std::filesystem::path& path);

// Loads the SemEval-2018 Task 3 taskA format: UTF-8 tab-separated with a
// header row and columns (tweet index, label in {0,1}, tweet text = rest of
// line). Throws Error(Format) naming the offending line number.
Dataset load_semeval(const std::filesystem::path& path);

// Normalized interchange format: UTF-8, one JSON record per line with the
// Sample field names; gold serialized as "sarcastic"/"not_sarcastic".
Dataset load_interchange(const std::filesystem::path& path);
Dataset parse_interchange(std::string_view text, std::string_view source_path);
std::string interchange_serialize(const Dataset& dataset);
void save_interchange(const Dataset& dataset, const std::filesystem::path& path);

// Routes by extension: .json -> MUStARD, .txt/.tsv -> SemEval,
// .jsonl/.ndjson -> interchange.
Dataset load_auto(const std::filesystem::path& path);

// Report-only checks: duplicate ids, empty utterances, class balance.
ValidationReport validate(const Dataset& dataset);

// Deterministic pseudo-random subset of exactly `limit` samples; the subset
// is returned in source order. Throws Error(Argument) when limit is 0 or
// exceeds the dataset size.
Dataset subsample(const Dataset& dataset, std::size_t limit, std::uint64_t seed);

// Deterministic balanced synthetic dataset used by mock-mode runs and tests.
// Even indices are Sarcastic, so any even n is perfectly balanced.
Dataset make_synthetic(std::string id, std::size_t n);

} // namespace pragmabench::datasets
