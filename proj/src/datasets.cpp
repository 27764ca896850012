#include "pragmabench/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace pragmabench::datasets {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::Io, "cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string trimmed(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return std::string(text.substr(begin, end - begin));
}

void check_sample(const Sample& sample, const std::string& where) {
    if (trimmed(sample.utterance).empty()) {
        throw Error(Errc::Format, where + ": empty utterance");
    }
}

json sample_to_json(const Sample& sample) {
    json turns = json::array();
    for (const auto& turn : sample.context_turns) {
        turns.push_back({{"speaker", turn.speaker}, {"text", turn.text}});
    }
    json record = {
        {"id", sample.id},
        {"dataset_id", sample.dataset_id},
        {"utterance", sample.utterance},
        {"context_turns", std::move(turns)},
        {"gold", std::string(label_token(sample.gold))},
    };
    if (sample.speaker) {
        record["speaker"] = *sample.speaker;
    }
    return record;
}

Sample sample_from_json(const json& record, const std::string& where) {
    for (const char* field : {"id", "dataset_id", "utterance", "context_turns", "gold"}) {
        if (!record.contains(field)) {
            throw Error(Errc::Format, where + ": missing field '" + field + "'");
        }
    }
    Sample sample;
    sample.id = record.at("id").get<std::string>();
    sample.dataset_id = record.at("dataset_id").get<std::string>();
    sample.utterance = record.at("utterance").get<std::string>();
    for (const auto& turn : record.at("context_turns")) {
        sample.context_turns.push_back(ContextTurn{turn.at("speaker").get<std::string>(),
                                                   turn.at("text").get<std::string>()});
    }
    if (record.contains("speaker") && !record.at("speaker").is_null()) {
        sample.speaker = record.at("speaker").get<std::string>();
    }
    sample.gold = label_from_token(record.at("gold").get<std::string>());
    check_sample(sample, where);
    return sample;
}

} // namespace

Dataset make_dataset(std::string id, std::vector<Sample> samples, std::string source_path) {
    Dataset dataset;
    dataset.id = std::move(id);
    dataset.samples = std::move(samples);
    dataset.source_path = std::move(source_path);
    dataset.counts_by_label[Label::Sarcastic] = 0;
    dataset.counts_by_label[Label::NotSarcastic] = 0;
    for (const auto& sample : dataset.samples) {
        dataset.counts_by_label[sample.gold]++;
    }
    return dataset;
}

Dataset load_mustard(const std::filesystem::path& path) {
    json root;
    try {
        root = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::Format, path.string() + ": not valid JSON: " + e.what());
    }
    if (!root.is_object()) {
        throw Error(Errc::Format, path.string() + ": expected a top-level JSON object");
    }

    std::vector<std::string> keys;
    keys.reserve(root.size());
    for (auto it = root.begin(); it != root.end(); ++it) {
        keys.push_back(it.key());
    }
    std::sort(keys.begin(), keys.end());

    std::vector<Sample> samples;
    samples.reserve(keys.size());
    for (const auto& key : keys) {
        const json& entry = root.at(key);
        const std::string where = "key '" + key + "'";
        if (!entry.is_object()) {
            throw Error(Errc::Format, where + ": expected an object");
        }
        for (const char* field : {"utterance", "speaker", "context", "context_speakers", "sarcasm"}) {
            if (!entry.contains(field)) {
                throw Error(Errc::Format, where + ": missing field '" + field + "'");
            }
        }
        if (!entry.at("sarcasm").is_boolean()) {
            throw Error(Errc::Format, where + ": 'sarcasm' must be a boolean");
        }
        const json& context = entry.at("context");
        const json& context_speakers = entry.at("context_speakers");
        if (!context.is_array() || !context_speakers.is_array()) {
            throw Error(Errc::Format, where + ": 'context' and 'context_speakers' must be lists");
        }
        if (context.size() != context_speakers.size()) {
            throw Error(Errc::Format, where + ": context has " + std::to_string(context.size()) +
                                          " texts but " + std::to_string(context_speakers.size()) +
                                          " speakers");
        }

        Sample sample;
        sample.id = key;
        sample.dataset_id = "mustard";
        sample.utterance = entry.at("utterance").get<std::string>();
        sample.speaker = entry.at("speaker").get<std::string>();
        for (std::size_t i = 0; i < context.size(); ++i) {
            sample.context_turns.push_back(ContextTurn{context_speakers[i].get<std::string>(),
                                                       context[i].get<std::string>()});
        }
        sample.gold = entry.at("sarcasm").get<bool>() ? Label::Sarcastic : Label::NotSarcastic;
        check_sample(sample, where);
        samples.push_back(std::move(sample));
    }
    return make_dataset("mustard", std::move(samples), path.string());
}

Dataset load_semeval(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::Io, "cannot open '" + path.string() + "'");
    }

    std::vector<Sample> samples;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_number == 1) {
            continue; // header
        }
        if (trimmed(line).empty()) {
            continue;
        }
        const std::string where = "line " + std::to_string(line_number);

        const std::size_t first_tab = line.find('\t');
        if (first_tab == std::string::npos) {
            throw Error(Errc::Format, where + ": expected 3 tab-separated columns");
        }
        const std::size_t second_tab = line.find('\t', first_tab + 1);
        if (second_tab == std::string::npos) {
            throw Error(Errc::Format, where + ": expected 3 tab-separated columns");
        }

        const std::string index_field = line.substr(0, first_tab);
        const std::string label_field = line.substr(first_tab + 1, second_tab - first_tab - 1);
        const std::string text = line.substr(second_tab + 1);

        if (index_field.empty() ||
            !std::all_of(index_field.begin(), index_field.end(),
                         [](unsigned char c) { return std::isdigit(c); })) {
            throw Error(Errc::Format, where + ": tweet index '" + index_field + "' is not an integer");
        }
        if (label_field != "0" && label_field != "1") {
            throw Error(Errc::Format, where + ": label '" + label_field + "' is not 0 or 1");
        }

        Sample sample;
        sample.id = index_field;
        sample.dataset_id = "semeval2018t3";
        sample.utterance = text; // verbatim, hashtags and all
        sample.gold = label_field == "1" ? Label::Sarcastic : Label::NotSarcastic;
        check_sample(sample, where);
        samples.push_back(std::move(sample));
    }
    return make_dataset("semeval2018t3", std::move(samples), path.string());
}

Dataset parse_interchange(std::string_view text, std::string_view source_path) {
    std::vector<Sample> samples;
    std::string dataset_id;
    std::size_t line_number = 0;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t end = text.find('\n', begin);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(begin, end - begin);
        begin = end + 1;
        ++line_number;
        if (trimmed(line).empty()) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        const std::string where = "line " + std::to_string(line_number);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(Errc::Format, where + ": not valid JSON: " + e.what());
        }
        Sample sample = sample_from_json(record, where);
        if (dataset_id.empty()) {
            dataset_id = sample.dataset_id;
        } else if (sample.dataset_id != dataset_id) {
            throw Error(Errc::Format, where + ": dataset_id '" + sample.dataset_id +
                                          "' differs from '" + dataset_id + "'");
        }
        samples.push_back(std::move(sample));
        if (end == text.size()) {
            break;
        }
    }
    return make_dataset(std::move(dataset_id), std::move(samples), std::string(source_path));
}

Dataset load_interchange(const std::filesystem::path& path) {
    return parse_interchange(read_file(path), path.string());
}

std::string interchange_serialize(const Dataset& dataset) {
    std::string out;
    for (const auto& sample : dataset.samples) {
        out += sample_to_json(sample).dump();
        out += '\n';
    }
    return out;
}

void save_interchange(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::Io, "cannot write '" + path.string() + "'");
    }
    out << interchange_serialize(dataset);
}

Dataset load_auto(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".json") {
        return load_mustard(path);
    }
    if (ext == ".txt" || ext == ".tsv") {
        return load_semeval(path);
    }
    if (ext == ".jsonl" || ext == ".ndjson") {
        return load_interchange(path);
    }
    throw Error(Errc::Config, "cannot infer dataset format from extension '" + ext +
                                  "' (expected .json, .txt, .tsv or .jsonl)");
}

ValidationReport validate(const Dataset& dataset) {
    ValidationReport report;
    report.balance[Label::Sarcastic] = 0;
    report.balance[Label::NotSarcastic] = 0;

    std::map<std::string, std::size_t> seen;
    for (const auto& sample : dataset.samples) {
        report.balance[sample.gold]++;
        if (++seen[sample.id] == 2) {
            report.duplicate_ids.push_back(sample.id);
        }
        if (trimmed(sample.utterance).empty()) {
            report.empty_utterance_ids.push_back(sample.id);
        }
    }
    std::sort(report.duplicate_ids.begin(), report.duplicate_ids.end());
    report.ok = report.duplicate_ids.empty() && report.empty_utterance_ids.empty();
    return report;
}

Dataset subsample(const Dataset& dataset, std::size_t limit, std::uint64_t seed) {
    if (limit == 0 || limit > dataset.samples.size()) {
        throw Error(Errc::Argument, "subsample limit " + std::to_string(limit) +
                                        " out of range (dataset has " +
                                        std::to_string(dataset.samples.size()) + " samples)");
    }
    std::vector<std::size_t> indices(dataset.samples.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        indices[i] = i;
    }
    // Partial Fisher-Yates without std::uniform_int_distribution so the
    // subset is identical across standard library implementations.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < limit; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (indices.size() - i));
        std::swap(indices[i], indices[j]);
    }
    indices.resize(limit);
    std::sort(indices.begin(), indices.end());

    std::vector<Sample> samples;
    samples.reserve(limit);
    for (const std::size_t index : indices) {
        samples.push_back(dataset.samples[index]);
    }
    return make_dataset(dataset.id, std::move(samples), dataset.source_path);
}

Dataset make_synthetic(std::string id, std::size_t n) {
    static const char* kSarcastic[] = {
        "Oh great, another meeting that could have been an email.",
        "Wow, what a fantastic idea, nothing could possibly go wrong.",
        "Sure, because waiting in line all day is my favorite hobby.",
        "Lovely. The printer broke again. Best day ever.",
        "Oh yes, I absolutely adore being stuck in traffic.",
    };
    static const char* kPlain[] = {
        "The meeting is scheduled for three o'clock tomorrow.",
        "The report covers the first quarter of the year.",
        "I picked up groceries on the way home.",
        "The train arrives at platform four.",
        "We reviewed the draft and sent our comments.",
    };
    std::vector<Sample> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Sample sample;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "syn-%04zu", i);
        sample.id = buf;
        sample.dataset_id = id;
        const bool sarcastic = i % 2 == 0;
        const char* const* pool = sarcastic ? kSarcastic : kPlain;
        sample.utterance = pool[(i / 2) % 5];
        sample.gold = sarcastic ? Label::Sarcastic : Label::NotSarcastic;
        samples.push_back(std::move(sample));
    }
    return make_dataset(id, std::move(samples), "synthetic:" + id);
}

} // namespace pragmabench::datasets
