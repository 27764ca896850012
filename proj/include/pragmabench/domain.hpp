#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pragmabench/errors.hpp"

namespace pragmabench {

// Binary class symbol. Sarcastic orders before NotSarcastic so serialized
// output is deterministic.
enum class Label {
    Sarcastic = 0,
    NotSarcastic = 1,
};

std::string_view label_token(Label label);                // "sarcastic" / "not_sarcastic"
Label label_from_token(std::string_view token);           // throws Error(Format)

// Outcome of parsing a model's final answer. An unparseable verdict keeps the
// raw final-stage text for audit.
class Verdict {
public:
    static Verdict decided(Label label) {
        Verdict v;
        v.label_ = label;
        return v;
    }

    static Verdict unparseable(std::string raw_text) {
        Verdict v;
        v.raw_ = std::move(raw_text);
        return v;
    }

    bool is_decided() const { return label_.has_value(); }
    Label label() const;                                  // throws Error(Argument) if unparseable
    const std::string& raw_text() const { return raw_; }

    bool operator==(const Verdict& other) const {
        return label_ == other.label_ && raw_ == other.raw_;
    }

private:
    Verdict() = default;
    std::optional<Label> label_;
    std::string raw_;
};

struct ContextTurn {
    std::string speaker;
    std::string text;

    bool operator==(const ContextTurn&) const = default;
};

// One labeled classification instance: target utterance plus optional
// dialogue context in source order.
struct Sample {
    std::string id;
    std::string dataset_id;
    std::string utterance;
    std::vector<ContextTurn> context_turns;
    std::optional<std::string> speaker;
    Label gold = Label::NotSarcastic;

    bool operator==(const Sample&) const = default;
};

// Positive class is Sarcastic. `unparseable` counts records whose verdict
// could not be parsed; under CountAsWrong those records are also scored in
// fp/fn, under Exclude they appear only here.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    std::uint64_t unparseable = 0;

    std::uint64_t decided_total() const { return tp + fp + fn + tn; }

    bool operator==(const ConfusionCounts&) const = default;
};

enum class UnparseablePolicy {
    CountAsWrong,
    Exclude,
};

std::string_view unparseable_policy_token(UnparseablePolicy policy);
UnparseablePolicy unparseable_policy_from_token(std::string_view token); // throws Error(Config)

struct MetricsSummary {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::map<Label, double> per_class_f1;
    ConfusionCounts counts;
    // Number of records the metrics ran over (= tp+fp+fn+tn). Under Exclude
    // this omits unparseable records.
    std::uint64_t n = 0;
};

using LabeledVerdict = std::pair<Label, Verdict>;

// Tallies gold/verdict pairs into confusion counts under the given policy.
// Throws Error(EmptyRun) on an empty record list.
ConfusionCounts confusion_counts(std::span<const LabeledVerdict> records,
                                 UnparseablePolicy policy);

// (tp+tn)/(tp+fp+fn+tn), computed exactly before the single conversion to
// double. Throws Error(EmptyRun) when the denominator is zero.
double accuracy(const ConfusionCounts& counts);

// Per-class F1 with the zero-support convention F1 = 0 when a class's
// denominator 2*TP+FP+FN is zero.
double per_class_f1(const ConfusionCounts& counts, Label positive);

// Unweighted mean of the two per-class F1 scores, computed in exact integer
// arithmetic and converted to double once. Throws Error(EmptyRun) when
// tp+fp+fn+tn is zero.
double macro_f1(const ConfusionCounts& counts);

MetricsSummary compute_metrics(std::span<const LabeledVerdict> records,
                               UnparseablePolicy policy);

} // namespace pragmabench
