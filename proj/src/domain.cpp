#include "pragmabench/domain.hpp"

namespace pragmabench {

const char* errc_token(Errc code) {
    switch (code) {
    case Errc::Argument: return "E_ARGUMENT";
    case Errc::Config: return "E_CONFIG";
    case Errc::Format: return "E_FORMAT";
    case Errc::Data: return "E_DATA";
    case Errc::Io: return "E_IO";
    case Errc::EmptyRun: return "E_EMPTY_RUN";
    case Errc::EmptyReport: return "E_EMPTY_REPORT";
    case Errc::Script: return "E_SCRIPT";
    }
    return "E_UNKNOWN";
}

const char* to_string(ProviderErrorClass klass) {
    switch (klass) {
    case ProviderErrorClass::AuthError: return "AuthError";
    case ProviderErrorClass::BadRequest: return "BadRequest";
    case ProviderErrorClass::RateLimited: return "RateLimited";
    case ProviderErrorClass::Transient: return "Transient";
    case ProviderErrorClass::Timeout: return "Timeout";
    }
    return "Unknown";
}

std::string_view label_token(Label label) {
    return label == Label::Sarcastic ? "sarcastic" : "not_sarcastic";
}

Label label_from_token(std::string_view token) {
    if (token == "sarcastic") {
        return Label::Sarcastic;
    }
    if (token == "not_sarcastic") {
        return Label::NotSarcastic;
    }
    throw Error(Errc::Format, "unknown label token '" + std::string(token) + "'");
}

Label Verdict::label() const {
    if (!label_) {
        throw Error(Errc::Argument, "label() called on an unparseable verdict");
    }
    return *label_;
}

std::string_view unparseable_policy_token(UnparseablePolicy policy) {
    return policy == UnparseablePolicy::CountAsWrong ? "count_as_wrong" : "exclude";
}

UnparseablePolicy unparseable_policy_from_token(std::string_view token) {
    if (token == "count_as_wrong") {
        return UnparseablePolicy::CountAsWrong;
    }
    if (token == "exclude") {
        return UnparseablePolicy::Exclude;
    }
    throw Error(Errc::Config, "unknown unparseable policy '" + std::string(token) + "'");
}

ConfusionCounts confusion_counts(std::span<const LabeledVerdict> records,
                                 UnparseablePolicy policy) {
    if (records.empty()) {
        throw Error(Errc::EmptyRun, "confusion_counts: no records to score");
    }
    ConfusionCounts counts;
    for (const auto& [gold, verdict] : records) {
        if (verdict.is_decided()) {
            const Label predicted = verdict.label();
            if (gold == Label::Sarcastic) {
                (predicted == Label::Sarcastic ? counts.tp : counts.fn)++;
            } else {
                (predicted == Label::Sarcastic ? counts.fp : counts.tn)++;
            }
            continue;
        }
        counts.unparseable++;
        if (policy == UnparseablePolicy::CountAsWrong) {
            (gold == Label::Sarcastic ? counts.fn : counts.fp)++;
        }
    }
    return counts;
}

double accuracy(const ConfusionCounts& counts) {
    const std::uint64_t total = counts.decided_total();
    if (total == 0) {
        throw Error(Errc::EmptyRun, "accuracy: zero scored records");
    }
    return static_cast<double>(counts.tp + counts.tn) / static_cast<double>(total);
}

double per_class_f1(const ConfusionCounts& counts, Label positive) {
    // For the NotSarcastic class the roles swap: TP=tn, FP=fn, FN=fp.
    const std::uint64_t tp = positive == Label::Sarcastic ? counts.tp : counts.tn;
    const std::uint64_t fp = positive == Label::Sarcastic ? counts.fp : counts.fn;
    const std::uint64_t fn = positive == Label::Sarcastic ? counts.fn : counts.fp;
    const std::uint64_t denom = 2 * tp + fp + fn;
    if (denom == 0) {
        return 0.0;
    }
    return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

double macro_f1(const ConfusionCounts& counts) {
    if (counts.decided_total() == 0) {
        throw Error(Errc::EmptyRun, "macro_f1: zero scored records");
    }
    // F1(Sarcastic) = a/b, F1(NotSarcastic) = c/d. The mean (a*d + c*b)/(2*b*d)
    // stays in integer arithmetic until the final division.
    const std::uint64_t a = 2 * counts.tp;
    const std::uint64_t b = 2 * counts.tp + counts.fp + counts.fn;
    const std::uint64_t c = 2 * counts.tn;
    const std::uint64_t d = 2 * counts.tn + counts.fn + counts.fp;
    if (b == 0 && d == 0) {
        throw Error(Errc::EmptyRun, "macro_f1: zero scored records");
    }
    if (b == 0) {
        return static_cast<double>(c) / (2.0 * static_cast<double>(d));
    }
    if (d == 0) {
        return static_cast<double>(a) / (2.0 * static_cast<double>(b));
    }
    const unsigned __int128 numerator =
        static_cast<unsigned __int128>(a) * d + static_cast<unsigned __int128>(c) * b;
    const unsigned __int128 denominator =
        static_cast<unsigned __int128>(2) * b * d;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

MetricsSummary compute_metrics(std::span<const LabeledVerdict> records,
                               UnparseablePolicy policy) {
    MetricsSummary summary;
    summary.counts = confusion_counts(records, policy);
    summary.n = summary.counts.decided_total();
    summary.accuracy = accuracy(summary.counts);
    summary.macro_f1 = macro_f1(summary.counts);
    summary.per_class_f1[Label::Sarcastic] = per_class_f1(summary.counts, Label::Sarcastic);
    summary.per_class_f1[Label::NotSarcastic] = per_class_f1(summary.counts, Label::NotSarcastic);
    return summary;
}

} // namespace pragmabench
