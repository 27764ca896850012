#include <doctest.h>

#include <algorithm>
#include <random>

#include "pragmabench/domain.hpp"

using namespace pragmabench;

namespace {

LabeledVerdict entry(Label gold, Label predicted) {
    return {gold, Verdict::decided(predicted)};
}

LabeledVerdict unparsed(Label gold) {
    return {gold, Verdict::unparseable("gibberish")};
}

// Independent brute-force oracle: per-class precision/recall/F1 by direct
// counting over (gold, optional predicted) pairs, double arithmetic all the
// way. Kept deliberately separate from the integer-arithmetic implementation.
struct OracleResult {
    double accuracy = 0.0;
    double f1_sarcastic = 0.0;
    double f1_not_sarcastic = 0.0;
    double macro_f1 = 0.0;
};

OracleResult oracle(const std::vector<std::pair<Label, std::optional<Label>>>& records,
                    UnparseablePolicy policy) {
    double correct = 0, total = 0;
    double class_tp[2] = {0, 0}, class_fp[2] = {0, 0}, class_fn[2] = {0, 0};

    for (const auto& [gold, predicted_opt] : records) {
        std::optional<Label> predicted = predicted_opt;
        if (!predicted) {
            if (policy == UnparseablePolicy::Exclude) {
                continue;
            }
            predicted = gold == Label::Sarcastic ? Label::NotSarcastic : Label::Sarcastic;
        }
        total += 1;
        if (*predicted == gold) {
            correct += 1;
        }
        for (const Label c : {Label::Sarcastic, Label::NotSarcastic}) {
            const int i = static_cast<int>(c);
            if (*predicted == c && gold == c) {
                class_tp[i] += 1;
            } else if (*predicted == c && gold != c) {
                class_fp[i] += 1;
            } else if (*predicted != c && gold == c) {
                class_fn[i] += 1;
            }
        }
    }

    OracleResult result;
    result.accuracy = total > 0 ? correct / total : 0.0;
    double f1[2];
    for (int i = 0; i < 2; ++i) {
        const double precision_denominator = class_tp[i] + class_fp[i];
        const double recall_denominator = class_tp[i] + class_fn[i];
        const double precision =
            precision_denominator > 0 ? class_tp[i] / precision_denominator : 0.0;
        const double recall = recall_denominator > 0 ? class_tp[i] / recall_denominator : 0.0;
        f1[i] = (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    }
    result.f1_sarcastic = f1[static_cast<int>(Label::Sarcastic)];
    result.f1_not_sarcastic = f1[static_cast<int>(Label::NotSarcastic)];
    result.macro_f1 = (result.f1_sarcastic + result.f1_not_sarcastic) / 2.0;
    return result;
}

// Ten-record confusion fixture: 3 tp, 1 fp, 2 fn, 4 tn.
std::vector<LabeledVerdict> confusion_fixture() {
    std::vector<LabeledVerdict> records;
    for (int i = 0; i < 3; ++i) records.push_back(entry(Label::Sarcastic, Label::Sarcastic));
    records.push_back(entry(Label::NotSarcastic, Label::Sarcastic));
    for (int i = 0; i < 2; ++i) records.push_back(entry(Label::Sarcastic, Label::NotSarcastic));
    for (int i = 0; i < 4; ++i) records.push_back(entry(Label::NotSarcastic, Label::NotSarcastic));
    return records;
}

} // namespace

TEST_CASE("labels order and serialize deterministically") {
    CHECK(Label::Sarcastic < Label::NotSarcastic);
    CHECK(label_token(Label::Sarcastic) == "sarcastic");
    CHECK(label_token(Label::NotSarcastic) == "not_sarcastic");
    CHECK(label_from_token("sarcastic") == Label::Sarcastic);
    CHECK_THROWS_AS(label_from_token("maybe"), Error);
}

TEST_CASE("verdict carries raw text only when unparseable") {
    const Verdict decided = Verdict::decided(Label::Sarcastic);
    CHECK(decided.is_decided());
    CHECK(decided.label() == Label::Sarcastic);

    const Verdict raw = Verdict::unparseable("I cannot tell.");
    CHECK_FALSE(raw.is_decided());
    CHECK(raw.raw_text() == "I cannot tell.");
    CHECK_THROWS_AS(raw.label(), Error);
}

TEST_CASE("confusion_counts identity and policy cases") {
    SUBCASE("single true positive") {
        const std::vector<LabeledVerdict> records = {entry(Label::Sarcastic, Label::Sarcastic)};
        const ConfusionCounts counts = confusion_counts(records, UnparseablePolicy::CountAsWrong);
        CHECK(counts == ConfusionCounts{1, 0, 0, 0, 0});
    }
    SUBCASE("unparseable under CountAsWrong becomes a miss on the gold class") {
        const std::vector<LabeledVerdict> records = {unparsed(Label::Sarcastic)};
        const ConfusionCounts counts = confusion_counts(records, UnparseablePolicy::CountAsWrong);
        CHECK(counts.fn == 1);
        CHECK(counts.unparseable == 1);
        CHECK(counts.tp == 0);
        CHECK(counts.fp == 0);
        CHECK(counts.tn == 0);
    }
    SUBCASE("unparseable under Exclude is only tallied") {
        const std::vector<LabeledVerdict> records = {unparsed(Label::Sarcastic),
                                                     entry(Label::NotSarcastic, Label::NotSarcastic)};
        const ConfusionCounts counts = confusion_counts(records, UnparseablePolicy::Exclude);
        CHECK(counts.unparseable == 1);
        CHECK(counts.decided_total() == 1);
        CHECK(counts.tn == 1);
    }
    SUBCASE("ten-record fixture recounted") {
        const auto records = confusion_fixture();
        const ConfusionCounts counts = confusion_counts(records, UnparseablePolicy::CountAsWrong);
        CHECK(counts.tp == 3);
        CHECK(counts.fp == 1);
        CHECK(counts.fn == 2);
        CHECK(counts.tn == 4);
        CHECK(counts.unparseable == 0);
    }
    SUBCASE("empty record list is an error") {
        const std::vector<LabeledVerdict> records;
        CHECK_THROWS_AS(confusion_counts(records, UnparseablePolicy::CountAsWrong), Error);
    }
}

TEST_CASE("accuracy on the stated examples") {
    CHECK(accuracy(ConfusionCounts{5, 0, 0, 5, 0}) == 1.0);
    CHECK(accuracy(ConfusionCounts{0, 5, 5, 0, 0}) == 0.0);
    CHECK(accuracy(ConfusionCounts{3, 1, 2, 4, 0}) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK_THROWS_AS(accuracy(ConfusionCounts{0, 0, 0, 0, 3}), Error);
}

TEST_CASE("macro F1 on the stated examples") {
    CHECK(macro_f1(ConfusionCounts{5, 0, 0, 5, 0}) == 1.0);
    // Degenerate class: F1(Sarcastic)=0 by the zero-support convention,
    // F1(NotSarcastic)=1.
    CHECK(macro_f1(ConfusionCounts{0, 0, 0, 10, 0}) == 0.5);

    const auto records = confusion_fixture();
    std::vector<std::pair<Label, std::optional<Label>>> oracle_records;
    for (const auto& [gold, verdict] : records) {
        oracle_records.emplace_back(gold, verdict.label());
    }
    const OracleResult expected = oracle(oracle_records, UnparseablePolicy::CountAsWrong);
    const ConfusionCounts counts = confusion_counts(records, UnparseablePolicy::CountAsWrong);
    CHECK(macro_f1(counts) == doctest::Approx(expected.macro_f1).epsilon(1e-12));
    CHECK(macro_f1(counts) == doctest::Approx(0.696970).epsilon(1e-6));

    CHECK_THROWS_AS(macro_f1(ConfusionCounts{0, 0, 0, 0, 0}), Error);
}

TEST_CASE("permutation invariance") {
    std::mt19937_64 rng(7);
    std::vector<LabeledVerdict> records;
    for (int i = 0; i < 200; ++i) {
        const Label gold = rng() % 2 == 0 ? Label::Sarcastic : Label::NotSarcastic;
        const int kind = static_cast<int>(rng() % 3);
        if (kind == 2) {
            records.push_back(unparsed(gold));
        } else {
            records.push_back(entry(gold, kind == 0 ? Label::Sarcastic : Label::NotSarcastic));
        }
    }
    for (const auto policy : {UnparseablePolicy::CountAsWrong, UnparseablePolicy::Exclude}) {
        const ConfusionCounts before = confusion_counts(records, policy);
        auto shuffled = records;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const ConfusionCounts after = confusion_counts(shuffled, policy);
        CHECK(before == after);
        CHECK(accuracy(before) == accuracy(after));
        CHECK(macro_f1(before) == macro_f1(after));
    }
}

TEST_CASE("label-swap symmetry") {
    std::mt19937_64 rng(11);
    std::vector<LabeledVerdict> records;
    for (int i = 0; i < 150; ++i) {
        const Label gold = rng() % 2 == 0 ? Label::Sarcastic : Label::NotSarcastic;
        const Label predicted = rng() % 2 == 0 ? Label::Sarcastic : Label::NotSarcastic;
        records.push_back(entry(gold, predicted));
    }
    auto flip = [](Label label) {
        return label == Label::Sarcastic ? Label::NotSarcastic : Label::Sarcastic;
    };
    std::vector<LabeledVerdict> swapped;
    for (const auto& [gold, verdict] : records) {
        swapped.push_back(entry(flip(gold), flip(verdict.label())));
    }
    const auto policy = UnparseablePolicy::CountAsWrong;
    const ConfusionCounts counts = confusion_counts(records, policy);
    const ConfusionCounts swapped_counts = confusion_counts(swapped, policy);
    CHECK(accuracy(counts) == accuracy(swapped_counts));
    CHECK(per_class_f1(counts, Label::Sarcastic) ==
          per_class_f1(swapped_counts, Label::NotSarcastic));
    CHECK(per_class_f1(counts, Label::NotSarcastic) ==
          per_class_f1(swapped_counts, Label::Sarcastic));
    CHECK(macro_f1(counts) == doctest::Approx(macro_f1(swapped_counts)).epsilon(1e-15));
}

TEST_CASE("bounds and the balanced-counts identity") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        ConfusionCounts counts{rng() % 50, rng() % 50, rng() % 50, rng() % 50, 0};
        if (counts.decided_total() == 0) {
            continue;
        }
        const double acc = accuracy(counts);
        const double f1 = macro_f1(counts);
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
        CHECK(f1 >= 0.0);
        CHECK(f1 <= 1.0);
    }
    // macro_f1 == accuracy whenever tp == tn and fp == fn.
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t tp = rng() % 40 + 1;
        const std::uint64_t fp = rng() % 40;
        ConfusionCounts counts{tp, fp, fp, tp, 0};
        CHECK(macro_f1(counts) == doctest::Approx(accuracy(counts)).epsilon(1e-12));
    }
}

TEST_CASE("macro F1 matches the brute-force oracle on dense random counts") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 400; ++trial) {
        const ConfusionCounts counts{rng() % 200 + 1, rng() % 200 + 1, rng() % 200 + 1,
                                     rng() % 200 + 1, 0};
        std::vector<std::pair<Label, std::optional<Label>>> records;
        for (std::uint64_t i = 0; i < counts.tp; ++i)
            records.emplace_back(Label::Sarcastic, Label::Sarcastic);
        for (std::uint64_t i = 0; i < counts.fp; ++i)
            records.emplace_back(Label::NotSarcastic, Label::Sarcastic);
        for (std::uint64_t i = 0; i < counts.fn; ++i)
            records.emplace_back(Label::Sarcastic, Label::NotSarcastic);
        for (std::uint64_t i = 0; i < counts.tn; ++i)
            records.emplace_back(Label::NotSarcastic, Label::NotSarcastic);
        const OracleResult expected = oracle(records, UnparseablePolicy::CountAsWrong);
        CHECK(macro_f1(counts) == doctest::Approx(expected.macro_f1).epsilon(1e-12));
        CHECK(per_class_f1(counts, Label::Sarcastic) ==
              doctest::Approx(expected.f1_sarcastic).epsilon(1e-12));
        CHECK(per_class_f1(counts, Label::NotSarcastic) ==
              doctest::Approx(expected.f1_not_sarcastic).epsilon(1e-12));
        CHECK(accuracy(counts) == doctest::Approx(expected.accuracy).epsilon(1e-12));
    }
}

TEST_CASE("compute_metrics summary invariants") {
    const auto records = confusion_fixture();
    const MetricsSummary summary = compute_metrics(records, UnparseablePolicy::CountAsWrong);
    CHECK(summary.n == 10);
    CHECK(summary.accuracy == doctest::Approx(0.7));
    const double mean = (summary.per_class_f1.at(Label::Sarcastic) +
                         summary.per_class_f1.at(Label::NotSarcastic)) /
                        2.0;
    CHECK(summary.macro_f1 == doctest::Approx(mean).epsilon(1e-15));
}
