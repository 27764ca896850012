#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pragmabench/domain.hpp"
#include "pragmabench/strategies.hpp"

namespace pragmabench::report {

// One table cell's provenance: a (model, strategy, dataset) result.
struct ReportRow {
    std::string model;
    strategies::StrategyId strategy = strategies::StrategyId::PMP;
    std::string dataset_id;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::size_t n = 0;
    double unparseable_rate = 0.0;

    bool operator==(const ReportRow&) const = default;
};

// Scores records against the gold map under the given policy. Throws
// Error(Data) naming any sample_id missing from golds.
MetricsSummary summarize(const std::vector<strategies::PredictionRecord>& records,
                         const std::map<std::string, Label>& golds, UnparseablePolicy policy);

enum class TableLayout {
    PaperTable1,
    Flat,
};

// Markdown table. PaperTable1 groups Acc./Ma-F1 columns by dataset, orders
// rows by (model, strategy), renders percentages round-half-up to 2 decimals
// and bolds the best value of each column (ties all marked). Throws
// Error(EmptyReport) on empty input.
std::string emit_table(std::vector<ReportRow> rows, TableLayout layout);

enum class MachineFormat {
    Csv,
    Structured,
};

// Csv: fixed header model,strategy,dataset,acc,macro_f1,n,unparseable_rate
// with 6-decimal fractions. Structured: one JSON record per line using the
// ReportRow field names; parse_structured round-trips it losslessly.
std::string emit_machine(std::vector<ReportRow> rows, MachineFormat format);

std::vector<ReportRow> parse_structured(std::string_view text);
std::vector<ReportRow> load_structured(const std::filesystem::path& path);

// Builds the row for a completed run directory (manifest + metrics files).
ReportRow row_from_run_dir(const std::filesystem::path& run_dir);

// Percentage with exactly 2 decimals, round-half-up ("86.68" for 0.8668).
std::string percent_2dp(double fraction);

// Fraction with exactly 6 decimals ("0.700000" for 0.7).
std::string fraction_6dp(double fraction);

} // namespace pragmabench::report
