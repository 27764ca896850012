#include "pragmabench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pragmabench/runner.hpp"

namespace pragmabench::report {

using nlohmann::json;
namespace fs = std::filesystem;

MetricsSummary summarize(const std::vector<strategies::PredictionRecord>& records,
                         const std::map<std::string, Label>& golds, UnparseablePolicy policy) {
    std::vector<LabeledVerdict> labeled;
    labeled.reserve(records.size());
    for (const auto& record : records) {
        const auto it = golds.find(record.sample_id);
        if (it == golds.end()) {
            throw Error(Errc::Data, "no gold label for sample '" + record.sample_id + "'");
        }
        labeled.emplace_back(it->second, record.verdict);
    }
    return compute_metrics(labeled, policy);
}

std::string percent_2dp(double fraction) {
    // Round-half-up on hundredths of a percent. long double gives enough
    // headroom that values like 0.8668 land on exactly "86.68".
    const long double scaled = static_cast<long double>(fraction) * 10000.0L;
    const long long units = static_cast<long long>(std::floor(scaled + 0.5L));
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%lld.%02lld", units / 100, units % 100);
    return buffer;
}

std::string fraction_6dp(double fraction) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.6f", fraction);
    return buffer;
}

namespace {

std::string dataset_display(std::string_view dataset_id) {
    if (dataset_id == "mustard") {
        return "MUStARD";
    }
    if (dataset_id == "semeval2018t3") {
        return "SemEval 2018";
    }
    return std::string(dataset_id);
}

void sort_rows(std::vector<ReportRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.model != b.model) {
            return a.model < b.model;
        }
        if (a.strategy != b.strategy) {
            return static_cast<int>(a.strategy) < static_cast<int>(b.strategy);
        }
        return a.dataset_id < b.dataset_id;
    });
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) {
        return value;
    }
    std::string quoted = "\"";
    for (const char c : value) {
        if (c == '"') {
            quoted += "\"\"";
        } else {
            quoted += c;
        }
    }
    quoted += '"';
    return quoted;
}

std::string paper_table(const std::vector<ReportRow>& rows) {
    std::vector<std::string> dataset_ids;
    for (const auto& row : rows) {
        if (std::find(dataset_ids.begin(), dataset_ids.end(), row.dataset_id) ==
            dataset_ids.end()) {
            dataset_ids.push_back(row.dataset_id);
        }
    }
    std::sort(dataset_ids.begin(), dataset_ids.end());

    // Row groups keyed by (model, strategy), cells keyed by dataset.
    struct Cell {
        double accuracy = 0.0;
        double macro_f1 = 0.0;
        bool present = false;
    };
    std::vector<std::pair<std::string, strategies::StrategyId>> group_keys;
    std::map<std::pair<std::string, strategies::StrategyId>, std::map<std::string, Cell>> groups;
    for (const auto& row : rows) {
        const auto key = std::make_pair(row.model, row.strategy);
        if (groups.find(key) == groups.end()) {
            group_keys.push_back(key);
        }
        groups[key][row.dataset_id] = Cell{row.accuracy, row.macro_f1, true};
    }
    std::sort(group_keys.begin(), group_keys.end(),
              [](const auto& a, const auto& b) {
                  if (a.first != b.first) {
                      return a.first < b.first;
                  }
                  return static_cast<int>(a.second) < static_cast<int>(b.second);
              });

    // Column-wise argmax; ties are all marked.
    std::map<std::string, double> best_accuracy;
    std::map<std::string, double> best_macro_f1;
    for (const auto& row : rows) {
        auto [acc_it, acc_new] = best_accuracy.try_emplace(row.dataset_id, row.accuracy);
        if (!acc_new) {
            acc_it->second = std::max(acc_it->second, row.accuracy);
        }
        auto [f1_it, f1_new] = best_macro_f1.try_emplace(row.dataset_id, row.macro_f1);
        if (!f1_new) {
            f1_it->second = std::max(f1_it->second, row.macro_f1);
        }
    }

    std::ostringstream out;
    out << "| Model |";
    for (const auto& dataset_id : dataset_ids) {
        const std::string display = dataset_display(dataset_id);
        out << " " << display << " Acc. | " << display << " Ma-F1 |";
    }
    out << "\n|---|";
    for (std::size_t i = 0; i < dataset_ids.size(); ++i) {
        out << "---|---|";
    }
    out << "\n";

    for (const auto& key : group_keys) {
        out << "| " << key.first << " (" << strategies::strategy_display(key.second) << ") |";
        const auto& cells = groups[key];
        for (const auto& dataset_id : dataset_ids) {
            const auto it = cells.find(dataset_id);
            if (it == cells.end() || !it->second.present) {
                out << " - | - |";
                continue;
            }
            const Cell& cell = it->second;
            const bool best_acc = cell.accuracy == best_accuracy[dataset_id];
            const bool best_f1 = cell.macro_f1 == best_macro_f1[dataset_id];
            out << " " << (best_acc ? "**" : "") << percent_2dp(cell.accuracy)
                << (best_acc ? "**" : "") << " |";
            out << " " << (best_f1 ? "**" : "") << percent_2dp(cell.macro_f1)
                << (best_f1 ? "**" : "") << " |";
        }
        out << "\n";
    }
    return out.str();
}

std::string flat_table(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "| Model | Strategy | Dataset | Acc. | Ma-F1 | N | Unparseable |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& row : rows) {
        out << "| " << row.model << " | " << strategies::strategy_display(row.strategy) << " | "
            << dataset_display(row.dataset_id) << " | " << percent_2dp(row.accuracy) << " | "
            << percent_2dp(row.macro_f1) << " | " << row.n << " | "
            << percent_2dp(row.unparseable_rate) << "% |\n";
    }
    return out.str();
}

} // namespace

std::string emit_table(std::vector<ReportRow> rows, TableLayout layout) {
    if (rows.empty()) {
        throw Error(Errc::EmptyReport, "no rows to report");
    }
    sort_rows(rows);
    return layout == TableLayout::PaperTable1 ? paper_table(rows) : flat_table(rows);
}

std::string emit_machine(std::vector<ReportRow> rows, MachineFormat format) {
    if (rows.empty()) {
        throw Error(Errc::EmptyReport, "no rows to report");
    }
    sort_rows(rows);

    std::ostringstream out;
    if (format == MachineFormat::Csv) {
        out << "model,strategy,dataset,acc,macro_f1,n,unparseable_rate\n";
        for (const auto& row : rows) {
            out << csv_field(row.model) << ',' << strategies::strategy_token(row.strategy) << ','
                << csv_field(row.dataset_id) << ',' << fraction_6dp(row.accuracy) << ','
                << fraction_6dp(row.macro_f1) << ',' << row.n << ','
                << fraction_6dp(row.unparseable_rate) << '\n';
        }
        return out.str();
    }

    for (const auto& row : rows) {
        const json body = {
            {"model", row.model},
            {"strategy", std::string(strategies::strategy_token(row.strategy))},
            {"dataset_id", row.dataset_id},
            {"accuracy", row.accuracy},
            {"macro_f1", row.macro_f1},
            {"n", row.n},
            {"unparseable_rate", row.unparseable_rate},
        };
        out << body.dump() << '\n';
    }
    return out.str();
}

std::vector<ReportRow> parse_structured(std::string_view text) {
    std::vector<ReportRow> rows;
    std::size_t begin = 0;
    std::size_t line_number = 0;
    while (begin < text.size()) {
        std::size_t end = text.find('\n', begin);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const std::string_view line = text.substr(begin, end - begin);
        begin = end + 1;
        ++line_number;
        if (line.empty()) {
            continue;
        }
        json body;
        try {
            body = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(Errc::Format, "line " + std::to_string(line_number) +
                                          ": not valid JSON: " + e.what());
        }
        try {
            ReportRow row;
            row.model = body.at("model").get<std::string>();
            row.strategy = strategies::strategy_from_token(body.at("strategy").get<std::string>());
            row.dataset_id = body.at("dataset_id").get<std::string>();
            row.accuracy = body.at("accuracy").get<double>();
            row.macro_f1 = body.at("macro_f1").get<double>();
            row.n = body.at("n").get<std::size_t>();
            row.unparseable_rate = body.at("unparseable_rate").get<double>();
            rows.push_back(std::move(row));
        } catch (const json::exception& e) {
            throw Error(Errc::Format, "line " + std::to_string(line_number) +
                                          ": missing field: " + e.what());
        }
    }
    return rows;
}

std::vector<ReportRow> load_structured(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::Io, "cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_structured(buffer.str());
}

ReportRow row_from_run_dir(const fs::path& run_dir) {
    const runner::RunManifest manifest = runner::load_manifest(run_dir);

    std::ifstream in(run_dir / runner::kMetricsFile, std::ios::binary);
    if (!in) {
        throw Error(Errc::Io, "no metrics file in '" + run_dir.string() +
                                  "' (run not finished?)");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json metrics;
    try {
        metrics = json::parse(buffer.str());
    } catch (const json::exception& e) {
        throw Error(Errc::Format, run_dir.string() + "/metrics.json: " + e.what());
    }

    ReportRow row;
    row.model = manifest.model;
    row.strategy = manifest.strategy;
    row.dataset_id = manifest.dataset_id;
    try {
        row.accuracy = metrics.at("accuracy").get<double>();
        row.macro_f1 = metrics.at("macro_f1").get<double>();
        row.n = metrics.at("n").get<std::size_t>();
        const auto records_total = metrics.at("records_total").get<std::size_t>();
        const auto unparseable = metrics.at("counts").at("unparseable").get<std::size_t>();
        row.unparseable_rate =
            records_total > 0 ? static_cast<double>(unparseable) / records_total : 0.0;
    } catch (const json::exception& e) {
        throw Error(Errc::Format, run_dir.string() + "/metrics.json: missing field: " + e.what());
    }
    return row;
}

} // namespace pragmabench::report
