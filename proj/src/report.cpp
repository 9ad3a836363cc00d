#include "toolcal/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "toolcal/error.hpp"

namespace toolcal {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& main_column_order()
{
    static const std::vector<std::string> order{"ART", "ART (V)", "ART + SMARTCAL", "DSP", "DSP (V)", "DSP + SMARTCAL"};
    return order;
}

const std::vector<std::string>& ablation_column_order()
{
    static const std::vector<std::string> order{"w/o CPC, w/o SE", "w/ CPC, w/o SE", "w/o CPC, w/ SE", "w/ CPC, w/ SE"};
    return order;
}

// keep_existing: the cell may already be filled by a run that takes precedence.
void put(ComparisonTable& table, const json& m, const std::string& column, double value, bool keep_existing = false)
{
    const std::string dataset = m.value("dataset", "");
    const std::string model = m.value("model", "");
    auto row = std::find_if(table.rows.begin(), table.rows.end(),
                            [&](const auto& r) { return r.dataset == dataset && r.model == model; });
    if (row == table.rows.end()) {
        table.rows.push_back({dataset, model, {}});
        row = std::prev(table.rows.end());
    }
    if (!row->values.emplace(column, value).second && !keep_existing) {
        throw InvalidArgument("two runs fill " + table.title + " cell (" + dataset + ", " + model + ", " + column +
                              ")");
    }
}

void order_columns(ComparisonTable& table, const std::vector<std::string>& order)
{
    std::set<std::string> used;
    for (const auto& r : table.rows) {
        for (const auto& [c, v] : r.values) {
            used.insert(c);
        }
    }
    for (const auto& c : order) {
        if (used.contains(c)) {
            table.columns.push_back(c);
        }
    }
}

void check_splits(const std::vector<json>& metrics)
{
    std::map<std::string, std::set<std::string>> by_dataset;
    for (const auto& m : metrics) {
        by_dataset[m.value("dataset", "")].insert(m.value("split_fingerprint", ""));
    }
    for (const auto& [dataset, fps] : by_dataset) {
        if (fps.size() <= 1) {
            continue;
        }
        std::ostringstream msg;
        msg << "runs on dataset '" << dataset << "' use different splits:";
        for (const auto& m : metrics) {
            if (m.value("dataset", "") == dataset) {
                msg << "\n  " << m.value("name", "?") << ": " << m.value("split_fingerprint", "");
            }
        }
        throw InvalidArgument(msg.str());
    }
}

std::string render_table(const ComparisonTable& table)
{
    std::ostringstream out;
    out << table.title << "\n";
    std::vector<std::string> header{"dataset", "model"};
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    std::vector<std::vector<std::string>> cells{header};
    for (const auto& r : table.rows) {
        std::vector<std::string> line{r.dataset, r.model};
        for (const auto& c : table.columns) {
            auto it = r.values.find(c);
            if (it == r.values.end()) {
                line.push_back("-");
            } else {
                std::ostringstream v;
                v << std::fixed << std::setprecision(3) << it->second;
                line.push_back(v.str());
            }
        }
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            width[i] = std::max(width[i], line[i].size());
        }
    }
    for (std::size_t n = 0; n < cells.size(); ++n) {
        for (std::size_t i = 0; i < cells[n].size(); ++i) {
            out << (i == 0 ? "" : " | ") << std::left << std::setw(static_cast<int>(width[i])) << cells[n][i];
        }
        out << "\n";
        if (n == 0) {
            std::size_t total = 0;
            for (auto w : width) {
                total += w + 3;
            }
            out << std::string(total - 3, '-') << "\n";
        }
    }
    return out.str();
}

json table_json(const ComparisonTable& table)
{
    json rows = json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"dataset", r.dataset}, {"model", r.model}, {"values", r.values}});
    }
    return json{{"title", table.title}, {"columns", table.columns}, {"rows", std::move(rows)}};
}

} // namespace

ComparisonReport build_report(const std::vector<json>& metrics)
{
    if (metrics.empty()) {
        throw InvalidArgument("report needs at least one run");
    }
    check_splits(metrics);

    ComparisonReport report;
    report.accuracy.title = "QA accuracy";
    report.ece.title = "Calibration (ECE)";
    ComparisonTable abl_acc{"QA accuracy (ablation)", {}, {}};
    ComparisonTable abl_ece{"Calibration (ECE, ablation)", {}, {}};
    bool any_mask = false;

    for (const auto& m : metrics) {
        const std::string label = m.at("label").get<std::string>();
        const std::string ablation = m.value("ablation", "");
        const bool full = m.value("variant", "") != "smartcal" || ablation == "w/ CPC, w/ SE";
        if (m.value("variant", "") == "smartcal" && !full) {
            any_mask = true;
        }
        if (full) {
            put(report.accuracy, m, label, m.at("accuracy").get<double>());
            if (m.contains("ece")) {
                put(report.ece, m, label, m["ece"].get<double>());
            }
        }
    }
    // Smartcal runs fill ablation cells first; a verbalized run stands in for
    // the fully masked cell only when no smartcal run covers it.
    for (bool smartcal_pass : {true, false}) {
        for (const auto& m : metrics) {
            const std::string ablation = m.value("ablation", "");
            if (ablation.empty() || (m.value("variant", "") == "smartcal") != smartcal_pass) {
                continue;
            }
            put(abl_acc, m, ablation, m.at("accuracy").get<double>(), !smartcal_pass);
            if (m.contains("ece")) {
                put(abl_ece, m, ablation, m["ece"].get<double>(), !smartcal_pass);
            }
        }
    }
    order_columns(report.accuracy, main_column_order());
    order_columns(report.ece, main_column_order());
    if (any_mask) {
        order_columns(abl_acc, ablation_column_order());
        order_columns(abl_ece, ablation_column_order());
        report.ablation_accuracy = std::move(abl_acc);
        report.ablation_ece = std::move(abl_ece);
    }
    return report;
}

ComparisonReport build_report(const std::vector<fs::path>& run_dirs)
{
    std::vector<json> metrics;
    for (const auto& dir : run_dirs) {
        fs::path p = dir / "metrics.json";
        std::ifstream in(p);
        if (!in) {
            throw InvalidArgument("no metrics.json in " + dir.string());
        }
        json m = json::parse(in, nullptr, false);
        if (m.is_discarded() || !m.is_object() || !m.contains("label") || !m.contains("accuracy")) {
            throw SchemaError(p.string() + " is not a metrics document");
        }
        metrics.push_back(std::move(m));
    }
    return build_report(metrics);
}

std::string render_text(const ComparisonReport& report)
{
    std::string out = render_table(report.accuracy);
    if (!report.ece.columns.empty()) {
        out += "\n" + render_table(report.ece);
    }
    if (report.ablation_accuracy) {
        out += "\n" + render_table(*report.ablation_accuracy);
    }
    if (report.ablation_ece && !report.ablation_ece->columns.empty()) {
        out += "\n" + render_table(*report.ablation_ece);
    }
    return out;
}

json to_json(const ComparisonReport& report)
{
    json j{{"accuracy", table_json(report.accuracy)}, {"ece", table_json(report.ece)}};
    if (report.ablation_accuracy) {
        j["ablation_accuracy"] = table_json(*report.ablation_accuracy);
    }
    if (report.ablation_ece) {
        j["ablation_ece"] = table_json(*report.ablation_ece);
    }
    return j;
}

} // namespace toolcal
