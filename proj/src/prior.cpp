#include "toolcal/prior.hpp"

#include <cmath>

#include "json.hpp"
#include "toolcal/binning.hpp"
#include "toolcal/error.hpp"

namespace toolcal {

using nlohmann::json;

namespace {

struct Accumulator {
    std::size_t count = 0;
    std::size_t correct = 0;
    double confidence_sum = 0.0;

    void add(double confidence, bool ok)
    {
        ++count;
        correct += ok ? 1 : 0;
        confidence_sum += confidence;
    }

    ConfidenceBin finish(double lower, double upper) const
    {
        ConfidenceBin bin{lower, upper, count, 0.0, 0.0};
        if (count > 0) {
            bin.accuracy = static_cast<double>(correct) / static_cast<double>(count);
            bin.mean_stated_confidence = confidence_sum / static_cast<double>(count);
        }
        return bin;
    }
};

json bin_to_json(const ConfidenceBin& bin)
{
    return json{{"lower", bin.lower},
                {"upper", bin.upper},
                {"count", bin.count},
                {"accuracy", bin.accuracy},
                {"mean_stated_confidence", bin.mean_stated_confidence},
                {"empty", bin.empty()}};
}

ConfidenceBin bin_from_json(const json& j)
{
    ConfidenceBin bin;
    bin.lower = j.at("lower").get<double>();
    bin.upper = j.at("upper").get<double>();
    bin.count = j.at("count").get<std::size_t>();
    bin.accuracy = j.at("accuracy").get<double>();
    bin.mean_stated_confidence = j.at("mean_stated_confidence").get<double>();
    if (!(bin.accuracy >= 0.0 && bin.accuracy <= 1.0) ||
        !(bin.mean_stated_confidence >= 0.0 && bin.mean_stated_confidence <= 1.0)) {
        throw SchemaError("prior bin accuracy/confidence outside [0,1]");
    }
    if (j.contains("empty") && j["empty"].get<bool>() != bin.empty()) {
        throw SchemaError("prior bin empty flag disagrees with its count");
    }
    return bin;
}

} // namespace

std::size_t PriorTable::total_count() const noexcept
{
    std::size_t n = unparsed_bin.count;
    for (const auto& b : bins) {
        n += b.count;
    }
    return n;
}

PriorTable build_prior(std::span<const ScoredResult> results, double stepsize, PriorProvenance provenance)
{
    BinLayout layout(stepsize);
    if (results.empty()) {
        throw InvalidArgument("cannot build a prior from zero results");
    }
    std::vector<Accumulator> acc(layout.count());
    Accumulator unparsed;
    for (const auto& r : results) {
        if (!r.confidence.parsed()) {
            unparsed.add(0.0, r.correct);
        } else {
            acc[layout.index_of(r.confidence.value())].add(r.confidence.value(), r.correct);
        }
    }
    PriorTable table;
    table.stepsize = stepsize;
    table.provenance = std::move(provenance);
    for (std::size_t i = 0; i < layout.count(); ++i) {
        table.bins.push_back(acc[i].finish(layout.lower(i), layout.upper(i)));
    }
    table.unparsed_bin = unparsed.finish(layout.lower(0), layout.upper(0));
    return table;
}

const ConfidenceBin& lookup(const PriorTable& table, const TaskConfidence& confidence)
{
    if (!confidence.parsed()) {
        return table.unparsed_bin;
    }
    BinLayout layout(table.stepsize);
    return table.bins.at(layout.index_of(confidence.value()));
}

std::string serialize_prior(const PriorTable& table)
{
    json bins = json::array();
    for (const auto& b : table.bins) {
        bins.push_back(bin_to_json(b));
    }
    json doc{{"schema_version", kPriorSchemaVersion},
             {"stepsize", table.stepsize},
             {"provenance",
              {{"dataset_id", table.provenance.dataset_id},
               {"model_name", table.provenance.model_name},
               {"run_id", table.provenance.run_id}}},
             {"bins", std::move(bins)},
             {"unparsed_bin", bin_to_json(table.unparsed_bin)}};
    return doc.dump(2);
}

PriorTable deserialize_prior(std::string_view bytes)
{
    json doc = json::parse(bytes, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw SchemaError("prior is not a JSON object");
    }
    int version = doc.value("schema_version", -1);
    if (version != kPriorSchemaVersion) {
        throw SchemaError("prior schema version " + std::to_string(version) + " does not match expected version " +
                          std::to_string(kPriorSchemaVersion));
    }
    try {
        PriorTable table;
        table.stepsize = doc.at("stepsize").get<double>();
        BinLayout layout(table.stepsize);
        const auto& prov = doc.at("provenance");
        table.provenance.dataset_id = prov.value("dataset_id", "");
        table.provenance.model_name = prov.value("model_name", "");
        table.provenance.run_id = prov.value("run_id", "");
        for (const auto& b : doc.at("bins")) {
            table.bins.push_back(bin_from_json(b));
        }
        if (table.bins.size() != layout.count()) {
            throw SchemaError("prior has " + std::to_string(table.bins.size()) + " bins, stepsize implies " +
                              std::to_string(layout.count()));
        }
        table.unparsed_bin = bin_from_json(doc.at("unparsed_bin"));
        return table;
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception& e) {
        throw SchemaError(std::string("malformed prior: ") + e.what());
    }
}

} // namespace toolcal
