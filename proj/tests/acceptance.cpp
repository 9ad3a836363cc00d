// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

#include "oracles.hpp"
#include "sim_support.hpp"
#include "trace_gen.hpp"
#include "toolcal/cli.hpp"
#include "toolcal/metrics.hpp"
#include "toolcal/prior.hpp"
#include "toolcal/runner.hpp"
#include "toolcal/trace.hpp"

using namespace toolcal;
using namespace toolcal::testkit;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

Verdict ece_oracle()
{
    auto start = Clock::now();
    SeededRng rng(20240601);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        auto pts = random_points(rng, 200);
        auto outcomes = to_outcomes(pts);
        worst = std::max(worst, std::fabs(ece(outcomes, 0.1).ece - brute_force_ece(pts, 10)));
    }
    double secs = seconds_since(start);
    return {worst <= 1e-12 && secs < 5.0, "1000 sets, max |diff| " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Verdict em_suite()
{
    std::size_t ok = 0;
    std::string first_bad;
    for (const auto& v : em_vectors()) {
        if (exact_match(v.answer, v.labels) == v.expected) {
            ++ok;
        } else if (first_bad.empty()) {
            first_bad = "'" + v.answer + "'";
        }
    }
    const auto total = em_vectors().size();
    return {ok == total && total >= 24,
            std::to_string(ok) + "/" + std::to_string(total) + " pairs" + (first_bad.empty() ? "" : ", first miss " + first_bad)};
}

Verdict trace_round_trip()
{
    static const std::regex bracketed_int(R"(\[\d+(%?)\])");
    SeededRng rng(77);
    for (int i = 0; i < 100; ++i) {
        GenTrace g = generate_art_trace(rng);
        ReasoningTrace t = parse_trace(g.text, Dialect::art);
        if (t.steps.size() != g.steps.size() || t.final_answer != std::optional<std::string>(g.answer)) {
            return {false, "trace " + std::to_string(i) + " structure differs"};
        }
        ConfidenceEdits edits;
        for (std::size_t s = 0; s < g.steps.size(); ++s) {
            if (t.steps[s].invocations.size() != g.steps[s].invocations.size()) {
                return {false, "trace " + std::to_string(i) + " invocation count differs"};
            }
            for (std::size_t k = 0; k < g.steps[s].invocations.size(); ++k) {
                const auto& inv = t.steps[s].invocations[k];
                if (inv.tool_name != g.steps[s].invocations[k].tool ||
                    inv.stated_confidence != g.steps[s].invocations[k].confidence) {
                    return {false, "trace " + std::to_string(i) + " invocation differs"};
                }
                if (inv.stated_confidence) {
                    edits[{s, k}] = static_cast<int>(rng.below(101));
                }
            }
        }
        std::string rewritten = rewrite_confidences(t, edits);
        // Masking every bracketed integer must make the two texts identical.
        if (std::regex_replace(rewritten, bracketed_int, "[#$1]") != std::regex_replace(g.text, bracketed_int, "[#$1]")) {
            return {false, "trace " + std::to_string(i) + " rewrite changed bytes outside confidences"};
        }
        ReasoningTrace back = parse_trace(rewritten, Dialect::art);
        for (const auto& [pos, value] : edits) {
            if (back.steps[pos.step].invocations[pos.invocation].stated_confidence != value) {
                return {false, "trace " + std::to_string(i) + " edit " + to_string(pos) + " not applied"};
            }
        }
    }
    return {true, "100 generated traces, rewrite byte-diff clean"};
}

Verdict prior_partition()
{
    SeededRng rng(4242);
    std::vector<ScoredResult> results;
    for (int i = 0; i < 500; ++i) {
        results.push_back({rng.below(8) == 0 ? TaskConfidence::unparsed() : TaskConfidence::of(rng.uniform()),
                           rng.uniform() < 0.5});
    }
    PriorTable prior = build_prior(results, 0.1, {"synthetic", "sim", "acceptance"});
    for (int i = 0; i < 10000; ++i) {
        double v = i % 5 == 0 ? static_cast<double>(rng.below(101)) / 100.0 : rng.uniform();
        int hits = 0;
        for (std::size_t b = 0; b < prior.bins.size(); ++b) {
            bool last = b + 1 == prior.bins.size();
            if (v >= prior.bins[b].lower && (v < prior.bins[b].upper || (last && v <= 1.0))) ++hits;
        }
        const ConfidenceBin& found = lookup(prior, TaskConfidence::of(v));
        if (hits != 1 || v < found.lower || v > found.upper) {
            return {false, "value " + fmt(v) + " landed in " + std::to_string(hits) + " bins"};
        }
    }
    std::string bytes = serialize_prior(prior);
    PriorTable back = deserialize_prior(bytes);
    bool exact = back == prior && serialize_prior(back) == bytes;
    return {exact, "10000 values in exactly one bin; serialization " + std::string(exact ? "bit-exact" : "differs")};
}

struct SimRuns {
    RunSummary baseline;
    RunSummary verbalized;
    RunSummary smartcal;
    RunSummary no_cpc;
    RunSummary no_se;
    double seconds = 0.0;
};

json with_reference(json j)
{
    j["reference_allowed_tools"] = {"search", "check answer type"};
    return j;
}

SimRuns simulate(const std::filesystem::path& dir)
{
    auto start = Clock::now();
    SimRuns r;
    r.baseline = run_experiment(sim_config(with_reference(sim_config_json("baseline", "baseline", 500, 500)), dir));
    r.verbalized =
        run_experiment(sim_config(with_reference(sim_config_json("verbalized", "verbalized", 500, 500)), dir));
    r.smartcal = run_experiment(sim_config(sim_config_json("smartcal", "smartcal", 500, 500), dir));
    auto no_cpc = sim_config_json("smartcal-no-cpc", "smartcal", 500, 500);
    no_cpc["enable_cpc"] = false;
    r.no_cpc = run_experiment(sim_config(no_cpc, dir));
    auto no_se = with_reference(sim_config_json("smartcal-no-se", "smartcal", 500, 500));
    no_se["enable_se"] = false;
    r.no_se = run_experiment(sim_config(no_se, dir));
    r.seconds = seconds_since(start);
    return r;
}

double metric(const RunSummary& s, const char* key)
{
    return s.metrics.at(key).get<double>();
}

Verdict end_to_end(const SimRuns& r)
{
    double v_ece = metric(r.verbalized, "ece");
    double s_ece = metric(r.smartcal, "ece");
    double s_misuse = metric(r.smartcal, "misuse_rate");
    double b_misuse = metric(r.baseline, "misuse_rate");
    double s_acc = metric(r.smartcal, "accuracy");
    double b_acc = metric(r.baseline, "accuracy");
    bool a = v_ece >= 0.20;
    bool b = s_ece <= 0.5 * v_ece;
    bool c = s_misuse <= 0.05 && std::fabs(b_misuse - 0.25) <= 0.05;
    bool d = s_acc >= b_acc;
    bool fast = r.seconds < 60.0;
    std::string detail = std::string("(a) verbalized ece ") + fmt(v_ece) + (a ? " ok" : " FAIL") + "; (b) smartcal ece " +
                         fmt(s_ece) + (b ? " ok" : " FAIL") + "; (c) misuse " + fmt(s_misuse) + " vs baseline " +
                         fmt(b_misuse) + (c ? " ok" : " FAIL") + "; (d) accuracy " + fmt(s_acc) + " vs " + fmt(b_acc) +
                         (d ? " ok" : " FAIL") + "; " + fmt(r.seconds) + " s for 5 runs";
    return {a && b && c && d && fast, detail};
}

std::map<std::string, json> test_records(const RunSummary& s)
{
    std::map<std::string, json> out;
    for (auto& rec : read_runlog(s.run_dir / "runlog.jsonl")) {
        if (rec["phase"] == "test") out[rec["task_id"]] = rec;
    }
    return out;
}

Verdict ablation(const SimRuns& r)
{
    double with_cpc = metric(r.smartcal, "ece");
    double without_cpc = metric(r.no_cpc, "ece");
    double no_se_with_cpc = metric(r.no_se, "ece");
    double plain = metric(r.verbalized, "ece");
    bool ordered = with_cpc < without_cpc && no_se_with_cpc < plain;

    auto a = test_records(r.no_se);
    auto b = test_records(r.verbalized);
    bool same_prompts = a.size() == b.size() && !a.empty();
    for (const auto& [id, rec] : a) {
        auto it = b.find(id);
        if (it == b.end() || rec["agent_prompt"] != it->second["agent_prompt"]) {
            same_prompts = false;
            break;
        }
    }
    return {ordered && same_prompts, "ece w/ CPC " + fmt(with_cpc) + " < w/o CPC " + fmt(without_cpc) +
                                         " (SE on); " + fmt(no_se_with_cpc) + " < " + fmt(plain) +
                                         " (SE off); no-SE prompts " +
                                         (same_prompts ? "byte-equal" : "DIFFER") + " to verbalized"};
}

int cli(const std::vector<std::string>& args, std::string& err)
{
    std::vector<const char*> argv{"toolcal"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream e;
    int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, e);
    err = e.str();
    return rc;
}

Verdict replay_determinism(const std::filesystem::path& dir)
{
    auto j = sim_config_json("replay", "smartcal", 100, 100);
    j["calibration_mode"] = "llm_edit";
    j["cache_path"] = "cache.jsonl";
    auto cfg = dir / "replay.json";
    std::ofstream(cfg) << j.dump(2);
    auto runlog = dir / "runs" / "replay" / "runlog.jsonl";

    std::string err;
    if (cli({"run", cfg.string(), "--record"}, err) != 0) return {false, "record failed: " + err};
    auto recorded = stripped(read_runlog(runlog));
    if (cli({"run", cfg.string(), "--replay"}, err) != 0) return {false, "first replay failed: " + err};
    auto first = stripped(read_runlog(runlog));
    if (cli({"run", cfg.string(), "--replay"}, err) != 0) return {false, "second replay failed: " + err};
    auto second = stripped(read_runlog(runlog));
    bool same = first == second && first == recorded && !first.empty();
    return {same, std::to_string(first.size()) + " records; replays " + (same ? "identical" : "DIFFER") +
                      " modulo timestamps"};
}

Verdict zero_confidence_edge_case()
{
    std::vector<EvalOutcome> outcomes(50);
    for (std::size_t i = 0; i < outcomes.size(); ++i) outcomes[i].task_id = "t" + std::to_string(i);
    auto report = ece(outcomes, 0.1, true);
    bool ok = report.ece == 0.0 && report.unparsed.included && report.unparsed.count == 50 && !report.warnings.empty();
    return {ok, "ece " + fmt(report.ece) + ", unparsed included, " + std::to_string(report.warnings.size()) +
                    " warning(s)"};
}

} // namespace

int main()
{
    auto dir = scratch_dir("acceptance");
    int failures = 0;
    auto report = [&](const std::string& name, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
        failures += v.pass ? 0 : 1;
    };

    report("ece_oracle_equivalence", ece_oracle);
    report("exact_match_vectors", em_suite);
    report("trace_round_trip", trace_round_trip);
    report("prior_partition_and_serialization", prior_partition);

    std::optional<SimRuns> runs;
    std::string sim_error;
    try {
        runs = simulate(dir / "sim");
    } catch (const std::exception& e) {
        sim_error = e.what();
    }
    report("simulated_end_to_end", [&]() -> Verdict {
        if (!runs) return {false, "simulation failed: " + sim_error};
        return end_to_end(*runs);
    });
    report("ablation_lattice", [&]() -> Verdict {
        if (!runs) return {false, "simulation failed: " + sim_error};
        return ablation(*runs);
    });
    report("replay_determinism", [&] { return replay_determinism(dir); });
    report("zero_confidence_edge_case", zero_confidence_edge_case);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
