#include "toolcal/runner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "toolcal/cache.hpp"
#include "toolcal/error.hpp"
#include "toolcal/reasoning.hpp"
#include "toolcal/selfeval.hpp"
#include "toolcal/simulator.hpp"
#include "toolcal/tool_registry.hpp"

namespace toolcal {

using nlohmann::json;
namespace fs = std::filesystem;

void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides)
{
    if (overrides.backend_mode) {
        config.backend_mode = *overrides.backend_mode;
    }
    if (overrides.simulate) {
        for (auto& [role, spec] : config.backends) {
            spec.kind = BackendKind::simulator;
        }
    }
    if (overrides.output_dir) {
        config.output_dir = *overrides.output_dir;
    }
    if (overrides.concurrency) {
        config.concurrency = *overrides.concurrency;
    }
}

Split load_split(const ExperimentConfig& config)
{
    const auto& ds = config.dataset;
    auto load = [&](const std::string& path) -> std::vector<QaRecord> {
        fs::path p = config.resolve(path);
        if (ds.loader == "canonical") return load_dataset(p, ds.format);
        if (ds.loader == "mintaka") return load_mintaka(p);
        if (ds.loader == "popqa") return load_popqa(p);
        if (ds.loader == "triplets") return load_triplets(p, ds.templates);
        throw ConfigError("loader '" + ds.loader + "' does not read files");
    };
    if (ds.loader == "synthetic") {
        return split_dev_test(make_synthetic_dataset(ds.synthetic_count, ds.synthetic_seed), config.split);
    }
    if (!ds.dev_path.empty() && !ds.test_path.empty()) {
        return split_dev_test(load(ds.dev_path), load(ds.test_path), config.split);
    }
    return split_dev_test(load(ds.path), config.split);
}

std::string variant_label(const ExperimentConfig& config)
{
    std::string dialect = config.dialect == Dialect::art ? "ART" : "DSP";
    switch (config.variant) {
    case Variant::baseline: return dialect;
    case Variant::verbalized: return dialect + " (V)";
    case Variant::smartcal: break;
    }
    if (config.enable_se && config.enable_cpc) {
        return dialect + " + SMARTCAL";
    }
    return dialect + " + SMARTCAL (" + ablation_label(config) + ")";
}

std::string ablation_label(const ExperimentConfig& config)
{
    if (config.variant == Variant::baseline) {
        return {};
    }
    return std::string(config.uses_cpc() ? "w/ CPC" : "w/o CPC") + ", " + (config.uses_se() ? "w/ SE" : "w/o SE");
}

json strip_timestamps(json record)
{
    record.erase("timestamps");
    return record;
}

std::vector<json> find_task_records(const fs::path& runlog, const std::string& task_id)
{
    std::ifstream in(runlog);
    if (!in) {
        throw ConfigError("cannot open run log " + runlog.string());
    }
    std::vector<json> found;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) {
            throw SchemaError("run log line " + std::to_string(lineno) + " is not valid JSON");
        }
        if (rec.value("task_id", "") == task_id) {
            found.push_back(std::move(rec));
        }
    }
    return found;
}

namespace {

struct Backends {
    BackendPtr agent;
    BackendPtr teacher;
    BackendPtr calibrator;
    std::shared_ptr<CacheStore> store;
};

Backends make_backends(const ExperimentConfig& config, const Split& split)
{
    Backends out;
    if (config.backend_mode != BackendMode::live) {
        fs::path cache = config.resolve(config.cache_path);
        if (config.backend_mode == BackendMode::replay && !fs::exists(cache)) {
            throw ConfigError("replay cache does not exist: " + cache.string());
        }
        if (cache.has_parent_path()) {
            fs::create_directories(cache.parent_path());
        }
        out.store = std::make_shared<CacheStore>(cache);
    }

    std::shared_ptr<SimulatedBackend> simulator;
    auto inner = [&](const BackendSpec& spec) -> BackendPtr {
        if (spec.kind == BackendKind::simulator) {
            if (!simulator) {
                std::vector<QaRecord> tasks = split.dev;
                tasks.insert(tasks.end(), split.test.begin(), split.test.end());
                simulator = std::make_shared<SimulatedBackend>(config.simulator, tasks);
            }
            return simulator;
        }
        HttpBackendOptions options;
        options.base_url = spec.base_url;
        options.api_key_env = spec.api_key_env;
        options.api_style = spec.api_style;
        options.max_retries = spec.max_retries;
        options.timeout = std::chrono::seconds(spec.timeout_s);
        options.max_in_flight = spec.max_in_flight;
        return std::make_shared<HttpBackend>(options);
    };
    auto wrap = [&](const BackendSpec& spec) -> BackendPtr {
        switch (config.backend_mode) {
        case BackendMode::replay: return std::make_shared<ReplayBackend>(out.store);
        case BackendMode::record: return std::make_shared<RecordingBackend>(inner(spec), out.store);
        case BackendMode::live: break;
        }
        return inner(spec);
    };
    out.agent = wrap(config.backend(kAgentRole));
    out.teacher = wrap(config.backend(kTeacherRole));
    out.calibrator = wrap(config.backend(kCalibratorRole));
    return out;
}

// Everything a task needs that does not change between tasks.
struct RunContext {
    const ExperimentConfig& config;
    Backends backends;
    std::string demos;
    ToolCatalog catalog;
    ToolRegistry tools;
    std::string config_fingerprint;
    std::optional<PriorTable> prior;
    std::string prior_id;
};

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunContext make_context(const ExperimentConfig& config, const Split& split)
{
    RunContext ctx{config, make_backends(config, split), {}, {}, {}, config.fingerprint(), std::nullopt, {}};
    ctx.demos = config.demos_path.empty() ? default_demos(config.dialect) : read_file(config.resolve(config.demos_path));
    ctx.catalog = config.tool_catalog_path.empty() ? default_tool_catalog()
                                                   : load_tool_catalog(config.resolve(config.tool_catalog_path));
    OfflineCorpus corpus;
    if (!config.corpus_path.empty()) {
        corpus = load_offline_corpus(config.resolve(config.corpus_path));
    }
    ctx.tools = config.tool_registry ? ToolRegistry::from_json(*config.tool_registry, std::move(corpus))
                                     : ToolRegistry::defaults(std::move(corpus));
    return ctx;
}

enum class Phase { dev, test };

struct TaskResult {
    json record;
    EvalOutcome outcome;
    bool failed = false;
    std::vector<std::string> flags;
};

void append_calls(json& out, ModelHandle& handle)
{
    for (const auto& call : handle.take_calls()) {
        out.push_back(to_json(call, false));
    }
}

TaskResult run_task(const RunContext& ctx, const QaRecord& task, Phase phase, std::size_t index)
{
    const ExperimentConfig& cfg = ctx.config;
    TaskResult result;
    json& rec = result.record;
    rec["phase"] = phase == Phase::dev ? "dev" : "test";
    rec["index"] = index;
    rec["task_id"] = task.id;
    rec["config_fingerprint"] = ctx.config_fingerprint;
    rec["question"] = task.question;
    rec["answers"] = task.answers;
    rec["prior_id"] = ctx.prior ? json(ctx.prior_id) : json();
    json timestamps{{"started", utc_timestamp()}};

    ModelHandle teacher(ctx.backends.teacher, kTeacherRole, cfg.backend(kTeacherRole).model, cfg.temperature);
    ModelHandle agent(ctx.backends.agent, kAgentRole, cfg.backend(kAgentRole).model, cfg.temperature,
                      cfg.limits.max_tokens);
    ModelHandle calibrator(ctx.backends.calibrator, kCalibratorRole, cfg.backend(kCalibratorRole).model,
                           cfg.temperature, cfg.limits.max_tokens * 2);

    EvalOutcome& outcome = result.outcome;
    outcome.task_id = task.id;
    if (!cfg.uses_se() && cfg.reference_allowed_tools) {
        outcome.allowed_tools = cfg.reference_allowed_tools;
    }

    rec["self_evaluation"] = nullptr;
    rec["instruction"] = nullptr;
    rec["calibration"] = nullptr;
    std::optional<ToolUseInstruction> instruction;
    try {
        if (cfg.uses_se()) {
            SelfEvaluation se = run_self_evaluation(task.question, ctx.demos, cfg.dialect, ctx.catalog, teacher);
            instruction = se.instruction;
            outcome.allowed_tools = se.instruction.allowed_tools;
            rec["self_evaluation"] = to_json(se);
            rec["instruction"] = to_json(se.instruction);
            result.flags.insert(result.flags.end(), se.flags.begin(), se.flags.end());
        }
        AugmentedPrompt prompt = augment_prompt(cfg.dialect, ctx.demos, cfg.task_description, task,
                                                instruction ? &*instruction : nullptr);
        rec["agent_prompt"] = prompt.text;

        ToolUseRun run = run_tool_use(prompt, agent, ctx.tools, cfg.limits, task);
        result.flags.insert(result.flags.end(), run.flags.begin(), run.flags.end());
        rec["trace"] = {{"raw_text", run.trace.raw_text},
                        {"finish", to_string(run.finish)},
                        {"steps", run.trace.steps.size()},
                        {"stated_confidences", stated_confidences(run.trace)}};
        if (run.finish == RunFinish::aborted) {
            result.failed = true;
        }

        ReasoningTrace final_trace = run.trace;
        if (phase == Phase::test && ctx.prior) {
            CalibratedResult cal = calibrate(run.trace, *ctx.prior, cfg.calibration_mode, &calibrator);
            result.flags.insert(result.flags.end(), cal.flags.begin(), cal.flags.end());
            rec["calibration"] = {
                {"mode", to_string(cal.calibration_mode)},
                {"original_confidence",
                 cal.original_confidence.parsed() ? json(cal.original_confidence.value()) : json()},
                {"calibrated_confidence",
                 cal.calibrated_confidence.parsed() ? json(cal.calibrated_confidence.value()) : json()},
                {"edited_trace", cal.edited_trace.raw_text}};
            final_trace = cal.edited_trace;
            outcome.answer = cal.final_answer;
        } else {
            AnswerExtraction answer = extract_final_answer(run.trace);
            outcome.answer = answer.answer;
            result.flags.insert(result.flags.end(), answer.flags.begin(), answer.flags.end());
        }
        outcome.tool_tags = extract_tool_tags(final_trace);
        if (cfg.variant != Variant::baseline || phase == Phase::dev) {
            outcome.task_confidence = aggregate_task_confidence(final_trace);
        }
        outcome.correct = exact_match(outcome.answer, task.answers);
    } catch (const Error& e) {
        result.failed = true;
        result.flags.push_back(std::string("task_failed: ") + e.what());
    }
    if (result.failed) {
        outcome.correct = false;
        outcome.task_confidence = TaskConfidence::unparsed();
    }

    json calls = json::array();
    append_calls(calls, teacher);
    append_calls(calls, agent);
    append_calls(calls, calibrator);
    rec["calls"] = std::move(calls);
    rec["outcome"] = to_json(outcome);
    rec["flags"] = result.flags;
    rec["failed"] = result.failed;
    timestamps["finished"] = utc_timestamp();
    rec["timestamps"] = std::move(timestamps);
    return result;
}

std::vector<TaskResult> run_tasks(const RunContext& ctx, const std::vector<QaRecord>& tasks, Phase phase)
{
    std::vector<TaskResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            results[i] = run_task(ctx, tasks[i], phase, i);
        }
    };
    std::size_t n = std::min<std::size_t>(ctx.config.concurrency, std::max<std::size_t>(tasks.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    return results;
}

PriorTable collect_prior(RunContext& ctx, const std::vector<TaskResult>& dev_results, const std::string& split_fp)
{
    std::vector<ScoredResult> scored;
    for (const auto& r : dev_results) {
        scored.push_back({r.outcome.task_confidence, r.outcome.correct});
    }
    PriorProvenance provenance{split_fp, ctx.config.backend(kAgentRole).model, ctx.config_fingerprint.substr(0, 16)};
    return build_prior(scored, ctx.config.stepsize, provenance);
}

void write_text(const fs::path& path, const std::string& body)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << body;
}

// The single writer for the run log.
void write_runlog(const fs::path& path, const std::vector<TaskResult>& dev, const std::vector<TaskResult>& test)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    for (const auto* batch : {&dev, &test}) {
        for (const auto& r : *batch) {
            out << r.record.dump() << '\n';
        }
    }
}

fs::path prepare_run_dir(const ExperimentConfig& config, const SplitManifest& manifest)
{
    fs::path dir = config.resolve(config.output_dir) / config.name;
    fs::create_directories(dir);
    write_text(dir / "config.json", config.to_json().dump(2) + "\n");
    write_text(dir / "split.json", manifest.to_json().dump(2) + "\n");
    return dir;
}

std::string dataset_label(const ExperimentConfig& config)
{
    const auto& ds = config.dataset;
    if (ds.loader == "synthetic") {
        return "synthetic";
    }
    const std::string& p = ds.path.empty() ? ds.test_path : ds.path;
    return fs::path(p).stem().string();
}

json build_metrics(const ExperimentConfig& config, const std::vector<TaskResult>& results,
                   const std::string& split_fp, const std::optional<PriorTable>& prior,
                   std::vector<std::string>& warnings)
{
    std::vector<EvalOutcome> outcomes;
    std::map<std::string, std::size_t> flag_counts;
    std::size_t failures = 0;
    std::vector<EvalOutcome> before;  // agent confidences prior to calibration
    for (const auto& r : results) {
        outcomes.push_back(r.outcome);
        failures += r.failed ? 1 : 0;
        for (const auto& f : r.flags) {
            flag_counts[f.substr(0, f.find(':'))] += 1;
        }
        if (prior) {
            EvalOutcome b = r.outcome;
            const json& cal = r.record["calibration"];
            b.task_confidence = cal.is_object() && !cal["original_confidence"].is_null()
                                    ? TaskConfidence::of(cal["original_confidence"].get<double>())
                                    : TaskConfidence::unparsed();
            before.push_back(std::move(b));
        }
    }

    json m;
    m["name"] = config.name;
    m["variant"] = to_string(config.variant);
    m["label"] = variant_label(config);
    m["ablation"] = ablation_label(config);
    m["dialect"] = to_string(config.dialect);
    m["model"] = config.backend(kAgentRole).model;
    m["dataset"] = dataset_label(config);
    m["enable_se"] = config.uses_se();
    m["enable_cpc"] = config.uses_cpc();
    m["calibration_mode"] = config.uses_cpc() ? json(to_string(config.calibration_mode)) : json();
    m["tasks"] = outcomes.size();
    m["failures"] = failures;
    m["accuracy"] = accuracy(outcomes);
    m["n"] = outcomes.size();
    m["stepsize"] = config.stepsize;

    if (config.variant != Variant::baseline && !outcomes.empty()) {
        ReliabilityReport report = ece(outcomes, config.stepsize, config.ece_include_unparsed);
        json r = to_json(report);
        m["ece"] = r["ece"];
        m["n"] = r["n"];
        m["bins"] = r["bins"];
        m["unparsed"] = r["unparsed"];
        warnings.insert(warnings.end(), report.warnings.begin(), report.warnings.end());
        if (prior) {
            ReliabilityReport pre = ece(before, config.stepsize, config.ece_include_unparsed);
            m["pre_calibration"] = to_json(pre);
        }
    }
    m["tool_usage"] = to_json(tool_usage_distribution(outcomes));
    bool have_reference = std::all_of(outcomes.begin(), outcomes.end(),
                                      [](const EvalOutcome& o) { return o.allowed_tools.has_value(); });
    if (have_reference && !outcomes.empty()) {
        m["misuse_rate"] = misuse_rate(outcomes);
    } else {
        m["misuse_rate"] = nullptr;
        warnings.push_back("misuse rate not computed: no allowed tool set (enable self-evaluation or set "
                           "reference_allowed_tools)");
    }
    if (failures > 0) {
        warnings.push_back(std::to_string(failures) + " task(s) failed and were scored incorrect with no confidence");
    }
    m["flag_counts"] = flag_counts;
    m["prior_id"] = prior ? json(prior->provenance.run_id) : json();
    m["split_fingerprint"] = split_fp;
    m["config_fingerprint"] = config.fingerprint();
    m["warnings"] = warnings;
    return m;
}

std::string summary_text(const ExperimentConfig& config, const json& m, const fs::path& dir)
{
    std::ostringstream s;
    s << "run:        " << config.name << "\n";
    s << "variant:    " << m["label"].get<std::string>() << "\n";
    s << "model:      " << m["model"].get<std::string>() << "\n";
    s << "tasks:      " << m["tasks"].get<std::size_t>() << " (" << m["failures"].get<std::size_t>() << " failed)\n";
    s << "accuracy:   " << m["accuracy"].get<double>() << "\n";
    if (m.contains("ece")) {
        s << "ece:        " << m["ece"].get<double>() << "\n";
    }
    if (m.contains("pre_calibration")) {
        s << "ece before calibration: " << m["pre_calibration"]["ece"].get<double>() << "\n";
    }
    if (!m["misuse_rate"].is_null()) {
        s << "misuse:     " << m["misuse_rate"].get<double>() << "\n";
    }
    for (const auto& w : m["warnings"]) {
        s << "warning:    " << w.get<std::string>() << "\n";
    }
    s << "run dir:    " << dir.string() << "\n";
    return s.str();
}

} // namespace

RunSummary run_experiment(const ExperimentConfig& config)
{
    config.validate();
    Split split = load_split(config);
    SplitManifest manifest = make_manifest(split, config.split.rng_seed);
    const std::string split_fp = manifest.fingerprint();
    RunContext ctx = make_context(config, split);
    fs::path dir = prepare_run_dir(config, manifest);

    RunSummary summary;
    summary.run_dir = dir;
    std::vector<TaskResult> dev_results;
    if (config.uses_cpc()) {
        dev_results = run_tasks(ctx, split.dev, Phase::dev);
        ctx.prior = collect_prior(ctx, dev_results, split_fp);
        ctx.prior_id = ctx.prior->provenance.run_id;
        write_text(dir / "prior.json", serialize_prior(*ctx.prior) + "\n");
        summary.prior = ctx.prior;
    }
    std::vector<TaskResult> test_results = run_tasks(ctx, split.test, Phase::test);
    write_runlog(dir / "runlog.jsonl", dev_results, test_results);

    summary.metrics = build_metrics(config, test_results, split_fp, ctx.prior, summary.warnings);
    write_text(dir / "metrics.json", summary.metrics.dump(2) + "\n");
    write_text(dir / "summary.txt", summary_text(config, summary.metrics, dir));

    summary.tasks = test_results.size();
    for (const auto& r : test_results) {
        summary.failures += r.failed ? 1 : 0;
        summary.outcomes.push_back(r.outcome);
    }
    return summary;
}

RunSummary run_prior(const ExperimentConfig& config)
{
    config.validate();
    if (config.split.dev_size == 0) {
        throw ConfigError("prior collection needs split.dev_size > 0");
    }
    Split split = load_split(config);
    SplitManifest manifest = make_manifest(split, config.split.rng_seed);
    const std::string split_fp = manifest.fingerprint();
    RunContext ctx = make_context(config, split);
    fs::path dir = prepare_run_dir(config, manifest);

    std::vector<TaskResult> dev_results = run_tasks(ctx, split.dev, Phase::dev);
    PriorTable prior = collect_prior(ctx, dev_results, split_fp);
    write_text(dir / "prior.json", serialize_prior(prior) + "\n");
    write_runlog(dir / "runlog.jsonl", dev_results, {});

    RunSummary summary;
    summary.run_dir = dir;
    summary.tasks = dev_results.size();
    for (const auto& r : dev_results) {
        summary.failures += r.failed ? 1 : 0;
        summary.outcomes.push_back(r.outcome);
    }
    summary.prior = std::move(prior);
    return summary;
}

} // namespace toolcal
