#include "toolcal/cli.hpp"

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "toolcal/error.hpp"
#include "toolcal/report.hpp"
#include "toolcal/runner.hpp"

namespace toolcal {

namespace {

struct BackendFlags {
    bool simulate = false;
    bool record = false;
    bool replay = false;
    std::string output_dir;
    std::size_t concurrency = 0;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags)
{
    cmd->add_flag("--simulate", flags.simulate, "Use the scripted simulator for every model role");
    auto* record = cmd->add_flag("--record", flags.record, "Call backends and persist responses to the cache");
    auto* replay = cmd->add_flag("--replay", flags.replay, "Answer every model call from the cache");
    record->excludes(replay);
    cmd->add_option("--output-dir", flags.output_dir, "Override the output directory");
    cmd->add_option("--concurrency", flags.concurrency, "Override the number of concurrent tasks")
        ->check(CLI::PositiveNumber);
}

ExperimentConfig configure(const std::string& path, const BackendFlags& flags)
{
    ExperimentConfig config = load_config(path);
    RunOverrides o;
    o.simulate = flags.simulate;
    if (flags.record) {
        o.backend_mode = BackendMode::record;
    } else if (flags.replay) {
        o.backend_mode = BackendMode::replay;
    }
    if (!flags.output_dir.empty()) {
        o.output_dir = flags.output_dir;
    }
    if (flags.concurrency > 0) {
        o.concurrency = flags.concurrency;
    }
    apply_overrides(config, o);
    return config;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Tool-use confidence calibration experiments", "toolcal"};
    app.require_subcommand(1);

    std::string config_path;
    BackendFlags run_flags;
    auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
    run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    add_backend_flags(run, run_flags);

    BackendFlags prior_flags;
    auto* prior = app.add_subcommand("prior", "Collect the confidence prior on the dev split only");
    prior->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    add_backend_flags(prior, prior_flags);

    std::vector<std::string> run_dirs;
    std::string json_out;
    auto* report = app.add_subcommand("report", "Compare finished runs");
    report->add_option("dirs", run_dirs, "Run directories")->required()->check(CLI::ExistingDirectory);
    report->add_option("--json", json_out, "Also write the tables as JSON to this path");

    std::string runlog;
    std::string task_id;
    auto* inspect = app.add_subcommand("inspect", "Print the run log records of one task");
    inspect->add_option("runlog", runlog, "runlog.jsonl")->required()->check(CLI::ExistingFile);
    inspect->add_option("task_id", task_id, "Task id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        err << app.help();
        return 2;
    }

    try {
        if (*run) {
            RunSummary s = run_experiment(configure(config_path, run_flags));
            std::ifstream summary(s.run_dir / "summary.txt");
            out << summary.rdbuf();
            return 0;
        }
        if (*prior) {
            RunSummary s = run_prior(configure(config_path, prior_flags));
            out << "prior written to " << (s.run_dir / "prior.json").string() << " from " << s.tasks
                << " dev tasks (" << s.failures << " failed)\n";
            return 0;
        }
        if (*report) {
            std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
            ComparisonReport r = build_report(dirs);
            out << render_text(r);
            if (!json_out.empty()) {
                std::ofstream j(json_out);
                if (!j) {
                    throw ConfigError("cannot write " + json_out);
                }
                j << to_json(r).dump(2) << "\n";
            }
            return 0;
        }
        if (*inspect) {
            auto records = find_task_records(runlog, task_id);
            if (records.empty()) {
                err << "toolcal: task '" << task_id << "' not found in " << runlog << "\n";
                return 1;
            }
            for (const auto& rec : records) {
                out << rec.dump(2) << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        err << "toolcal: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace toolcal
