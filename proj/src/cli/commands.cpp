#include "repairgraph/cli/commands.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "repairgraph/cli/config.hpp"
#include "repairgraph/common/digest.hpp"
#include "repairgraph/llm/gateway.hpp"
#include "repairgraph/memory/store.hpp"
#include "repairgraph/pipeline/pipeline.hpp"
#include "repairgraph/sandbox/executor.hpp"

namespace fs = std::filesystem;

namespace repairgraph::cli {
namespace {

struct CommonOptions {
    std::string config_path;
    bool mock = false;
    std::string cassette;
    std::string playbook;
    std::optional<double> timeout;
    std::optional<int> max_repairs;
    std::optional<int> k;
    std::optional<double> tau;
    std::optional<std::string> report_dir;
};

struct CommonBindings {
    double timeout = 0.0;
    int max_repairs = 0;
    int k = 0;
    double tau = 0.0;
    std::string report_dir;
    CLI::Option* timeout_opt = nullptr;
    CLI::Option* max_repairs_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* tau_opt = nullptr;
    CLI::Option* report_dir_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOptions& opts, CommonBindings& bind) {
    cmd->add_option("--config", opts.config_path, "path to a JSON config file");
    cmd->add_flag("--mock", opts.mock, "answer model calls from a scripted playbook");
    cmd->add_option("--cassette", opts.cassette, "replay model calls from this cassette");
    cmd->add_option("--playbook", opts.playbook, "playbook JSON for --mock runs");
    bind.timeout_opt =
        cmd->add_option("--timeout", bind.timeout, "sandbox timeout per execution, seconds");
    bind.max_repairs_opt =
        cmd->add_option("--max-repairs", bind.max_repairs, "repair attempts before giving up");
    bind.k_opt = cmd->add_option("--k", bind.k, "memory hits to retrieve");
    bind.tau_opt = cmd->add_option("--tau", bind.tau, "similarity threshold for a memory match");
    bind.report_dir_opt =
        cmd->add_option("--report-dir", bind.report_dir, "directory for JSON run reports");
}

void absorb(CommonOptions& opts, const CommonBindings& bind) {
    if (bind.timeout_opt->count() > 0) opts.timeout = bind.timeout;
    if (bind.max_repairs_opt->count() > 0) opts.max_repairs = bind.max_repairs;
    if (bind.k_opt->count() > 0) opts.k = bind.k;
    if (bind.tau_opt->count() > 0) opts.tau = bind.tau;
    if (bind.report_dir_opt->count() > 0) opts.report_dir = bind.report_dir;
}

CliConfig effective_config(const CommonOptions& opts) {
    CliConfig config = load_config(opts.config_path);
    if (opts.mock) config.backend.mode = llm::BackendMode::mock;
    if (!opts.cassette.empty()) {
        config.backend.cassette_path = opts.cassette;
        if (config.backend.mode != llm::BackendMode::record) {
            config.backend.mode = llm::BackendMode::replay;
        }
    }
    if (opts.timeout) config.default_timeout_s = *opts.timeout;
    if (opts.max_repairs) config.default_max_repairs = *opts.max_repairs;
    if (opts.k) config.k = *opts.k;
    if (opts.tau) config.tau = *opts.tau;
    if (opts.report_dir) config.report_dir = *opts.report_dir;
    config.validate();
    return config;
}

pipeline::PipelineConfig pipeline_config(const CliConfig& config) {
    pipeline::PipelineConfig pc;
    pc.k = config.k;
    pc.tau = config.tau;
    pc.timeout_s = config.default_timeout_s;
    return pc;
}

memory::MemoryStore open_store(const CliConfig& config) {
    if (fs::exists(config.memory_path)) return memory::MemoryStore::load(config.memory_path);
    return memory::MemoryStore();
}

void apply_playbook(llm::Gateway& gateway, const std::string& playbook_path) {
    if (playbook_path.empty()) return;
    gateway.set_playbook(llm::MockPlaybook::load(playbook_path));
}

fs::path write_report(const CliConfig& config, const nlohmann::json& report) {
    fs::create_directories(config.report_dir);
    const fs::path path =
        config.report_dir / (report.at("task_id").get<std::string>() + ".json");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write report file: " + path.string());
    out << report.dump(2) << "\n";
    return path;
}

std::string indent_block(const std::string& text) {
    std::ostringstream out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out << "    | " << line << "\n";
    return out.str();
}

std::string clip(const std::string& text, std::size_t limit) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

// One line per node transition, in the order the run visits them, so a log
// reads like the repair story: prompt, code, failure, memory, fix, retry.
void narrate(const graph::TraceStep& step, const pipeline::PipelineState& state,
             std::ostream& out) {
    out << "[" << step.step + 1 << "] " << step.node << "\n";
    if (step.node == "code_generation" && state.function_code) {
        out << indent_block(*state.function_code);
    } else if (step.node == "code_execution" && state.execution_result) {
        const sandbox::ExecutionResult& result = *state.execution_result;
        if (result.status == sandbox::ExecStatus::success) {
            out << "    all argument sets passed, last returned "
                << (result.return_value ? result.return_value->dump() : "null") << "\n";
        } else {
            out << "    " << to_string(result.status);
            if (result.error) {
                out << ": " << result.error->error_type << ": " << result.error->message;
            }
            if (state.current_args) out << " on args " << state.current_args->dump();
            out << "\n";
        }
    } else if (step.node == "bug_issue" && state.bug_report) {
        out << "    " << state.bug_report->error_type << " in "
            << state.bug_report->function_name << ": " << state.bug_report->error_message
            << "\n";
    } else if (step.node == "memory_search") {
        out << "    " << state.search_hits.size() << " candidate record(s)\n";
    } else if (step.node == "memory_filter") {
        out << "    " << state.filtered_hits.size() << " above threshold";
        if (state.matched_record_id) out << ", matched " << *state.matched_record_id;
        out << "\n";
    } else if ((step.node == "memory_create" || step.node == "memory_update") &&
               !state.memory_mutations.empty()) {
        const pipeline::MemoryMutation& mutation = state.memory_mutations.back();
        out << "    " << mutation.action << " " << mutation.record_id << ": "
            << clip(mutation.summary, 120) << "\n";
    } else if (step.node == "code_update" && state.candidate_fix) {
        out << indent_block(*state.candidate_fix);
    } else if (step.node == "code_repair") {
        out << "    fix applied, repair " << state.repair_count << "\n";
    }
}

int exit_for(pipeline::PipelineStatus status) {
    switch (status) {
        case pipeline::PipelineStatus::success:
            return kExitSuccess;
        case pipeline::PipelineStatus::failed_max_repairs:
            return kExitRepairsExhausted;
        case pipeline::PipelineStatus::backend_error:
        case pipeline::PipelineStatus::in_progress:
            return kExitBackendError;
    }
    return kExitBackendError;
}

struct RunArgs {
    std::string prompt;
    std::string args_json;
};

int cmd_run(const CommonOptions& opts, const RunArgs& run_args, std::ostream& out,
            std::ostream& err) {
    const CliConfig config = effective_config(opts);

    pipeline::TaskSpec task;
    task.id = "task-" + digest::fnv1a64_hex(run_args.prompt).substr(0, 8);
    task.prompt = run_args.prompt;
    task.max_repairs = config.default_max_repairs;
    try {
        task.arg_sets = nlohmann::json::parse(run_args.args_json);
    } catch (const nlohmann::json::exception& e) {
        err << "error: --args is not valid JSON: " << e.what() << "\n";
        return kExitUsage;
    }
    try {
        task.validate();
    } catch (const pipeline::PipelineError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    llm::Gateway gateway(config.backend);
    apply_playbook(gateway, opts.playbook);
    memory::MemoryStore store = open_store(config);
    const sandbox::Executor executor(sandbox::SandboxConfig{config.interpreter_path});
    const pipeline::Pipeline pipe(gateway, store, executor, pipeline_config(config));

    out << "task " << task.id << ": " << task.prompt << "\n";
    const pipeline::TaskOutcome outcome = pipe.run_task(
        task, [&out](const graph::TraceStep& step, const pipeline::PipelineState& state) {
            narrate(step, state, out);
        });

    store.persist(config.memory_path);
    const nlohmann::json report = pipeline::make_report(outcome, pipe.config());
    const fs::path report_path = write_report(config, report);

    out << "status: " << report.at("status").get<std::string>() << "\n";
    out << "repairs used: " << outcome.repairs_used << "\n";
    if (outcome.final_state.execution_result &&
        outcome.final_state.execution_result->return_value) {
        out << "final return: " << outcome.final_state.execution_result->return_value->dump()
            << "\n";
    }
    if (!outcome.error.empty()) err << "error: " << outcome.error << "\n";
    out << "report: " << report_path.string() << "\n";
    return exit_for(outcome.final_state.status);
}

struct BatchEntry {
    pipeline::TaskSpec task;
    nlohmann::json playbook;  // optional per-task playbook for mock runs
    fs::path file;
};

struct BatchArgs {
    std::string corpus_dir;
    int jobs = 1;
};

int cmd_batch(const CommonOptions& opts, const BatchArgs& batch_args, std::ostream& out,
              std::ostream& err) {
    const CliConfig config = effective_config(opts);

    if (!fs::is_directory(batch_args.corpus_dir)) {
        err << "error: not a directory: " << batch_args.corpus_dir << "\n";
        return kExitUsage;
    }
    std::vector<fs::path> files;
    for (const fs::directory_entry& entry : fs::directory_iterator(batch_args.corpus_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        err << "error: no task files in " << batch_args.corpus_dir << "\n";
        return kExitUsage;
    }
    if (batch_args.jobs < 1) {
        err << "error: --jobs must be at least 1\n";
        return kExitUsage;
    }

    std::vector<BatchEntry> entries;
    for (const fs::path& file : files) {
        std::ifstream in(file);
        nlohmann::json doc;
        try {
            in >> doc;
            BatchEntry entry;
            entry.task = pipeline::TaskSpec::from_json(doc);
            if (entry.task.max_repairs == 5 && !doc.contains("max_repairs")) {
                entry.task.max_repairs = config.default_max_repairs;
            }
            entry.playbook = doc.value("playbook", nlohmann::json());
            entry.file = file;
            entries.push_back(std::move(entry));
        } catch (const std::exception& e) {
            err << "error: bad task file " << file.string() << ": " << e.what() << "\n";
            return kExitNotFound;
        }
    }

    memory::MemoryStore store = open_store(config);
    const sandbox::Executor executor(sandbox::SandboxConfig{config.interpreter_path});
    std::vector<nlohmann::json> reports(entries.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) return;
            const BatchEntry& entry = entries[i];
            try {
                llm::Gateway gateway(config.backend);
                if (entry.playbook.is_array()) {
                    gateway.set_playbook(llm::MockPlaybook::from_json(entry.playbook));
                }
                apply_playbook(gateway, opts.playbook);
                const pipeline::Pipeline pipe(gateway, store, executor,
                                              pipeline_config(config));
                reports[i] = pipeline::make_report(pipe.run_task(entry.task), pipe.config());
            } catch (const std::exception& e) {
                reports[i] = nlohmann::json{
                    {"task_id", entry.task.id},    {"status", "backend_error"},
                    {"repairs_used", 0},           {"final_code", nullptr},
                    {"final_return", nullptr},     {"trace", nlohmann::json::array()},
                    {"memory_mutations", nlohmann::json::array()},
                    {"k", config.k},               {"tau", config.tau},
                    {"wall_ms", 0.0},              {"error_message", e.what()},
                };
            }
        }
    };

    const int thread_count =
        std::min<int>(batch_args.jobs, static_cast<int>(entries.size()));
    std::vector<std::thread> pool;
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    store.persist(config.memory_path);

    std::vector<std::size_t> order(reports.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return reports[a].at("task_id").get<std::string>() <
               reports[b].at("task_id").get<std::string>();
    });

    std::size_t id_width = 4;
    for (const nlohmann::json& report : reports) {
        id_width = std::max(id_width, report.at("task_id").get<std::string>().size());
    }
    out << std::left << std::setw(static_cast<int>(id_width) + 2) << "task"
        << std::setw(20) << "status" << std::setw(9) << "repairs"
        << "wall_ms" << "\n";
    bool any_repairs_exhausted = false;
    bool any_backend_error = false;
    for (const std::size_t i : order) {
        const nlohmann::json& report = reports[i];
        write_report(config, report);
        const std::string status = report.at("status").get<std::string>();
        if (status == "failed_max_repairs") any_repairs_exhausted = true;
        if (status != "success" && status != "failed_max_repairs") any_backend_error = true;
        out << std::left << std::setw(static_cast<int>(id_width) + 2)
            << report.at("task_id").get<std::string>() << std::setw(20) << status
            << std::setw(9) << report.at("repairs_used").get<int>() << std::fixed
            << std::setprecision(1) << report.at("wall_ms").get<double>() << "\n";
    }
    out.unsetf(std::ios::fixed);

    if (any_backend_error) return kExitBackendError;
    if (any_repairs_exhausted) return kExitRepairsExhausted;
    return kExitSuccess;
}

int cmd_memory_list(const CommonOptions& opts, std::ostream& out) {
    const CliConfig config = effective_config(opts);
    const memory::MemoryStore store = open_store(config);
    out << std::left << std::setw(38) << "id" << std::setw(24) << "error_type"
        << std::setw(7) << "count" << "updated_at" << "\n";
    for (const memory::MemoryRecord& record : store.records()) {
        out << std::left << std::setw(38) << record.id << std::setw(24) << record.error_type
            << std::setw(7) << record.occurrence_count
            << memory::format_timestamp(record.updated_at_ms) << "\n";
    }
    out << store.size() << " record(s)\n";
    return kExitSuccess;
}

int cmd_memory_search(const CommonOptions& opts, const std::string& query, std::ostream& out) {
    const CliConfig config = effective_config(opts);
    const memory::MemoryStore store = open_store(config);
    const std::vector<memory::SearchHit> hits = store.search(query, config.k);
    for (const memory::SearchHit& hit : hits) {
        out << std::fixed << std::setprecision(4) << hit.score << "  " << hit.record.id << "  "
            << hit.record.error_type << "  " << clip(hit.record.summary, 100) << "\n";
    }
    out.unsetf(std::ios::fixed);
    out << hits.size() << " hit(s)\n";
    return kExitSuccess;
}

int cmd_memory_show(const CommonOptions& opts, const std::string& id, std::ostream& out,
                    std::ostream& err) {
    const CliConfig config = effective_config(opts);
    const memory::MemoryStore store = open_store(config);
    const std::optional<memory::MemoryRecord> record = store.get(id);
    if (!record) {
        err << "error: no record with id " << id << "\n";
        return kExitNotFound;
    }
    out << record->to_json().dump(2) << "\n";
    return kExitSuccess;
}

int cmd_trace(const std::string& report_file, std::ostream& out, std::ostream& err) {
    std::ifstream in(report_file);
    if (!in) {
        err << "error: cannot read report file: " << report_file << "\n";
        return kExitNotFound;
    }
    nlohmann::json report;
    try {
        in >> report;
        const nlohmann::json& trace = report.at("trace");
        out << std::left << std::setw(6) << "step" << std::setw(18) << "node"
            << "ms" << "\n";
        double total_ms = 0.0;
        for (const nlohmann::json& step : trace) {
            const double ms = step.value("ms", 0.0);
            total_ms += ms;
            out << std::left << std::setw(6) << step.at("step").get<int>() << std::setw(18)
                << step.at("node").get<std::string>() << std::fixed << std::setprecision(3)
                << ms << "\n";
        }
        out.unsetf(std::ios::fixed);
        out << trace.size() << " step(s), " << std::fixed << std::setprecision(1) << total_ms
            << " ms total\n";
        out.unsetf(std::ios::fixed);
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << report_file << " is not a run report: " << e.what() << "\n";
        return kExitNotFound;
    }
    return kExitSuccess;
}

int cmd_config_check(const CommonOptions& opts, std::ostream& out) {
    bool all_ok = true;
    const auto finding = [&](bool ok, const std::string& label, const std::string& detail) {
        all_ok = all_ok && ok;
        out << (ok ? "ok    " : "FAIL  ") << label << ": " << detail << "\n";
    };

    CliConfig config;
    try {
        config = load_config(opts.config_path);
        if (opts.mock) config.backend.mode = llm::BackendMode::mock;
        std::string source = "built-in defaults";
        if (!opts.config_path.empty()) {
            source = opts.config_path;
        } else if (const char* env = std::getenv("REPAIRGRAPH_CONFIG");
                   env != nullptr && *env != '\0') {
            source = std::string(env) + " (REPAIRGRAPH_CONFIG)";
        }
        finding(true, "config", source);
    } catch (const ConfigError& e) {
        finding(false, "config", e.what());
        return kExitFailure;
    }

    try {
        const sandbox::Executor executor(sandbox::SandboxConfig{config.interpreter_path});
        sandbox::ExecutionRequest probe;
        probe.source = "def probe():\n    return \"ok\"";
        probe.entry = "probe";
        probe.args = nlohmann::json::array();
        probe.timeout_s = 10.0;
        const sandbox::ExecutionResult result = executor.execute(probe);
        if (result.ok()) {
            finding(true, "interpreter",
                    sandbox::resolve_python(sandbox::SandboxConfig{config.interpreter_path}));
        } else {
            finding(false, "interpreter", "probe run failed with status " +
                                              std::string(to_string(result.status)));
        }
    } catch (const std::exception& e) {
        finding(false, "interpreter", e.what());
    }

    if (fs::exists(config.memory_path)) {
        try {
            const memory::MemoryStore store = memory::MemoryStore::load(config.memory_path);
            finding(true, "memory",
                    config.memory_path.string() + " (" + std::to_string(store.size()) +
                        " records)");
        } catch (const std::exception& e) {
            finding(false, "memory", e.what());
        }
    } else {
        finding(true, "memory", config.memory_path.string() + " (will be created)");
    }

    if (config.backend.mode == llm::BackendMode::live ||
        config.backend.mode == llm::BackendMode::record) {
        const char* key = std::getenv(config.backend.api_key_env.c_str());
        finding(key != nullptr && *key != '\0', "api key",
                config.backend.api_key_env + (key && *key ? " is set" : " is not set"));
        httplib::Client client(config.backend.base_url);
        client.set_connection_timeout(5, 0);
        const httplib::Result probe = client.Get("/");
        finding(probe != nullptr, "backend",
                config.backend.base_url +
                    (probe ? " reachable" : " unreachable: " + httplib::to_string(probe.error())));
    } else {
        finding(true, "backend",
                std::string("offline mode (") + to_string(config.backend.mode) +
                    "), no probe needed");
    }

    return all_ok ? kExitSuccess : kExitFailure;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"graph-driven bug fixing with a sandboxed interpreter and a bug memory"};
    app.name("repairgraph");
    app.require_subcommand(1);

    CommonOptions run_opts, batch_opts, memory_opts, check_opts;
    CommonBindings run_bind, batch_bind, memory_bind, check_bind;

    RunArgs run_args;
    CLI::App* run_cmd = app.add_subcommand("run", "generate, execute, and repair one task");
    run_cmd->add_option("prompt", run_args.prompt, "natural language task description")
        ->required();
    run_cmd->add_option("--args", run_args.args_json,
                        "JSON list of argument lists, e.g. [[10,2],[10,0]]")
        ->required();
    add_common(run_cmd, run_opts, run_bind);

    BatchArgs batch_args;
    CLI::App* batch_cmd = app.add_subcommand("batch", "run every task file in a directory");
    batch_cmd->add_option("corpus_dir", batch_args.corpus_dir, "directory of task JSON files")
        ->required();
    batch_cmd->add_option("--jobs", batch_args.jobs, "worker threads");
    add_common(batch_cmd, batch_opts, batch_bind);

    CLI::App* memory_cmd = app.add_subcommand("memory", "inspect the bug knowledge base");
    memory_cmd->require_subcommand(1);
    CLI::App* memory_list = memory_cmd->add_subcommand("list", "print all records");
    memory_list->fallthrough();
    std::string memory_query;
    CLI::App* memory_search = memory_cmd->add_subcommand("search", "rank records for a query");
    memory_search->add_option("query", memory_query, "free text query")->required();
    memory_search->fallthrough();
    std::string memory_id;
    CLI::App* memory_show = memory_cmd->add_subcommand("show", "print one record fully");
    memory_show->add_option("id", memory_id, "record id")->required();
    memory_show->fallthrough();
    add_common(memory_cmd, memory_opts, memory_bind);

    std::string trace_file;
    CLI::App* trace_cmd = app.add_subcommand("trace", "pretty-print a run report's node path");
    trace_cmd->add_option("report_file", trace_file, "path to a JSON run report")->required();

    CLI::App* check_cmd =
        app.add_subcommand("config-check", "validate config, interpreter, memory, and backend");
    add_common(check_cmd, check_opts, check_bind);

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.push_back("repairgraph");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(argv_storage.size());
    for (const std::string& s : argv_storage) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (run_cmd->parsed()) {
            absorb(run_opts, run_bind);
            return cmd_run(run_opts, run_args, out, err);
        }
        if (batch_cmd->parsed()) {
            absorb(batch_opts, batch_bind);
            return cmd_batch(batch_opts, batch_args, out, err);
        }
        if (memory_cmd->parsed()) {
            absorb(memory_opts, memory_bind);
            if (memory_list->parsed()) return cmd_memory_list(memory_opts, out);
            if (memory_search->parsed()) return cmd_memory_search(memory_opts, memory_query, out);
            if (memory_show->parsed()) return cmd_memory_show(memory_opts, memory_id, out, err);
        }
        if (trace_cmd->parsed()) return cmd_trace(trace_file, out, err);
        if (check_cmd->parsed()) return cmd_config_check(check_opts, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const llm::IoFailureError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNotFound;
    } catch (const llm::LlmError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const memory::MemoryError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNotFound;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitFailure;
    }
    err << "error: no subcommand\n";
    return kExitUsage;
}

}  // namespace repairgraph::cli
