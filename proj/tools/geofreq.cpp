// geofreq: run geometric-frequency scenarios and analyze state matrices.
//
// Exit codes: 0 success, 1 error, 2 a scenario check failed,
// 3 matrix not diagonalizable.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "geofreq/pipeline.hpp"
#include "geofreq/scenario.hpp"

namespace fs = std::filesystem;
using namespace geofreq;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kCheckFailed = 2;
constexpr int kNotDiagonalizable = 3;

// combined exit code of several runs: error > not diagonalizable > check failed > ok
int severity(int code) {
    switch (code) {
    case kOk: return 0;
    case kCheckFailed: return 1;
    case kNotDiagonalizable: return 2;
    default: return 3;
    }
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Built-in name first, otherwise a config file path.
Scenario load_scenario(const std::string& arg) {
    if (auto s = find_builtin(arg)) return *s;
    if (!fs::is_regular_file(arg)) throw Error("'" + arg + "' is neither a built-in scenario nor a config file");
    try {
        return parse_config(read_file(arg));
    } catch (const ParseError& e) {
        throw ParseError(arg + ": " + e.what(), 0, e.field);
    }
}

struct Outcome {
    int code = kOk;
    std::string out;
    std::string err;
};

Outcome run_one(const std::string& arg, const RunOptions& opts) {
    Outcome o;
    try {
        const RunResult r = run_scenario(load_scenario(arg), opts);
        o.out = r.scenario.name + ": wrote " + r.csv_path.string() + ", " + r.summary_path.string();
        if (r.check.kind != CheckKind::None) {
            o.out += std::string("; check ") + check_name(r.check.kind) + (r.check.passed ? " PASS" : " FAIL");
            if (!r.check.passed) {
                o.out += " (" + r.check.detail + ")";
                o.code = kCheckFailed;
            }
        }
    } catch (const NonDiagonalizable& e) {
        o.code = kNotDiagonalizable;
        o.err = arg + ": " + e.what();
    } catch (const DivergedError& e) {
        o.code = kError;
        o.err = arg + ": " + e.what();
    } catch (const std::exception& e) {
        o.code = kError;
        o.err = arg + ": " + e.what();
    }
    return o;
}

int cmd_run(const std::vector<std::string>& names, const RunOptions& opts, unsigned jobs) {
    std::vector<Outcome> results(names.size());
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(names.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < names.size(); i = next++) results[i] = run_one(names[i], opts);
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
        worker();
    }
    int code = kOk;
    for (const auto& r : results) {
        if (!r.out.empty()) std::cout << r.out << '\n';
        if (!r.err.empty()) std::cerr << "error: " << r.err << '\n';
        if (severity(r.code) > severity(code)) code = r.code;
    }
    return code;
}

int cmd_analyze_matrix(const std::string& path) {
    try {
        const Mat A = parse_matrix(read_file(path));
        std::cout << analyze_matrix_report(A);
        return kOk;
    } catch (const NonDiagonalizable& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNotDiagonalizable;
    } catch (const std::exception& e) {
        std::cerr << "error: " << path << ": " << e.what() << '\n';
        return kError;
    }
}

int cmd_validate(const std::vector<std::string>& names) {
    int code = kOk;
    for (const auto& n : names) {
        try {
            const Scenario s = load_scenario(n);
            validate_scenario(s);
            std::cout << n << ": ok (" << s.name << ", " << system_kind(s.system) << ")\n";
        } catch (const std::exception& e) {
            std::cerr << "error: " << n << ": " << e.what() << '\n';
            code = kError;
        }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometric-frequency analysis of linear and nonlinear circuits"};
    app.require_subcommand(1);

    std::string out_dir = ".";
    std::optional<double> step, t_end;
    unsigned jobs = 1;
    bool no_modal = false;
    std::vector<std::string> run_names;
    auto* run = app.add_subcommand("run", "Run built-in scenarios or scenario config files");
    run->add_option("scenario", run_names, "Built-in name or config file")->required();
    run->add_option("--out-dir", out_dir, "Output directory")->envname("GEOFREQ_OUT");
    run->add_option("--step", step, "Override the integration step (s)")->check(CLI::PositiveNumber);
    run->add_option("--t-end", t_end, "Override the horizon (s)")->check(CLI::PositiveNumber);
    run->add_option("--jobs,-j", jobs, "Scenarios to run concurrently")->check(CLI::PositiveNumber);
    run->add_flag("--no-modal", no_modal, "Skip the real modal transform");

    std::string matrix_path;
    auto* am = app.add_subcommand("analyze-matrix", "Spectrum and real modal form of a matrix file");
    am->add_option("matrix-file", matrix_path, "First line N, then N rows")->required();

    auto* list = app.add_subcommand("list", "List built-in scenarios");

    std::vector<std::string> validate_names;
    auto* validate = app.add_subcommand("validate", "Parse and check scenarios without running them");
    validate->add_option("scenario", validate_names, "Built-in name or config file")->required();

    std::string show_name;
    auto* show = app.add_subcommand("show", "Print the config text of a built-in scenario");
    show->add_option("name", show_name, "Built-in name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kError;
    }

    if (*run) {
        RunOptions opts;
        opts.out_dir = out_dir;
        opts.step = step;
        opts.t_end = t_end;
        opts.no_modal = no_modal;
        return cmd_run(run_names, opts, jobs);
    }
    if (*am) return cmd_analyze_matrix(matrix_path);
    if (*list) {
        for (const auto& s : builtin_scenarios()) std::cout << s.name << "  " << s.description << '\n';
        return kOk;
    }
    if (*validate) return cmd_validate(validate_names);
    if (*show) {
        const auto s = find_builtin(show_name);
        if (!s) {
            std::cerr << "error: no built-in scenario '" << show_name << "'\n";
            return kError;
        }
        std::cout << to_config(*s);
        return kOk;
    }
    return kError;
}
