#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvarplan/domains.hpp"
#include "cvarplan/errors.hpp"
#include "cvarplan/eval.hpp"
#include "cvarplan/exec.hpp"
#include "cvarplan/mdp_io.hpp"
#include "cvarplan/persist.hpp"
#include "cvarplan/run_config.hpp"
#include "cvarplan/solver_cvar.hpp"
#include "cvarplan/solver_ev.hpp"
#include "cvarplan/solver_lex.hpp"
#include "cvarplan/solver_worst.hpp"

namespace fs = std::filesystem;
using namespace cvarplan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct DomainBundle {
    Mdp mdp;
    double report_offset = 0.0;
};

DomainBundle build_domain(const RunConfig& config) {
    DomainBundle bundle;
    if (!config.mdp_file.empty()) {
        bundle.mdp = load_mdp_file(config.mdp_file);
        return bundle;
    }
    if (config.domain == "inventory") {
        bundle.mdp = build_inventory_control();
        bundle.report_offset = inventory_report_offset();
    } else if (config.domain == "betting") {
        bundle.mdp = build_betting_game();
    } else if (config.domain == "dst") {
        const DstConfig layout = config.dst_layout.empty()
                                     ? default_dst_config()
                                     : load_dst_layout(config.dst_layout);
        bundle.mdp = build_deep_sea_treasure(layout);
    } else if (config.domain == "desk") {
        bundle.mdp = build_desk_instance();
    } else {
        throw ConfigError("unknown domain '" + config.domain + "'");
    }
    return bundle;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot write file: " + path.string());
    }
    out << text;
}

VarConvention convention_from(const std::string& name) {
    return name == "upper" ? VarConvention::kUpper : VarConvention::kLower;
}

// Removes the run directory contents written so far when solving fails
// partway, so no stale partial outputs survive.
struct OutputGuard {
    fs::path dir;
    std::vector<fs::path> written;
    bool committed = false;

    ~OutputGuard() {
        if (committed) {
            return;
        }
        for (const fs::path& path : written) {
            std::error_code ec;
            fs::remove(path, ec);
        }
    }
};

int cmd_solve(const RunConfig& config) {
    validate_config(config);
    const DomainBundle bundle = build_domain(config);
    require_valid(bundle.mdp);

    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);
    OutputGuard guard{out_dir, {}, false};

    Manifest manifest;
    manifest.domain = config.domain.empty() ? "mdp-file" : config.domain;
    manifest.report_offset = bundle.report_offset;
    manifest.alphas = config.alphas;
    manifest.config_hash = fnv1a_hex(solver_fingerprint(config));
    manifest.var_convention = config.var_convention;
    manifest.xi_tol = config.xi_tol;

    const std::string model_text = write_mdp_document(bundle.mdp);
    manifest.model_hash = fnv1a_hex(model_text);
    write_text_file(out_dir / manifest.model_file, model_text);
    guard.written.push_back(out_dir / manifest.model_file);

    using clock = std::chrono::steady_clock;
    const auto timed = [&manifest](const std::string& name, auto&& fn) {
        const auto begin = clock::now();
        auto result = fn();
        manifest.timings_s[name] =
            std::chrono::duration<double>(clock::now() - begin).count();
        return result;
    };

    const ValueTable ev = timed("ev", [&] {
        return solve_expected_value(bundle.mdp, config.epsilon, config.max_sweeps);
    });
    save_value_table(ev, out_dir / manifest.ev_file);
    guard.written.push_back(out_dir / manifest.ev_file);

    const WorstCaseSolution worst = timed("worst", [&] {
        return solve_worst_case(bundle.mdp, config.epsilon, config.max_sweeps);
    });
    save_worst_case(worst, out_dir / manifest.worst_file);
    guard.written.push_back(out_dir / manifest.worst_file);

    const YGrid grid = YGrid::build(config.ygrid_points, config.y_min);
    const RandomSource var_random(config.seed);
    for (double alpha : config.alphas) {
        const std::string key = format_number(alpha);
        const CvarSolution cvar = timed("cvar_" + key, [&] {
            return cvar_value_iteration(bundle.mdp, grid, worst, config.epsilon,
                                        config.max_sweeps);
        });
        const std::string cvar_file = "cvar_a" + key + ".json";
        save_cvar_solution(cvar, out_dir / cvar_file);
        guard.written.push_back(out_dir / cvar_file);
        manifest.cvar_files[key] = cvar_file;
        std::cout << "solved cvar alpha=" << key << ": value at initial state = "
                  << format_number(query_value(cvar, bundle.mdp.initial, alpha))
                  << "\n";

        const LexSolution lex = timed("lex_" + key, [&] {
            const VarEstimate var = estimate_var(
                bundle.mdp, cvar, alpha, config.var_episodes, var_random,
                convention_from(config.var_convention), config.var_margin);
            const CostGrid cost_grid =
                CostGrid::uniform(var.value, config.cost_grid_points);
            return solve_constrained_ev(bundle.mdp, worst, var, cost_grid,
                                        config.epsilon, config.max_sweeps);
        });
        const std::string lex_file = "lex_a" + key + ".json";
        save_lex_solution(lex, out_dir / lex_file);
        guard.written.push_back(out_dir / lex_file);
        manifest.lex_files[key] = lex_file;
        std::cout << "solved lex alpha=" << key
                  << ": VaR estimate = " << format_number(lex.var.value)
                  << (lex.root_feasible ? "" : " (root cell above worst-case budget)")
                  << "\n";
    }

    save_manifest(manifest, out_dir / "manifest.json");
    guard.written.push_back(out_dir / "manifest.json");
    guard.committed = true;
    std::cout << "wrote " << guard.written.size() << " files to " << out_dir.string()
              << "\n";
    return kExitOk;
}

struct EvalOptions {
    std::string solutions_dir;
    std::vector<std::string> strategies{"cvar-wc", "cvar-ev", "ev"};
    int episodes = 20000;
    std::uint64_t seed = 1;
    int histogram_bins = 100;
    int bootstrap_resamples = 1000;
};

int cmd_evaluate(const EvalOptions& options) {
    const fs::path dir(options.solutions_dir);
    const Manifest manifest = load_manifest(dir / "manifest.json");

    const std::string model_text = read_text_file(dir / manifest.model_file);
    if (fnv1a_hex(model_text) != manifest.model_hash) {
        throw ParseError("stale solutions: model hash mismatch in " + dir.string());
    }
    Mdp mdp = parse_mdp_document(model_text);
    require_valid(mdp);

    EvalParams params;
    params.episodes = options.episodes;
    params.alphas = manifest.alphas;
    params.seed = options.seed;
    params.histogram_bins = options.histogram_bins;
    params.bootstrap_resamples = options.bootstrap_resamples;
    params.var_convention = convention_from(manifest.var_convention);
    params.report_offset = manifest.report_offset;
    params.exec.xi_tol = manifest.xi_tol;

    const ValueTable ev = load_value_table(dir / manifest.ev_file, mdp);

    std::vector<EvaluationSummary> summaries;
    for (const std::string& name : options.strategies) {
        const std::optional<Strategy> strategy = parse_strategy(name);
        if (!strategy) {
            throw ConfigError("unknown strategy '" + name + "'");
        }
        if (*strategy == Strategy::kExpectedValue) {
            SolutionBundle bundle;
            bundle.ev = &ev;
            EvaluationSummary summary = evaluate(mdp, *strategy, bundle, params);
            summaries.push_back(summary);
            write_text_file(dir / "hist_ev.csv", histogram_csv(summary));
            continue;
        }
        for (double alpha : manifest.alphas) {
            const std::string key = format_number(alpha);
            const CvarSolution cvar =
                load_cvar_solution(dir / manifest.cvar_files.at(key), mdp);
            LexSolution lex;
            SolutionBundle bundle;
            bundle.cvar = &cvar;
            bundle.alpha = alpha;
            if (*strategy == Strategy::kCvarExpectedValue) {
                lex = load_lex_solution(dir / manifest.lex_files.at(key), mdp);
                bundle.lex = &lex;
            }
            EvalParams run = params;
            run.alphas = {alpha};  // each solve-alpha reports at its own level
            EvaluationSummary summary = evaluate(mdp, *strategy, bundle, run);
            summaries.push_back(summary);
            write_text_file(dir / ("hist_" + summary.strategy + "_a" + key + ".csv"),
                            histogram_csv(summary));
        }
    }

    const std::string csv = summary_csv(summaries);
    write_text_file(dir / "summary.csv", csv);
    std::cout << csv;
    return kExitOk;
}

struct SummaryRow {
    std::string name;
    double alpha = 0.0;
    long n = 0;
    double mean = 0.0;
    double mean_se = 0.0;
    double var = 0.0;
    double cvar = 0.0;
    double cvar_se = 0.0;
};

std::vector<SummaryRow> parse_summary_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open summary: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "name,alpha,n,mean,mean_se,var,cvar,cvar_se") {
        throw ParseError(path.string() + ": not a summary CSV");
    }
    std::vector<SummaryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        SummaryRow row;
        std::string token;
        std::getline(fields, row.name, ',');
        const auto next_double = [&fields, &token, &path]() {
            if (!std::getline(fields, token, ',')) {
                throw ParseError(path.string() + ": short summary row");
            }
            return std::stod(token);
        };
        row.alpha = next_double();
        row.n = static_cast<long>(next_double());
        row.mean = next_double();
        row.mean_se = next_double();
        row.var = next_double();
        row.cvar = next_double();
        row.cvar_se = next_double();
        rows.push_back(row);
    }
    return rows;
}

int cmd_compare(const std::vector<std::string>& summary_paths) {
    std::vector<SummaryRow> rows;
    std::string domain;
    for (const std::string& path_text : summary_paths) {
        const fs::path path(path_text);
        const fs::path manifest_path = path.parent_path() / "manifest.json";
        std::string row_domain = "unknown";
        if (fs::exists(manifest_path)) {
            row_domain = load_manifest(manifest_path).domain;
        }
        if (domain.empty()) {
            domain = row_domain;
        } else if (domain != row_domain) {
            throw ConfigError("mismatched domains: '" + domain + "' vs '" +
                              row_domain + "'");
        }
        for (const SummaryRow& row : parse_summary_csv(path)) {
            rows.push_back(row);
        }
    }
    if (rows.size() < 2) {
        throw ConfigError("need two strategies to compare");
    }

    // Group by alpha; within a group, mark the lexicographically best row:
    // lowest mean among rows whose CVaR is within 3 combined standard errors
    // of the minimum. Ties break by name for determinism.
    std::map<double, std::vector<size_t>> groups;
    for (size_t i = 0; i < rows.size(); ++i) {
        groups[rows[i].alpha].push_back(i);
    }
    std::vector<bool> best(rows.size(), false);
    for (const auto& [alpha, members] : groups) {
        if (members.size() < 2) {
            continue;
        }
        size_t min_cvar = members.front();
        for (size_t i : members) {
            if (rows[i].cvar < rows[min_cvar].cvar) {
                min_cvar = i;
            }
        }
        std::optional<size_t> winner;
        for (size_t i : members) {
            const double combined = 3.0 * std::hypot(rows[i].cvar_se,
                                                     rows[min_cvar].cvar_se);
            if (rows[i].cvar <= rows[min_cvar].cvar + combined) {
                if (!winner || rows[i].mean < rows[*winner].mean ||
                    (rows[i].mean == rows[*winner].mean &&
                     rows[i].name < rows[*winner].name)) {
                    winner = i;
                }
            }
        }
        if (winner) {
            best[*winner] = true;
        }
    }

    std::cout << "domain: " << domain << "\n";
    std::cout << "name,alpha,n,mean,mean_se,var,cvar,cvar_se,best\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        const SummaryRow& row = rows[i];
        std::cout << row.name << ',' << format_number(row.alpha) << ',' << row.n << ','
                  << format_number(row.mean) << ',' << format_number(row.mean_se) << ','
                  << format_number(row.var) << ',' << format_number(row.cvar) << ','
                  << format_number(row.cvar_se) << ',' << (best[i] ? "*" : "") << "\n";
    }
    return kExitOk;
}

int cmd_gen_domain(const RunConfig& config, const std::string& out_file) {
    if (config.domain.empty()) {
        throw ConfigError("gen-domain needs --domain");
    }
    const DomainBundle bundle = build_domain(config);
    require_valid(bundle.mdp);
    write_mdp_file(bundle.mdp, out_file);
    std::cout << "wrote " << out_file << " (" << bundle.mdp.n_states() << " states)\n";
    return kExitOk;
}

int cmd_validate(const std::string& file) {
    const Mdp mdp = read_mdp_file(file);
    const ValidationReport report = validate_mdp(mdp);
    if (report.ok()) {
        std::cout << "ok: " << file << " (" << mdp.n_states() << " states)\n";
        return kExitOk;
    }
    for (const std::string& violation : report.violations) {
        std::cout << "violation: " << violation << "\n";
    }
    return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-averse planning toolkit for stochastic shortest path MDPs"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_file;

    const auto add_domain_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_file, "JSON config file");
        cmd->add_option("--domain", config.domain,
                        "builtin domain: inventory, betting, dst, desk");
        cmd->add_option("--mdp", config.mdp_file, "MDP document to load");
        cmd->add_option("--layout", config.dst_layout, "layout file for dst");
    };

    auto* solve = app.add_subcommand("solve", "solve all strategies and persist them");
    add_domain_flags(solve);
    solve->add_option("--alpha", config.alphas, "confidence levels")
        ->delimiter(',');
    solve->add_option("--out", config.output_dir, "output directory");
    solve->add_option("--ygrid-points", config.ygrid_points, "budget grid size");
    solve->add_option("--y-min", config.y_min, "smallest positive budget knot");
    solve->add_option("--cost-grid-points", config.cost_grid_points,
                      "cost grid size");
    solve->add_option("--epsilon", config.epsilon, "convergence threshold");
    solve->add_option("--max-sweeps", config.max_sweeps, "sweep limit");
    solve->add_option("--xi-tol", config.xi_tol, "zero-perturbation threshold");
    solve->add_option("--var-convention", config.var_convention, "lower or upper");
    solve->add_option("--var-episodes", config.var_episodes,
                      "episodes for the VaR estimate");
    solve->add_flag("--var-margin", config.var_margin,
                    "back the VaR estimate off by one quantile step");
    solve->add_option("--seed", config.seed, "seed for the VaR estimate");

    EvalOptions eval_options;
    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "run episodes against persisted solutions");
    evaluate_cmd->add_option("--solutions", eval_options.solutions_dir,
                             "directory written by solve")
        ->required();
    evaluate_cmd->add_option("--strategies", eval_options.strategies,
                             "strategies: cvar-wc, cvar-ev, ev")
        ->delimiter(',');
    evaluate_cmd->add_option("--episodes", eval_options.episodes, "episode count");
    evaluate_cmd->add_option("--seed", eval_options.seed, "master seed");
    evaluate_cmd->add_option("--bins", eval_options.histogram_bins, "histogram bins");
    evaluate_cmd->add_option("--bootstrap", eval_options.bootstrap_resamples,
                             "bootstrap resamples");

    std::vector<std::string> compare_paths;
    auto* compare = app.add_subcommand("compare", "align summaries and mark the best");
    compare->add_option("summaries", compare_paths, "summary.csv files")->required();

    std::string gen_out = "mdp.json";
    auto* gen = app.add_subcommand("gen-domain", "write a builtin domain as a document");
    add_domain_flags(gen);
    gen->add_option("--out", gen_out, "output MDP document");

    std::string validate_file;
    auto* validate = app.add_subcommand("validate", "check an MDP document");
    validate->add_option("file", validate_file, "MDP document")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) {
            // The file provides the base; flags passed explicitly win.
            RunConfig base = load_run_config(config_file);
            const auto used = [&](const std::string& flag) {
                const CLI::App* sub = solve->parsed() ? solve : gen;
                const CLI::Option* opt = sub->get_option_no_throw(flag);
                return opt != nullptr && opt->count() > 0;
            };
            if (!used("--domain")) config.domain = base.domain;
            if (!used("--mdp")) config.mdp_file = base.mdp_file;
            if (!used("--layout")) config.dst_layout = base.dst_layout;
            if (!used("--alpha")) config.alphas = base.alphas;
            if (!used("--out")) config.output_dir = base.output_dir;
            if (!used("--ygrid-points")) config.ygrid_points = base.ygrid_points;
            if (!used("--y-min")) config.y_min = base.y_min;
            if (!used("--cost-grid-points"))
                config.cost_grid_points = base.cost_grid_points;
            if (!used("--epsilon")) config.epsilon = base.epsilon;
            if (!used("--max-sweeps")) config.max_sweeps = base.max_sweeps;
            if (!used("--xi-tol")) config.xi_tol = base.xi_tol;
            if (!used("--var-convention")) config.var_convention = base.var_convention;
            if (!used("--var-episodes")) config.var_episodes = base.var_episodes;
            if (!used("--var-margin")) config.var_margin = base.var_margin;
            if (!used("--seed")) config.seed = base.seed;
            config.episodes = base.episodes;
            config.histogram_bins = base.histogram_bins;
            config.bootstrap_resamples = base.bootstrap_resamples;
        }

        if (solve->parsed()) {
            return cmd_solve(config);
        }
        if (evaluate_cmd->parsed()) {
            return cmd_evaluate(eval_options);
        }
        if (compare->parsed()) {
            return cmd_compare(compare_paths);
        }
        if (gen->parsed()) {
            return cmd_gen_domain(config, gen_out);
        }
        if (validate->parsed()) {
            return cmd_validate(validate_file);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
