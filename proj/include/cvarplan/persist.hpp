#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cvarplan/solver_cvar.hpp"
#include "cvarplan/solver_ev.hpp"
#include "cvarplan/solver_lex.hpp"
#include "cvarplan/solver_worst.hpp"

namespace cvarplan {

// Versioned JSON solution documents. Loaders reject unknown versions and
// check state counts against the model they are used with.
constexpr int kSolutionFormatVersion = 1;

void save_value_table(const ValueTable& table, const std::filesystem::path& path);
ValueTable load_value_table(const std::filesystem::path& path, const Mdp& mdp);

void save_worst_case(const WorstCaseSolution& sol, const std::filesystem::path& path);
WorstCaseSolution load_worst_case(const std::filesystem::path& path, const Mdp& mdp);

void save_cvar_solution(const CvarSolution& sol, const std::filesystem::path& path);
// Rebuilds the envelope cache so the loaded solution is execution-ready.
CvarSolution load_cvar_solution(const std::filesystem::path& path, const Mdp& mdp);

void save_lex_solution(const LexSolution& sol, const std::filesystem::path& path);
LexSolution load_lex_solution(const std::filesystem::path& path, const Mdp& mdp);

// Run manifest: ties the persisted model, the solution documents and the
// solver fingerprint together so evaluation can run without re-solving and
// can detect stale artifacts.
struct Manifest {
    std::string domain;
    double report_offset = 0.0;
    std::vector<double> alphas;
    std::string config_hash;
    std::string model_file = "model.json";
    std::string model_hash;
    std::string var_convention = "lower";
    double xi_tol = 1e-6;
    std::map<std::string, std::string> cvar_files;  // format_number(alpha) -> file
    std::map<std::string, std::string> lex_files;
    std::string ev_file = "ev.json";
    std::string worst_file = "worst.json";
    std::map<std::string, double> timings_s;
};

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace cvarplan
