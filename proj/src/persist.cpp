#include "cvarplan/persist.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cvarplan/errors.hpp"

namespace cvarplan {

using nlohmann::json;

namespace {

json read_document(const std::filesystem::path& path, const std::string& kind) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open solution document: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "cvarplan-solution" &&
        doc.value("format", "") != "cvarplan-manifest") {
        throw ParseError(path.string() + ": not a cvarplan document");
    }
    if (doc.value("version", -1) != kSolutionFormatVersion) {
        throw ParseError(path.string() + ": unsupported document version " +
                         std::to_string(doc.value("version", -1)));
    }
    if (!kind.empty() && doc.value("kind", "") != kind) {
        throw ParseError(path.string() + ": expected a '" + kind + "' document");
    }
    return doc;
}

void write_document(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot write document: " + path.string());
    }
    out << doc.dump(1) << "\n";
}

void check_states(const json& doc, const Mdp& mdp, const std::filesystem::path& path) {
    if (doc.value("n_states", -1) != mdp.n_states()) {
        throw ParseError(path.string() + ": solution was computed for a model with " +
                         std::to_string(doc.value("n_states", -1)) +
                         " states, not " + std::to_string(mdp.n_states()));
    }
}

// +infinity (unreachable augmented cells) is stored as null.
json encode_row(const std::vector<double>& row) {
    json out = json::array();
    for (double v : row) {
        if (std::isinf(v)) {
            out.push_back(nullptr);
        } else {
            out.push_back(v);
        }
    }
    return out;
}

std::vector<double> decode_row(const json& row) {
    std::vector<double> out;
    out.reserve(row.size());
    for (const json& v : row) {
        out.push_back(v.is_null() ? std::numeric_limits<double>::infinity()
                                  : v.get<double>());
    }
    return out;
}

}  // namespace

void save_value_table(const ValueTable& table, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "cvarplan-solution";
    doc["version"] = kSolutionFormatVersion;
    doc["kind"] = "expected-value";
    doc["n_states"] = table.values.size();
    doc["values"] = table.values;
    doc["policy"] = table.policy;
    doc["sweeps"] = table.sweeps;
    write_document(doc, path);
}

ValueTable load_value_table(const std::filesystem::path& path, const Mdp& mdp) {
    const json doc = read_document(path, "expected-value");
    check_states(doc, mdp, path);
    ValueTable table;
    table.values = doc.at("values").get<std::vector<double>>();
    table.policy = doc.at("policy").get<StationaryPolicy>();
    table.sweeps = doc.value("sweeps", 0);
    return table;
}

void save_worst_case(const WorstCaseSolution& sol, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "cvarplan-solution";
    doc["version"] = kSolutionFormatVersion;
    doc["kind"] = "worst-case";
    doc["n_states"] = sol.v_worst.size();
    doc["v_worst"] = sol.v_worst;
    doc["q_worst"] = sol.q_worst;
    doc["policy"] = sol.policy;
    doc["sweeps"] = sol.sweeps;
    write_document(doc, path);
}

WorstCaseSolution load_worst_case(const std::filesystem::path& path, const Mdp& mdp) {
    const json doc = read_document(path, "worst-case");
    check_states(doc, mdp, path);
    WorstCaseSolution sol;
    sol.v_worst = doc.at("v_worst").get<std::vector<double>>();
    sol.q_worst = doc.at("q_worst").get<std::vector<std::vector<double>>>();
    sol.policy = doc.at("policy").get<StationaryPolicy>();
    sol.sweeps = doc.value("sweeps", 0);
    return sol;
}

void save_cvar_solution(const CvarSolution& sol, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "cvarplan-solution";
    doc["version"] = kSolutionFormatVersion;
    doc["kind"] = "cvar";
    doc["n_states"] = sol.values.size();
    doc["ygrid"] = sol.grid.points;
    doc["values"] = sol.values;
    doc["greedy"] = sol.greedy;
    doc["sweeps"] = sol.sweeps;
    write_document(doc, path);
}

CvarSolution load_cvar_solution(const std::filesystem::path& path, const Mdp& mdp) {
    const json doc = read_document(path, "cvar");
    check_states(doc, mdp, path);
    CvarSolution sol;
    sol.grid.points = doc.at("ygrid").get<std::vector<double>>();
    sol.values = doc.at("values").get<std::vector<std::vector<double>>>();
    sol.greedy = doc.at("greedy").get<std::vector<std::vector<int>>>();
    sol.sweeps = doc.value("sweeps", 0);
    sol.rebuild_envelope_cache();
    return sol;
}

void save_lex_solution(const LexSolution& sol, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "cvarplan-solution";
    doc["version"] = kSolutionFormatVersion;
    doc["kind"] = "lex";
    doc["n_states"] = sol.values.size();
    doc["var"] = {{"value", sol.var.value},
                  {"alpha", sol.var.alpha},
                  {"episodes", sol.var.episodes},
                  {"convention",
                   sol.var.convention == VarConvention::kLower ? "lower" : "upper"}};
    doc["cost_grid"] = sol.grid.points;
    json rows = json::array();
    for (const auto& row : sol.values) {
        rows.push_back(encode_row(row));
    }
    doc["values"] = std::move(rows);
    doc["root_feasible"] = sol.root_feasible;
    doc["q_worst"] = sol.q_worst;
    doc["v_worst"] = sol.v_worst;
    doc["worst_policy"] = sol.worst_policy;
    doc["sweeps"] = sol.sweeps;
    write_document(doc, path);
}

LexSolution load_lex_solution(const std::filesystem::path& path, const Mdp& mdp) {
    const json doc = read_document(path, "lex");
    check_states(doc, mdp, path);
    LexSolution sol;
    const json& var = doc.at("var");
    sol.var.value = var.at("value").get<double>();
    sol.var.alpha = var.at("alpha").get<double>();
    sol.var.episodes = var.at("episodes").get<int>();
    sol.var.convention = var.at("convention").get<std::string>() == "upper"
                             ? VarConvention::kUpper
                             : VarConvention::kLower;
    sol.grid.points = doc.at("cost_grid").get<std::vector<double>>();
    for (const json& row : doc.at("values")) {
        sol.values.push_back(decode_row(row));
    }
    sol.root_feasible = doc.value("root_feasible", false);
    sol.q_worst = doc.at("q_worst").get<std::vector<std::vector<double>>>();
    sol.v_worst = doc.at("v_worst").get<std::vector<double>>();
    sol.worst_policy = doc.at("worst_policy").get<StationaryPolicy>();
    sol.sweeps = doc.value("sweeps", 0);
    return sol;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "cvarplan-manifest";
    doc["version"] = kSolutionFormatVersion;
    doc["kind"] = "manifest";
    doc["domain"] = manifest.domain;
    doc["report_offset"] = manifest.report_offset;
    doc["alphas"] = manifest.alphas;
    doc["config_hash"] = manifest.config_hash;
    doc["model_file"] = manifest.model_file;
    doc["model_hash"] = manifest.model_hash;
    doc["var_convention"] = manifest.var_convention;
    doc["xi_tol"] = manifest.xi_tol;
    doc["ev_file"] = manifest.ev_file;
    doc["worst_file"] = manifest.worst_file;
    doc["cvar_files"] = manifest.cvar_files;
    doc["lex_files"] = manifest.lex_files;
    doc["timings_s"] = manifest.timings_s;
    write_document(doc, path);
}

Manifest load_manifest(const std::filesystem::path& path) {
    const json doc = read_document(path, "manifest");
    Manifest manifest;
    manifest.domain = doc.at("domain").get<std::string>();
    manifest.report_offset = doc.value("report_offset", 0.0);
    manifest.alphas = doc.at("alphas").get<std::vector<double>>();
    manifest.config_hash = doc.at("config_hash").get<std::string>();
    manifest.model_file = doc.at("model_file").get<std::string>();
    manifest.model_hash = doc.at("model_hash").get<std::string>();
    manifest.var_convention = doc.value("var_convention", "lower");
    manifest.xi_tol = doc.value("xi_tol", 1e-6);
    manifest.ev_file = doc.at("ev_file").get<std::string>();
    manifest.worst_file = doc.at("worst_file").get<std::string>();
    manifest.cvar_files = doc.at("cvar_files").get<std::map<std::string, std::string>>();
    manifest.lex_files = doc.at("lex_files").get<std::map<std::string, std::string>>();
    manifest.timings_s = doc.value("timings_s", std::map<std::string, double>{});
    return manifest;
}

}  // namespace cvarplan
