#pragma once

#include <filesystem>
#include <string>

#include "cvarplan/mdp.hpp"

namespace cvarplan {

// MDP document: a JSON object with exactly the fields `states`, `initial`,
// `goals` and `transitions`, the latter a list of
// {state, action, cost, successors: [{state, p}]}. Unknown fields are
// rejected by name. Parsing does not validate SSP invariants; callers that
// need a valid model run validate_mdp afterwards (load_mdp_file does).
Mdp parse_mdp_document(const std::string& text);
std::string write_mdp_document(const Mdp& mdp);

Mdp read_mdp_file(const std::filesystem::path& path);
void write_mdp_file(const Mdp& mdp, const std::filesystem::path& path);

}  // namespace cvarplan
