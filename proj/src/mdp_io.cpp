#include "cvarplan/mdp_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cvarplan/errors.hpp"

namespace cvarplan {

using nlohmann::json;

namespace {

void reject_unknown_fields(const json& object, const std::set<std::string>& known,
                           const std::string& context) {
    for (auto it = object.begin(); it != object.end(); ++it) {
        if (known.count(it.key()) == 0) {
            throw ParseError("unknown field '" + it.key() + "' in " + context);
        }
    }
}

const json& require_field(const json& object, const std::string& key,
                          const std::string& context) {
    auto it = object.find(key);
    if (it == object.end()) {
        throw ParseError("missing field '" + key + "' in " + context);
    }
    return *it;
}

std::string require_string(const json& value, const std::string& context) {
    if (!value.is_string()) {
        throw ParseError(context + " must be a string");
    }
    return value.get<std::string>();
}

double require_number(const json& value, const std::string& context) {
    if (!value.is_number()) {
        throw ParseError(context + " must be a decimal number");
    }
    return value.get<double>();
}

StateId lookup_state(const Mdp& mdp, const std::string& name,
                     const std::string& context) {
    const StateId id = mdp.state_index(name);
    if (id < 0) {
        throw ParseError("unknown state '" + name + "' in " + context);
    }
    return id;
}

}  // namespace

Mdp parse_mdp_document(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("MDP document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError("MDP document root must be an object");
    }
    reject_unknown_fields(doc, {"states", "initial", "goals", "transitions"},
                          "MDP document");

    Mdp mdp;
    const json& states = require_field(doc, "states", "MDP document");
    if (!states.is_array() || states.empty()) {
        throw ParseError("'states' must be a non-empty list of names");
    }
    for (const json& name : states) {
        mdp.add_state(require_string(name, "state name"));
    }

    const json& goals = require_field(doc, "goals", "MDP document");
    if (!goals.is_array()) {
        throw ParseError("'goals' must be a list of state names");
    }
    for (const json& name : goals) {
        const StateId id = lookup_state(mdp, require_string(name, "goal name"), "goals");
        mdp.goal[static_cast<size_t>(id)] = 1;
    }

    mdp.initial = lookup_state(
        mdp, require_string(require_field(doc, "initial", "MDP document"), "initial"),
        "initial");

    const json& transitions = require_field(doc, "transitions", "MDP document");
    if (!transitions.is_array()) {
        throw ParseError("'transitions' must be a list");
    }
    int row = 0;
    for (const json& entry : transitions) {
        const std::string context = "transitions[" + std::to_string(row++) + "]";
        if (!entry.is_object()) {
            throw ParseError(context + " must be an object");
        }
        reject_unknown_fields(entry, {"state", "action", "cost", "successors"}, context);
        const StateId s = lookup_state(
            mdp, require_string(require_field(entry, "state", context), context + ".state"),
            context);
        const std::string action_name =
            require_string(require_field(entry, "action", context), context + ".action");
        const double cost =
            require_number(require_field(entry, "cost", context), context + ".cost");

        const json& successors = require_field(entry, "successors", context);
        if (!successors.is_array() || successors.empty()) {
            throw ParseError(context + ".successors must be a non-empty list");
        }
        std::vector<Successor> parsed;
        int k = 0;
        for (const json& succ : successors) {
            const std::string succ_context = context + ".successors[" + std::to_string(k++) + "]";
            if (!succ.is_object()) {
                throw ParseError(succ_context + " must be an object");
            }
            reject_unknown_fields(succ, {"state", "p"}, succ_context);
            const StateId target = lookup_state(
                mdp, require_string(require_field(succ, "state", succ_context), succ_context),
                succ_context);
            const double p = require_number(require_field(succ, "p", succ_context),
                                            succ_context + ".p");
            for (const Successor& existing : parsed) {
                if (existing.state == target) {
                    throw ParseError("duplicate successor '" +
                                     mdp.state_names[static_cast<size_t>(target)] + "' in " +
                                     context);
                }
            }
            parsed.push_back({target, p});
        }
        if (mdp.action_index(s, action_name) >= 0) {
            throw ParseError("duplicate action '" + action_name + "' in " + context);
        }
        mdp.add_action(s, action_name, cost, std::move(parsed));
    }
    return mdp;
}

std::string write_mdp_document(const Mdp& mdp) {
    json doc;
    doc["states"] = mdp.state_names;
    doc["initial"] = mdp.state_names[static_cast<size_t>(mdp.initial)];
    json goals = json::array();
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_goal(s)) {
            goals.push_back(mdp.state_names[static_cast<size_t>(s)]);
        }
    }
    doc["goals"] = std::move(goals);

    json transitions = json::array();
    for (StateId s = 0; s < mdp.n_states(); ++s) {
        for (const MdpAction& action : mdp.actions_at(s)) {
            json successors = json::array();
            for (const Successor& succ : action.successors) {
                successors.push_back(
                    {{"state", mdp.state_names[static_cast<size_t>(succ.state)]},
                     {"p", succ.probability}});
            }
            transitions.push_back({{"state", mdp.state_names[static_cast<size_t>(s)]},
                                   {"action", action.name},
                                   {"cost", action.cost},
                                   {"successors", std::move(successors)}});
        }
    }
    doc["transitions"] = std::move(transitions);
    return doc.dump(2) + "\n";
}

Mdp read_mdp_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open MDP file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_mdp_document(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_mdp_file(const Mdp& mdp, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open file for writing: " + path.string());
    }
    out << write_mdp_document(mdp);
}

}  // namespace cvarplan
