#include "cvarplan/domains.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "cvarplan/errors.hpp"
#include "cvarplan/mdp_io.hpp"

namespace cvarplan {

namespace {

int clamp_int(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

double inventory_stage_shift(const InventoryParams& params) {
    // Best possible stage: a full inventory sold out with nothing purchased
    // and nothing held.
    return params.capacity * params.revenue;
}

double inventory_report_offset(const InventoryParams& params) {
    // Raw episode cost is stages * K - total profit. The conventional scale
    // anchors break-even (zero net profit) at 400.
    return 400.0 - params.stages * inventory_stage_shift(params);
}

Mdp build_inventory_control(const InventoryParams& params) {
    if (params.stages < 1 || params.capacity < 1 || params.purchase_price < 0 ||
        params.revenue < 0 || params.holding_price < 0 ||
        params.initial_demand < 0 || params.initial_demand > params.capacity ||
        params.demand_step_range < 0) {
        throw ValidationError("invalid inventory parameters");
    }

    const int cap = params.capacity;
    const double shift = inventory_stage_shift(params);

    // A stage has two steps. At the decision state (stage, n, d_prev) the
    // agent pays for the purchase before the stage's demand is known; the
    // demand then realises as a stochastic transition into (stage, stock, d),
    // whose single selling step books revenue and holding deterministically.
    // Episode cost stays stages * K - total profit.
    Mdp mdp;
    const StateId goal = mdp.add_state("goal", true);
    const StateId done = mdp.add_state("done");
    mdp.add_action(done, "finish", 0.0, {{goal, 1.0}});

    struct Key {
        bool realised;
        int stage;
        int units;  // on-hand inventory, or post-purchase stock
        int demand;  // previous demand, or the realised demand
        bool operator<(const Key& o) const {
            return std::tie(realised, stage, units, demand) <
                   std::tie(o.realised, o.stage, o.units, o.demand);
        }
    };
    std::map<Key, StateId> ids;
    std::deque<Key> queue;
    const auto state_for = [&](const Key& key) {
        auto it = ids.find(key);
        if (it != ids.end()) {
            return it->second;
        }
        const std::string name =
            (key.realised ? "r" : "s") + std::to_string(key.stage) +
            (key.realised ? "_h" : "_n") + std::to_string(key.units) + "_d" +
            std::to_string(key.demand);
        const StateId id = mdp.add_state(name);
        ids.emplace(key, id);
        queue.push_back(key);
        return id;
    };

    mdp.initial = state_for({false, 1, 0, params.initial_demand});
    const int n_steps = 2 * params.demand_step_range + 1;
    while (!queue.empty()) {
        const Key key = queue.front();
        queue.pop_front();
        const StateId s = ids.at(key);
        if (!key.realised) {
            const int n = key.units;
            for (int a = 0; a <= cap - n; ++a) {
                std::vector<Successor> successors;
                for (int step = -params.demand_step_range;
                     step <= params.demand_step_range; ++step) {
                    const int d = clamp_int(key.demand + step, 0, cap);
                    successors.push_back(
                        {state_for({true, key.stage, n + a, d}), 1.0 / n_steps});
                }
                mdp.add_action(s, "buy" + std::to_string(a),
                               a * params.purchase_price, std::move(successors));
            }
        } else {
            const int stock = key.units;
            const int d = key.demand;
            const int leftover = std::max(stock - d, 0);
            const double cost = shift - std::min(d, stock) * params.revenue +
                                leftover * params.holding_price;
            const StateId next =
                key.stage == params.stages
                    ? done
                    : state_for({false, key.stage + 1, leftover, d});
            mdp.add_action(s, "sell", cost, {{next, 1.0}});
        }
    }
    return mdp;
}

Mdp build_betting_game(const BettingParams& params) {
    if (params.stages < 1 || params.initial_money < 0 || params.money_cap < 1 ||
        params.initial_money > params.money_cap || params.max_bet < 0 ||
        params.jackpot_multiplier < 0 || params.p_win < 0 || params.p_jackpot < 0 ||
        params.p_lose < 0 ||
        std::abs(params.p_win + params.p_jackpot + params.p_lose - 1.0) > kProbTol) {
        throw ValidationError("invalid betting parameters");
    }

    Mdp mdp;
    const StateId goal = mdp.add_state("goal", true);

    std::map<std::pair<int, int>, StateId> ids;  // (money, stage)
    std::deque<std::pair<int, int>> queue;
    const auto state_for = [&](int money, int stage) {
        const auto key = std::make_pair(money, stage);
        auto it = ids.find(key);
        if (it != ids.end()) {
            return it->second;
        }
        const StateId id = mdp.add_state("m" + std::to_string(money) + "_k" +
                                         std::to_string(stage));
        ids.emplace(key, id);
        queue.push_back(key);
        return id;
    };

    mdp.initial = state_for(params.initial_money, 1);
    while (!queue.empty()) {
        const auto [money, stage] = queue.front();
        queue.pop_front();
        const StateId s = ids.at(std::make_pair(money, stage));
        if (stage > params.stages) {
            mdp.add_action(s, "cashout", static_cast<double>(params.money_cap - money),
                           {{goal, 1.0}});
            continue;
        }
        for (int bet = 0; bet <= std::min(params.max_bet, money); ++bet) {
            const int win = clamp_int(money + bet, 0, params.money_cap);
            const int jackpot = clamp_int(money + params.jackpot_multiplier * bet, 0,
                                          params.money_cap);
            const int lose = clamp_int(money - bet, 0, params.money_cap);
            // add_action merges duplicate outcomes (always the case for bet 0).
            mdp.add_action(s, "bet" + std::to_string(bet), 0.0,
                           {{state_for(win, stage + 1), params.p_win},
                            {state_for(jackpot, stage + 1), params.p_jackpot},
                            {state_for(lose, stage + 1), params.p_lose}});
        }
    }
    return mdp;
}

DstConfig default_dst_config() {
    // Every descent into the pocket risks an immediate mid-value capture
    // (a), which pins the cost tail regardless of what happens below. The
    // pocket holds a guaranteed three-wide shelf (b), a richer two-cell
    // shelf (c) whose pair covers its own approach fan, and a top-value
    // treasure (d) at the bottom of a stall-prone chimney.
    DstConfig config;
    config.grid = {
        "..S.......",
        "..........",
        "....######",
        "#a.a######",
        "#......###",
        "#....cc###",
        "#bbb#.####",
        "#####.####",
        "#####.####",
        "#####d####",
    };
    config.treasure_values = {{'a', 150.0}, {'b', 300.0}, {'c', 370.0},
                              {'d', 495.0}};
    return config;
}

DstConfig parse_dst_layout(const std::string& text) {
    DstConfig config = default_dst_config();
    config.grid.clear();
    config.treasure_values.clear();

    enum class Section { kNone, kGrid, kTreasures };
    Section section = Section::kNone;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (line.empty() || line.front() == ';') {
            continue;
        }
        if (line == "grid") {
            section = Section::kGrid;
            continue;
        }
        if (line == "treasures") {
            section = Section::kTreasures;
            continue;
        }
        if (section == Section::kGrid) {
            config.grid.push_back(line);
        } else if (section == Section::kTreasures) {
            std::istringstream fields(line);
            std::string key;
            double value = 0.0;
            if (!(fields >> key >> value) || key.size() != 1) {
                throw ParseError("layout line " + std::to_string(line_no) +
                                 ": expected '<glyph> <value>'");
            }
            config.treasure_values[key[0]] = value;
        } else {
            throw ParseError("layout line " + std::to_string(line_no) +
                             ": content before 'grid' section");
        }
    }
    if (config.grid.empty()) {
        throw ParseError("layout has no grid rows");
    }
    return config;
}

DstConfig load_dst_layout(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open layout file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_dst_layout(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string write_dst_layout(const DstConfig& config) {
    std::ostringstream out;
    out << "grid\n";
    for (const std::string& row : config.grid) {
        out << row << "\n";
    }
    out << "treasures\n";
    for (const auto& [key, value] : config.treasure_values) {
        out << key << " " << value << "\n";
    }
    return out.str();
}

namespace {

struct DstCheck {
    int rows = 0;
    int cols = 0;
    int start_row = -1;
    int start_col = -1;
};

DstCheck check_dst_config(const DstConfig& config) {
    DstCheck info;
    info.rows = static_cast<int>(config.grid.size());
    if (info.rows == 0) {
        throw ValidationError("layout has no rows");
    }
    info.cols = static_cast<int>(config.grid.front().size());
    if (std::abs(config.move_success + 2.0 * config.slip - 1.0) > kProbTol) {
        throw ValidationError("move_success + 2 * slip must equal 1");
    }
    if (config.horizon < 1 || config.step_cost < 0) {
        throw ValidationError("invalid horizon or step cost");
    }
    for (const auto& [key, value] : config.treasure_values) {
        if (!(value > 0.0) || !(value < config.terminal_base)) {
            throw ValidationError(std::string("treasure '") + key +
                                  "' value must lie in (0, terminal_base)");
        }
    }
    for (int r = 0; r < info.rows; ++r) {
        const std::string& row = config.grid[static_cast<size_t>(r)];
        if (static_cast<int>(row.size()) != info.cols) {
            throw ValidationError("layout rows have unequal length");
        }
        for (int c = 0; c < info.cols; ++c) {
            const char glyph = row[static_cast<size_t>(c)];
            if (glyph == 'S') {
                if (info.start_row >= 0) {
                    throw ValidationError("layout has more than one start cell");
                }
                info.start_row = r;
                info.start_col = c;
            } else if (glyph != '.' && glyph != '#' &&
                       config.treasure_values.count(glyph) == 0) {
                throw ValidationError(std::string("unknown glyph '") + glyph +
                                      "' in layout");
            }
        }
    }
    if (info.start_row < 0) {
        throw ValidationError("layout has no start cell");
    }
    return info;
}

}  // namespace

Mdp build_deep_sea_treasure(const DstConfig& config) {
    const DstCheck info = check_dst_config(config);
    // Compass ring; slips go to the two neighbouring directions.
    static constexpr const char* kDirNames[8] = {"n", "ne", "e", "se",
                                                 "s", "sw", "w", "nw"};
    static constexpr int kDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    static constexpr int kDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};

    const auto glyph_at = [&](int r, int c) {
        return config.grid[static_cast<size_t>(r)][static_cast<size_t>(c)];
    };
    const auto passable = [&](int r, int c) {
        return r >= 0 && r < info.rows && c >= 0 && c < info.cols &&
               glyph_at(r, c) != '#';
    };

    Mdp mdp;
    const StateId goal = mdp.add_state("goal", true);

    std::map<std::tuple<int, int, int>, StateId> ids;  // (row, col, t)
    std::deque<std::tuple<int, int, int>> queue;
    const auto state_for = [&](int r, int c, int t) {
        const auto key = std::make_tuple(r, c, t);
        auto it = ids.find(key);
        if (it != ids.end()) {
            return it->second;
        }
        const StateId id = mdp.add_state("r" + std::to_string(r) + "c" +
                                         std::to_string(c) + "_t" + std::to_string(t));
        ids.emplace(key, id);
        queue.push_back(key);
        return id;
    };

    mdp.initial = state_for(info.start_row, info.start_col, 0);
    while (!queue.empty()) {
        const auto [r, c, t] = queue.front();
        queue.pop_front();
        const StateId s = ids.at(std::make_tuple(r, c, t));
        const char glyph = glyph_at(r, c);

        if (config.treasure_values.count(glyph) != 0) {
            mdp.add_action(s, "collect",
                           config.terminal_base - config.treasure_values.at(glyph),
                           {{goal, 1.0}});
            continue;
        }
        if (t >= config.horizon) {
            mdp.add_action(s, "timeout", config.terminal_base, {{goal, 1.0}});
            continue;
        }
        for (int dir = 0; dir < 8; ++dir) {
            std::vector<Successor> successors;
            const auto outcome = [&](int d, double p) {
                int nr = r + kDr[d];
                int nc = c + kDc[d];
                if (!passable(nr, nc)) {
                    nr = r;  // blocked moves keep the vessel in place
                    nc = c;
                }
                successors.push_back({state_for(nr, nc, t + 1), p});
            };
            outcome(dir, config.move_success);
            outcome((dir + 1) % 8, config.slip);
            outcome((dir + 7) % 8, config.slip);
            mdp.add_action(s, kDirNames[dir], config.step_cost, std::move(successors));
        }
    }
    return mdp;
}

Mdp build_desk_instance() {
    Mdp mdp;
    const StateId s0 = mdp.add_state("s0");
    const StateId s1 = mdp.add_state("s1");
    const StateId s2 = mdp.add_state("s2");
    const StateId s3 = mdp.add_state("s3");
    const StateId s4 = mdp.add_state("s4");
    const StateId g = mdp.add_state("g", true);
    mdp.initial = s0;

    mdp.add_action(s0, "a", 0.0, {{s1, 0.85}, {s2, 0.15}});
    mdp.add_action(s1, "e", 8.0, {{g, 1.0}});
    mdp.add_action(s1, "d", 2.0, {{g, 0.9}, {s3, 0.1}});
    mdp.add_action(s1, "c", 0.0, {{g, 0.9}, {s4, 0.1}});
    mdp.add_action(s2, "f", 10.0, {{g, 1.0}});
    mdp.add_action(s3, "b3", 7.0, {{g, 1.0}});
    mdp.add_action(s4, "b4", 20.0, {{g, 1.0}});
    return mdp;
}

Mdp load_mdp_file(const std::filesystem::path& path) {
    Mdp mdp = read_mdp_file(path);
    require_valid(mdp);
    return mdp;
}

}  // namespace cvarplan
