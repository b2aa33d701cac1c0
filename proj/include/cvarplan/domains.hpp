#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cvarplan/mdp.hpp"

namespace cvarplan {

// Stochastic inventory control: each stage the agent purchases stock at unit
// price before the stage's demand is known, sells up to the realised demand
// at unit revenue and pays a holding price on leftovers. Demand follows a
// clamped random walk; the previous stage's demand is part of the decision
// state. Each stage is split into a purchase step and a deterministic
// post-realisation selling step so costs stay per-(state, action); selling
// costs are shifted by the maximum single-stage profit to keep them
// nonnegative.
struct InventoryParams {
    int stages = 10;
    int capacity = 20;       // N
    double purchase_price = 1.0;
    double revenue = 3.0;
    double holding_price = 1.0;
    int initial_demand = 10;
    int demand_step_range = 5;  // demand step uniform over [-range, range]
};

Mdp build_inventory_control(const InventoryParams& params = {});

// Maximum achievable single-stage profit (the per-stage cost shift K).
double inventory_stage_shift(const InventoryParams& params = {});

// Reporting offset that maps raw episode costs (stages * K - total profit)
// onto the conventional scale where a cost under 400 is a net profit.
double inventory_report_offset(const InventoryParams& params = {});

// Multi-round betting: each stage the agent may bet up to max_bet (budget
// permitting); a win returns the stake, a jackpot returns jackpot_multiplier
// times the stake, a loss forfeits it. Money is clamped to [0, cap] after the
// payout. All cost is charged at the end: cap - final money.
struct BettingParams {
    int stages = 10;
    int initial_money = 5;
    int money_cap = 100;
    int max_bet = 5;
    double p_win = 0.7;
    double p_jackpot = 0.05;
    double p_lose = 0.25;
    int jackpot_multiplier = 10;
};

Mdp build_betting_game(const BettingParams& params = {});

// Grid-world treasure hunt. The agent steers a vessel with 8 compass moves;
// the intended cell is reached with probability move_success and the two
// cells at +-45 degrees with probability slip each. Moves into walls or off
// the grid leave the vessel in place. Every move costs step_cost; entering a
// treasure cell ends the episode with terminal cost terminal_base - value;
// exhausting the horizon costs terminal_base.
struct DstConfig {
    std::vector<std::string> grid;           // rows of glyphs: S . # or a treasure key
    std::map<char, double> treasure_values;  // key glyph -> treasure value
    int horizon = 15;
    double step_cost = 5.0;
    double terminal_base = 500.0;
    double move_success = 0.6;
    double slip = 0.2;
};

// The layout shipped with the toolkit (also available as data/dst_default.layout).
DstConfig default_dst_config();

// Layout file: a `grid` section of glyph rows followed by a `treasures`
// section of `<glyph> <value>` lines; `#` starts a comment.
DstConfig parse_dst_layout(const std::string& text);
DstConfig load_dst_layout(const std::filesystem::path& path);
std::string write_dst_layout(const DstConfig& config);

Mdp build_deep_sea_treasure(const DstConfig& config = default_dst_config());

// Six-state instance small enough to check every number by hand: three
// stationary policies that differ only at one state, two of which tie on
// CVaR at alpha = 0.1 while differing in expectation.
Mdp build_desk_instance();

// Reads, parses and validates an MDP document. Throws ParseError or
// ValidationError.
Mdp load_mdp_file(const std::filesystem::path& path);

}  // namespace cvarplan
