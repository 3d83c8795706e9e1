#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pokerank/btfit.hpp"
#include "pokerank/core.hpp"
#include "pokerank/rating.hpp"

namespace pokerank {

enum class Metric { Elo, Glicko, Gxe, Fhbt, WinRate };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);  // elo/glicko/gxe/fhbt/winrate

struct LeaderboardConfig {
    rating::EloConfig elo;
    rating::GlickoConfig glicko;
    rating::GxeConfig gxe;
    bt::FitConfig bt;
    std::int64_t bt_min_battles = 250;  // below this, fhbt is omitted from the entry
    int bootstrap_replicates = 0;       // 0 = point estimates without intervals
    std::uint64_t bootstrap_seed = 0;
    Metric primary = Metric::Fhbt;
};

// One entry per agent, sorted by the primary metric descending (agents
// without an eligible FH-BT rating sort below all rated ones when the
// primary is Fhbt; ties break by Glicko rating, then name). All matches must
// belong to one format; ratings never mix ladders.
std::vector<LeaderboardEntry> build_leaderboard(const std::vector<MatchRecord>& matches,
                                                const LeaderboardConfig& config = {});

// Assembly step shared by build_leaderboard and the live service: combines
// already-computed online states with a Bradley-Terry fit into sorted
// entries. The fit may be empty (no FH-BT column yet).
std::vector<LeaderboardEntry> assemble_leaderboard(
    const std::map<AgentId, RatingState>& elo_states,
    const std::map<AgentId, RatingState>& glicko_states, const bt::BTFit& fit,
    const LeaderboardConfig& config);

std::vector<MatchRecord> filter_format(const std::vector<MatchRecord>& matches,
                                       const std::string& format);

// Sort key for an entry under the given metric (fhbt of an ineligible entry
// is minus infinity).
double metric_value(const LeaderboardEntry& e, Metric m);

// Header plus one tab-separated row per entry.
std::string render_leaderboard(const std::vector<LeaderboardEntry>& entries);

}  // namespace pokerank
